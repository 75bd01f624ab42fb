//! CSV ingestion: header row required, comma separated, `.` decimals.

use std::collections::BTreeSet;
use std::path::Path;

use clmbr::Dataset;

use crate::failure::Failure;

pub struct Columns<'a> {
    pub response: &'a str,
    /// `None` selects every column other than the response and weights.
    pub covariates: Option<&'a [String]>,
    pub weights: Option<&'a str>,
    /// Declared number of categories; allows unobserved categories.
    pub categories: Option<usize>,
}

pub struct Loaded {
    pub data: Dataset,
    pub covariates: Vec<String>,
    /// Whether each covariate only takes the values 0 and 1.
    pub binary: Vec<bool>,
}

pub fn read_csv(path: &Path, cols: &Columns) -> Result<Loaded, Failure> {
    let file = std::fs::File::open(path)
        .map_err(|e| Failure::input(format!("cannot open {}: {e}", path.display())))?;
    read(file, &path.display().to_string(), cols)
}

pub fn read(input: impl std::io::Read, source: &str, cols: &Columns) -> Result<Loaded, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Failure::input(format!("{source}: cannot read header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Failure::input(format!("{source}: empty file (a header row is required)")));
    }
    let mut seen = BTreeSet::new();
    for h in headers.iter() {
        if !seen.insert(h) {
            return Err(Failure::input(format!("{source}: duplicate column '{h}' in header")));
        }
    }
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::input(format!(
                "{source}: no column named '{name}' (available: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let y_col = find(cols.response)?;
    let w_col = cols.weights.map(find).transpose()?;
    let covariates: Vec<String> = match cols.covariates {
        Some(names) => {
            let mut unique = BTreeSet::new();
            for n in names {
                if !unique.insert(n) {
                    return Err(Failure::input(format!("covariate '{n}' listed twice")));
                }
                if n == cols.response {
                    return Err(Failure::input(format!("'{n}' is the response and cannot be a covariate")));
                }
            }
            names.to_vec()
        }
        None => headers
            .iter()
            .filter(|h| *h != cols.response && Some(*h) != cols.weights)
            .map(str::to_string)
            .collect(),
    };
    let x_cols = covariates.iter().map(|n| find(n)).collect::<Result<Vec<_>, _>>()?;

    let mut y = Vec::new();
    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Failure::input(format!("{source}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<&str, Failure> {
            match rec.get(k) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Failure::input(format!(
                    "{source}: line {line}, column '{}': missing value",
                    &headers[k]
                ))),
            }
        };
        let raw = field(y_col)?;
        let yi: usize = raw.parse().ok().filter(|&v| v >= 1).ok_or_else(|| {
            Failure::input(format!(
                "{source}: line {line}, column '{}': response '{raw}' is not a positive integer category",
                cols.response
            ))
        })?;
        y.push(yi);
        let mut row = Vec::with_capacity(x_cols.len());
        for (&k, name) in x_cols.iter().zip(&covariates) {
            let raw = field(k)?;
            let v: f64 = raw.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Failure::input(format!("{source}: line {line}, column '{name}': '{raw}' is not a number"))
            })?;
            row.push(v);
        }
        rows.push(row);
        if let Some(k) = w_col {
            let raw = field(k)?;
            let w: f64 = raw.parse().map_err(|_| {
                Failure::input(format!(
                    "{source}: line {line}, column '{}': weight '{raw}' is not a number",
                    &headers[k]
                ))
            })?;
            weights.push(w);
        }
    }
    if y.is_empty() {
        return Err(Failure::input(format!("{source}: no data rows")));
    }

    let c = check_categories(&y, cols.response, cols.categories)?;
    let binary = (0..covariates.len())
        .map(|k| rows.iter().all(|r: &Vec<f64>| r[k] == 0.0 || r[k] == 1.0))
        .collect();
    let mut data = Dataset::new(y, rows, c)?;
    if w_col.is_some() {
        data = data.with_weights(weights)?;
    }
    Ok(Loaded {
        data,
        covariates,
        binary,
    })
}

fn check_categories(y: &[usize], name: &str, declared: Option<usize>) -> Result<usize, Failure> {
    let observed: BTreeSet<usize> = y.iter().copied().collect();
    let max = *observed.iter().next_back().expect("non-empty");
    if let Some(c) = declared {
        if max > c {
            return Err(Failure::input(format!(
                "response '{name}' has category {max} but only {c} categories were declared"
            )));
        }
        return Ok(c);
    }
    if observed.len() != max {
        let remap: Vec<String> = observed
            .iter()
            .enumerate()
            .filter(|(i, &v)| i + 1 != v)
            .map(|(i, v)| format!("{v} -> {}", i + 1))
            .collect();
        let codes: Vec<String> = observed.iter().map(usize::to_string).collect();
        return Err(Failure::input(format!(
            "response '{name}' uses categories {{{}}}; categories must be consecutive integers from 1. \
             Remap {} or pass --categories to declare unobserved categories",
            codes.join(", "),
            remap.join(", ")
        )));
    }
    Ok(max)
}
