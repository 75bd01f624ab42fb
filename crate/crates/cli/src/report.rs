//! Serialized forms of fits, effect estimates and simulation summaries.

use std::fmt::Write as _;

use clmbr::solver::{GroupingMap, Termination};
use clmbr::{BoundaryFlag, FitResult, LinkFamily, Method};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const FIT_SCHEMA: &str = "clmbr.fit/1";
pub const EFFECTS_SCHEMA: &str = "clmbr.effects/1";
pub const SIM_SCHEMA: &str = "clmbr.simulation/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Cutpoint,
    Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub name: String,
    pub kind: ParamKind,
    pub estimate: f64,
    /// `null` when the information matrix could not be inverted.
    pub se: Option<f64>,
    pub flag: BoundaryFlag,
    /// Coefficients only: the covariate takes just the values 0 and 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub method: Method,
    pub link: LinkFamily,
    pub response: String,
    pub n: usize,
    pub categories: usize,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub loglik: f64,
    pub max_abs_adjusted_score: Option<f64>,
    pub boundary: bool,
    pub parameters: Vec<ParamRow>,
    /// Covariance of the fitted parameters in `parameters` order.
    pub vcov: Vec<Vec<Option<f64>>>,
    pub grouping: GroupingMap,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Cutpoint names on the original category scale: `alpha{j}` separates
/// categories `<= j` from `> j`.
fn cutpoint_names(grouping: &GroupingMap) -> Vec<String> {
    (1..grouping.original_categories)
        .filter(|j| !grouping.merged.contains(j))
        .map(|j| format!("alpha{j}"))
        .collect()
}

impl FitReport {
    pub fn new(
        res: &FitResult,
        response: &str,
        covariates: &[String],
        binary: &[bool],
        n: usize,
        loglik: f64,
    ) -> Self {
        let flat = res.theta_hat.to_flat();
        let n_cut = res.theta_hat.alpha.len();
        let mut names = cutpoint_names(&res.grouping);
        names.extend(covariates.iter().cloned());
        let parameters = names
            .into_iter()
            .enumerate()
            .map(|(k, name)| ParamRow {
                name,
                kind: if k < n_cut { ParamKind::Cutpoint } else { ParamKind::Coefficient },
                estimate: flat[k],
                se: finite(res.se[k]),
                flag: res.boundary_flags[k],
                binary: (k >= n_cut).then(|| binary[k - n_cut]),
            })
            .collect();
        let vcov = res
            .vcov
            .row_iter()
            .map(|row| row.iter().map(|&v| finite(v)).collect())
            .collect();
        Self {
            schema: FIT_SCHEMA.to_string(),
            method: res.method,
            link: res.link,
            response: response.to_string(),
            n,
            categories: res.grouping.original_categories,
            converged: res.converged,
            termination: res.termination,
            iterations: res.iterations,
            loglik,
            max_abs_adjusted_score: res.trace.last().copied().and_then(finite),
            boundary: res.has_boundary(),
            parameters,
            vcov,
            grouping: res.grouping.clone(),
        }
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let report: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Failure::input(format!("{source}: not a fit report ({}: {})", e.path(), e.inner())))?;
        if report.schema != FIT_SCHEMA {
            return Err(Failure::input(format!(
                "{source}: unsupported schema '{}' (expected '{FIT_SCHEMA}')",
                report.schema
            )));
        }
        Ok(report)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["name", "kind", "estimate", "se", "flag"]).unwrap();
                for p in &self.parameters {
                    w.write_record([
                        p.name.clone(),
                        kind_name(p.kind).to_string(),
                        format!("{}", p.estimate),
                        p.se.map_or(String::new(), |s| format!("{s}")),
                        flag_name(p.flag).to_string(),
                    ])
                    .unwrap();
                }
                String::from_utf8(w.into_inner().unwrap()).unwrap()
            }
            Format::Table => {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "{} fit, {} link: {} observations, {} categories",
                    self.method, self.link, self.n, self.categories
                );
                let status = match self.termination {
                    Termination::Converged => "converged",
                    Termination::MaxIterations => "iteration limit reached",
                    Termination::Diverged => "diverging towards the boundary",
                    Termination::MergedCutpoints => "cutpoints merged",
                };
                let _ = writeln!(
                    s,
                    "{status} after {} iterations, log-likelihood {:.4}",
                    self.iterations, self.loglik
                );
                if !self.grouping.merged.is_empty() {
                    let m: Vec<String> = self.grouping.merged.iter().map(usize::to_string).collect();
                    let _ = writeln!(s, "empty categories merged upward: {}", m.join(", "));
                }
                let _ = writeln!(s, "{:<16} {:>12} {:>12}  flag", "parameter", "estimate", "se");
                for p in &self.parameters {
                    let se = p.se.map_or("-".to_string(), |v| format!("{v:.4}"));
                    let flag = if p.flag == BoundaryFlag::Interior { "" } else { flag_name(p.flag) };
                    let _ = writeln!(s, "{:<16} {:>12.4} {:>12}  {flag}", p.name, p.estimate, se);
                }
                s
            }
        }
    }
}

pub fn flag_name(f: BoundaryFlag) -> &'static str {
    match f {
        BoundaryFlag::Interior => "interior",
        BoundaryFlag::PlusInfinity => "plus_infinity",
        BoundaryFlag::MinusInfinity => "minus_infinity",
        BoundaryFlag::MergedCutpoint => "merged_cutpoint",
    }
}

fn kind_name(k: ParamKind) -> &'static str {
    match k {
        ParamKind::Cutpoint => "cutpoint",
        ParamKind::Coefficient => "coefficient",
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub covariate: String,
    pub beta: f64,
    pub se_beta: Option<f64>,
    pub flag: BoundaryFlag,
    pub gamma: f64,
    pub se_gamma: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub binary: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsReport {
    pub schema: String,
    pub method: Method,
    pub link: LinkFamily,
    pub level: f64,
    /// The closed form used for this link is an approximation.
    pub approximate: bool,
    pub effects: Vec<EffectRow>,
}

impl EffectsReport {
    pub fn render(&self, format: Format) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        match format {
            Format::Json => to_json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["covariate", "beta", "se_beta", "gamma", "se_gamma", "ci_lower", "ci_upper"])
                    .unwrap();
                for e in &self.effects {
                    w.write_record([
                        e.covariate.clone(),
                        format!("{}", e.beta),
                        opt(e.se_beta),
                        format!("{}", e.gamma),
                        opt(e.se_gamma),
                        opt(e.ci_lower),
                        opt(e.ci_upper),
                    ])
                    .unwrap();
                }
                String::from_utf8(w.into_inner().unwrap()).unwrap()
            }
            Format::Table => {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "ordinal superiority from the {} fit, {} link{}",
                    self.method,
                    self.link,
                    if self.approximate { " (approximate closed form)" } else { "" }
                );
                let pct = 100.0 * self.level;
                let _ = writeln!(
                    s,
                    "{:<16} {:>9} {:>9} {:>9}  {pct}% interval",
                    "covariate", "beta", "gamma", "se"
                );
                for e in &self.effects {
                    let se = e.se_gamma.map_or("-".into(), |v| format!("{v:.4}"));
                    let ci = match (e.ci_lower, e.ci_upper) {
                        (Some(a), Some(b)) => format!("({a:.4}, {b:.4})"),
                        _ => "-".into(),
                    };
                    let _ = writeln!(s, "{:<16} {:>9.4} {:>9.4} {:>9}  {ci}", e.covariate, e.beta, e.gamma, se);
                }
                s
            }
        }
    }
}
