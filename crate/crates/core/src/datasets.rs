//! Bundled example data.

use crate::model::Dataset;

/// Wine bitterness data as CSV: `temperature` (1 = warm), `contact` (1 = yes),
/// `rating` with the three central grades collapsed into one category, and
/// the original five-grade `rating_original`.
pub const WINE_CSV: &str = include_str!("../data/wine.csv");

/// The 72 wine ratings with covariates `(temperature, contact)` and the
/// three-category collapsed response.
pub fn wine() -> Dataset {
    let mut y = Vec::with_capacity(72);
    let mut rows = Vec::with_capacity(72);
    for line in WINE_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse().expect("bundled wine data is numeric"))
            .collect();
        rows.push(vec![fields[0], fields[1]]);
        y.push(fields[2] as usize);
    }
    Dataset::new(y, rows, 3).expect("bundled wine data is valid")
}
