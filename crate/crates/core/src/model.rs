//! Cumulative link model: data, parameters, likelihood and information.
//!
//! For observation `i` with covariate row `x_i` the linear predictors are
//! `eta_ij = alpha_j + x_i beta` for `j = 1..c-1`, with `Pr(Y_i <= j) = G(eta_ij)`.
//! Parameters are always flattened as `(alpha_1..alpha_{c-1}, beta_1..beta_p)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::LinkFamily;

/// Floor applied to probabilities inside logarithms and divisions only.
pub const PROB_FLOOR: f64 = 1e-300;

/// Ordinal responses with a covariate matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<usize>,
    x: Vec<f64>,
    n: usize,
    p: usize,
    c: usize,
    weights: Vec<f64>,
}

impl Dataset {
    /// `y` holds 1-based categories, `rows` the covariate rows (all of equal length).
    pub fn new(y: Vec<usize>, rows: Vec<Vec<f64>>, c: usize) -> Result<Self> {
        let n = y.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.len() != n {
            return Err(Error::Input(format!(
                "{} responses but {} covariate rows",
                n,
                rows.len()
            )));
        }
        let mut x = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Input(format!(
                    "covariate row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    p
                )));
            }
            x.extend_from_slice(row);
        }
        Self::from_row_major(y, x, p, c)
    }

    pub fn from_row_major(y: Vec<usize>, x: Vec<f64>, p: usize, c: usize) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Input("dataset has no observations".into()));
        }
        if c < 2 {
            return Err(Error::Input(format!("need at least 2 categories, got {c}")));
        }
        if x.len() != n * p {
            return Err(Error::Input(format!(
                "design has {} entries, expected {}x{}",
                x.len(),
                n,
                p
            )));
        }
        if let Some((i, &yi)) = y.iter().enumerate().find(|(_, &yi)| yi == 0 || yi > c) {
            return Err(Error::Input(format!(
                "response {} of observation {} is outside 1..={}",
                yi,
                i + 1,
                c
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite covariate at observation {}, column {}",
                k / p.max(1) + 1,
                k % p.max(1) + 1
            )));
        }
        Ok(Self {
            y,
            x,
            n,
            p,
            c,
            weights: vec![1.0; n],
        })
    }

    /// Attach integer multiplicities.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n {
            return Err(Error::Input(format!(
                "{} weights for {} observations",
                weights.len(),
                self.n
            )));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !(w.is_finite() && **w >= 0.0 && w.fract() == 0.0))
        {
            return Err(Error::Input(format!(
                "weights must be non-negative integers, got {w}"
            )));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of regression coefficients.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of response categories.
    pub fn c(&self) -> usize {
        self.c
    }

    /// Parameter dimension `(c - 1) + p`.
    pub fn dim(&self) -> usize {
        self.c - 1 + self.p
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.p + k]).collect()
    }

    /// Weighted count of each category.
    pub fn category_counts(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.c];
        for (&yi, &w) in self.y.iter().zip(&self.weights) {
            counts[yi - 1] += w;
        }
        counts
    }

    /// Same design with new responses and category count.
    pub fn with_responses(&self, y: Vec<usize>, c: usize) -> Result<Self> {
        let data = Self::from_row_major(y, self.x.clone(), self.p, c)?;
        data.with_weights(self.weights.clone())
    }

    /// Replace covariate column `k` by `f(x_ik)`.
    pub fn map_column(&self, k: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let v = &mut out.x[i * self.p + k];
            *v = f(*v);
        }
        out
    }

    /// Reorder observations; `order` must be a permutation of `0..n`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let y = order.iter().map(|&i| self.y[i]).collect();
        let x = order.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let weights = order.iter().map(|&i| self.weights[i]).collect();
        Self {
            y,
            x,
            weights,
            ..self.clone()
        }
    }
}

/// Cutpoints followed by regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParamVector {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self { alpha, beta }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len() + self.beta.len()
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.alpha.iter().chain(&self.beta).copied(),
        )
    }

    /// Split a flat vector whose first `c - 1` entries are cutpoints.
    pub fn from_flat(flat: &DVector<f64>, n_cutpoints: usize) -> Self {
        Self {
            alpha: flat.as_slice()[..n_cutpoints].to_vec(),
            beta: flat.as_slice()[n_cutpoints..].to_vec(),
        }
    }

    /// Cutpoints nondecreasing and every entry finite.
    pub fn check_order(&self) -> Result<()> {
        if let Some(v) = self.alpha.iter().chain(&self.beta).find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter {v}")));
        }
        for (j, w) in self.alpha.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::InvalidParameter(format!(
                    "cutpoints out of order: alpha_{} = {} > alpha_{} = {}",
                    j + 1,
                    w[0],
                    j + 2,
                    w[1]
                )));
            }
        }
        Ok(())
    }

    /// Strict ordering with the margin used for accepted iterates.
    pub fn is_strictly_ordered(&self, margin: f64) -> bool {
        self.alpha.windows(2).all(|w| w[0] + margin < w[1])
    }

    fn linear_offset(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta).map(|(a, b)| a * b).sum()
    }
}

/// Per-category quantities for one covariate row.
///
/// `scores[j]` is the gradient of `log p_j` and `infos[j]` the negative Hessian
/// of `log p_j`, both with respect to the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ObservationTerms {
    pub probs: Vec<f64>,
    pub scores: Vec<DVector<f64>>,
    pub infos: Vec<DMatrix<f64>>,
}

struct Boundaries {
    /// `G`, `g`, `g'` at `eta_0 = -inf, eta_1, .., eta_{c-1}, eta_c = +inf`.
    dens: Vec<f64>,
    dens_prime: Vec<f64>,
    probs: Vec<f64>,
}

fn boundaries(theta: &ParamVector, x: &[f64], link: LinkFamily) -> Boundaries {
    let k = theta.alpha.len();
    let off = theta.linear_offset(x);
    let mut dens = vec![0.0; k + 2];
    let mut dens_prime = vec![0.0; k + 2];
    let mut probs = Vec::with_capacity(k + 1);
    let eta: Vec<f64> = theta.alpha.iter().map(|a| a + off).collect();
    for (j, &e) in eta.iter().enumerate() {
        dens[j + 1] = link.pdf(e);
        dens_prime[j + 1] = link.pdf_prime(e);
    }
    for j in 0..=k {
        let lower = if j == 0 { f64::NEG_INFINITY } else { eta[j - 1] };
        let upper = if j == k { f64::INFINITY } else { eta[j] };
        probs.push(interval_prob(link, lower, upper));
    }
    Boundaries {
        dens,
        dens_prime,
        probs,
    }
}

/// `G(upper) - G(lower)`, taking the difference in the tail that keeps precision.
fn interval_prob(link: LinkFamily, lower: f64, upper: f64) -> f64 {
    let p = if lower > 0.0 {
        let s_lo = if lower == f64::NEG_INFINITY { 1.0 } else { link.sf(lower) };
        let s_hi = if upper == f64::INFINITY { 0.0 } else { link.sf(upper) };
        s_lo - s_hi
    } else {
        let c_hi = if upper == f64::INFINITY { 1.0 } else { link.cdf(upper) };
        let c_lo = if lower == f64::NEG_INFINITY { 0.0 } else { link.cdf(lower) };
        c_hi - c_lo
    };
    p.max(0.0)
}

/// Cell probabilities `(p_1, .., p_c)` for one covariate row.
pub fn cell_probs(theta: &ParamVector, x: &[f64], link: LinkFamily) -> Result<Vec<f64>> {
    theta.check_order()?;
    check_row(theta, x)?;
    Ok(boundaries(theta, x, link).probs)
}

fn check_row(theta: &ParamVector, x: &[f64]) -> Result<()> {
    if x.len() != theta.beta.len() {
        return Err(Error::Input(format!(
            "covariate row of length {} for {} coefficients",
            x.len(),
            theta.beta.len()
        )));
    }
    Ok(())
}

/// Direction `z_k = (e_k, x)` of `eta_k` in parameter space; `k` is 1-based.
fn eta_direction(k: usize, n_cut: usize, x: &[f64]) -> DVector<f64> {
    let mut z = DVector::zeros(n_cut + x.len());
    z[k - 1] = 1.0;
    z.as_mut_slice()[n_cut..].copy_from_slice(x);
    z
}

/// Evaluate probabilities, per-category scores and (optionally) per-category
/// observed information for one row. Assumes `theta` was validated.
pub fn observation_terms(
    theta: &ParamVector,
    x: &[f64],
    link: LinkFamily,
    with_info: bool,
) -> ObservationTerms {
    let n_cut = theta.alpha.len();
    let c = n_cut + 1;
    let d = theta.dim();
    let b = boundaries(theta, x, link);
    let dirs: Vec<DVector<f64>> = (1..=n_cut).map(|k| eta_direction(k, n_cut, x)).collect();

    let mut scores = Vec::with_capacity(c);
    let mut infos = Vec::with_capacity(if with_info { c } else { 0 });
    for j in 1..=c {
        let prob = b.probs[j - 1].max(PROB_FLOOR);
        // dp_j = g(eta_j) z_j - g(eta_{j-1}) z_{j-1}
        let mut dp = DVector::zeros(d);
        if j < c {
            dp.axpy(b.dens[j], &dirs[j - 1], 1.0);
        }
        if j > 1 {
            dp.axpy(-b.dens[j - 1], &dirs[j - 2], 1.0);
        }
        let u = dp / prob;
        if with_info {
            // J = u u' - d2p / p
            let mut info = &u * u.transpose();
            if j < c {
                info.ger(-b.dens_prime[j] / prob, &dirs[j - 1], &dirs[j - 1], 1.0);
            }
            if j > 1 {
                info.ger(b.dens_prime[j - 1] / prob, &dirs[j - 2], &dirs[j - 2], 1.0);
            }
            infos.push(info);
        }
        scores.push(u);
    }
    ObservationTerms {
        probs: b.probs,
        scores,
        infos,
    }
}

/// Gradient of `log p_j` for one row; `j` is 1-based.
pub fn score_contrib(
    theta: &ParamVector,
    x: &[f64],
    j: usize,
    link: LinkFamily,
) -> Result<DVector<f64>> {
    check_category(theta, x, j)?;
    Ok(observation_terms(theta, x, link, false).scores.swap_remove(j - 1))
}

/// Negative Hessian of `log p_j` for one row; `j` is 1-based.
pub fn obs_info_contrib(
    theta: &ParamVector,
    x: &[f64],
    j: usize,
    link: LinkFamily,
) -> Result<DMatrix<f64>> {
    check_category(theta, x, j)?;
    Ok(observation_terms(theta, x, link, true).infos.swap_remove(j - 1))
}

fn check_category(theta: &ParamVector, x: &[f64], j: usize) -> Result<()> {
    theta.check_order()?;
    check_row(theta, x)?;
    let c = theta.alpha.len() + 1;
    if j == 0 || j > c {
        return Err(Error::Input(format!("category {j} outside 1..={c}")));
    }
    Ok(())
}

fn check_theta(theta: &ParamVector, data: &Dataset) -> Result<()> {
    if theta.alpha.len() != data.c() - 1 || theta.beta.len() != data.p() {
        return Err(Error::InvalidParameter(format!(
            "parameter has {} cutpoints and {} coefficients, data needs {} and {}",
            theta.alpha.len(),
            theta.beta.len(),
            data.c() - 1,
            data.p()
        )));
    }
    theta.check_order()
}

/// `sum_i w_i log p_{i, y_i}`.
pub fn loglik(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<f64> {
    check_theta(theta, data)?;
    Ok((0..data.n())
        .map(|i| {
            let probs = boundaries(theta, data.row(i), link).probs;
            data.weights[i] * probs[data.y[i] - 1].max(PROB_FLOOR).ln()
        })
        .sum())
}

/// Total score `U(theta)`.
pub fn score(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<DVector<f64>> {
    check_theta(theta, data)?;
    let mut total = DVector::zeros(theta.dim());
    for i in 0..data.n() {
        let terms = observation_terms(theta, data.row(i), link, false);
        total.axpy(data.weights[i], &terms.scores[data.y[i] - 1], 1.0);
    }
    Ok(total)
}

/// Observed information `j(theta) = -d2 loglik`.
pub fn obs_info(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<DMatrix<f64>> {
    check_theta(theta, data)?;
    let d = theta.dim();
    let mut total = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let terms = observation_terms(theta, data.row(i), link, true);
        total += &terms.infos[data.y[i] - 1] * data.weights[i];
    }
    Ok(total)
}

/// Expected information `i(theta)` as the expectation of the observed information.
pub fn exp_info(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<DMatrix<f64>> {
    check_theta(theta, data)?;
    let d = theta.dim();
    let mut total = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let terms = observation_terms(theta, data.row(i), link, true);
        for (prob, info) in terms.probs.iter().zip(&terms.infos) {
            if *prob == 0.0 {
                continue;
            }
            total += info * (data.weights[i] * prob);
        }
    }
    Ok(total)
}

/// Expected information in the outer-product form `sum_i w_i sum_j p_ij u_ij u_ij'`.
pub fn exp_info_outer(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
) -> Result<DMatrix<f64>> {
    check_theta(theta, data)?;
    let d = theta.dim();
    let mut total = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let terms = observation_terms(theta, data.row(i), link, false);
        for (prob, u) in terms.probs.iter().zip(&terms.scores) {
            if *prob == 0.0 {
                continue;
            }
            total.ger(data.weights[i] * prob, u, u, 1.0);
        }
    }
    Ok(total)
}
