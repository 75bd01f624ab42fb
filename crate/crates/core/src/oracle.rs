//! Independent checks used by the test suites: finite differences, exact
//! enumeration of every response vector, and latent-variable Monte Carlo.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adjust::Method;
use crate::error::{Error, Result};
use crate::links::LinkFamily;
use crate::model::{observation_terms, Dataset, ParamVector};
use crate::solver::{fit, BoundaryFlag, FitOptions};

/// Largest number of joint outcomes `c^n` the enumeration accepts.
pub const MAX_OUTCOMES: u128 = 6561;

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, step: f64) -> DVector<f64> {
    let mut g = DVector::zeros(theta.len());
    for k in 0..theta.len() {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[k] += step;
        down[k] -= step;
        g[k] = (f(&up) - f(&down)) / (2.0 * step);
    }
    g
}

/// Central-difference Jacobian of a vector function; column `k` is `d g / d theta_k`.
pub fn fd_jacobian(
    g: impl Fn(&DVector<f64>) -> DVector<f64>,
    theta: &DVector<f64>,
    step: f64,
) -> DMatrix<f64> {
    let d = theta.len();
    let m = g(theta).len();
    let mut jac = DMatrix::zeros(m, d);
    for k in 0..d {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[k] += step;
        down[k] -= step;
        jac.set_column(k, &((g(&up) - g(&down)) / (2.0 * step)));
    }
    jac
}

/// Central-difference Hessian from function values only.
pub fn fd_hessian(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, step: f64) -> DMatrix<f64> {
    let d = theta.len();
    let mut h = DMatrix::zeros(d, d);
    let at = |a: usize, da: f64, b: usize, db: f64| {
        let mut t = theta.clone();
        t[a] += da;
        t[b] += db;
        f(&t)
    };
    for a in 0..d {
        for b in a..d {
            let v = (at(a, step, b, step) - at(a, step, b, -step) - at(a, -step, b, step)
                + at(a, -step, b, -step))
                / (4.0 * step * step);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

fn outcome_count(c: usize, n: usize) -> Result<u128> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(c as u128);
        if total > MAX_OUTCOMES {
            return Err(Error::EnumerationTooLarge {
                outcomes: (c as u128).saturating_pow(n as u32),
                limit: MAX_OUTCOMES,
            });
        }
    }
    Ok(total)
}

/// Decode outcome number `index` into 1-based categories, first observation fastest.
fn outcome(index: u128, c: usize, n: usize) -> Vec<usize> {
    let mut rem = index;
    (0..n)
        .map(|_| {
            let j = (rem % c as u128) as usize;
            rem /= c as u128;
            j + 1
        })
        .collect()
}

/// `P_r` and `Q_r` by summing the full-data `U U' U_r` and `-j U_r` over every
/// joint outcome, weighted by its probability. Weights are ignored (unit).
pub fn enumerate_moments(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
    r: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    theta.check_order()?;
    let (c, n, d) = (data.c(), data.n(), theta.dim());
    if r >= d {
        return Err(Error::Input(format!("parameter index {r} out of range 0..{d}")));
    }
    let total = outcome_count(c, n)?;
    let terms: Vec<_> = (0..n)
        .map(|i| observation_terms(theta, data.row(i), link, true))
        .collect();
    let mut p = DMatrix::zeros(d, d);
    let mut q = DMatrix::zeros(d, d);
    for idx in 0..total {
        let ys = outcome(idx, c, n);
        let mut prob = 1.0;
        let mut u = DVector::zeros(d);
        let mut j = DMatrix::zeros(d, d);
        for (i, &yi) in ys.iter().enumerate() {
            prob *= terms[i].probs[yi - 1];
            u += &terms[i].scores[yi - 1];
            j += &terms[i].infos[yi - 1];
        }
        if prob == 0.0 {
            continue;
        }
        p += &u * u.transpose() * (prob * u[r]);
        q -= j * (prob * u[r]);
    }
    Ok((p, q))
}

/// Exact distribution of an estimator over all `c^n` response vectors.
#[derive(Debug, Clone)]
pub struct EnumerationReport {
    /// `(flat estimate, probability)` for every outcome that could be fitted;
    /// parameters flagged infinite are recorded as signed infinities.
    pub outcomes: Vec<(Vec<f64>, f64)>,
    /// Probability mass of outcomes the fit rejected (e.g. one observed category).
    pub failed_mass: f64,
    pub total_probability: f64,
    /// `Pr(estimate_r <= theta0_r)` over fitted outcomes.
    pub prob_le: Vec<f64>,
    /// `Pr(estimate_r < theta0_r)` over fitted outcomes.
    pub prob_lt: Vec<f64>,
}

impl EnumerationReport {
    /// Underestimation probability with rejected outcomes counted as half below.
    pub fn underestimation(&self, r: usize) -> f64 {
        self.prob_le[r] + 0.5 * self.failed_mass
    }

    /// `Pr(<) + Pr(=) / 2 + failed / 2`.
    pub fn mid_underestimation(&self, r: usize) -> f64 {
        0.5 * (self.prob_le[r] + self.prob_lt[r]) + 0.5 * self.failed_mass
    }
}

/// Fit every outcome with the production solver and tabulate exact probabilities.
///
/// `design` supplies the covariates and the category count; its responses are
/// ignored. Comparisons treat values within `1e-8` of `theta0` as ties.
pub fn exact_estimator_distribution(
    design: &Dataset,
    theta0: &ParamVector,
    link: LinkFamily,
    method: Method,
) -> Result<EnumerationReport> {
    theta0.check_order()?;
    let (c, n) = (design.c(), design.n());
    let total = outcome_count(c, n)?;
    let row_probs: Vec<Vec<f64>> = (0..n)
        .map(|i| observation_terms(theta0, design.row(i), link, false).probs)
        .collect();
    let opts = FitOptions::new(method, link);
    let fitted: Vec<(Option<Vec<f64>>, f64)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let ys = outcome(idx, c, n);
            let prob: f64 = ys.iter().enumerate().map(|(i, &y)| row_probs[i][y - 1]).product();
            let est = design
                .with_responses(ys, c)
                .and_then(|data| fit(&data, &opts))
                .ok()
                .map(|r| {
                    let n_cut = r.theta_hat.alpha.len();
                    let mut flat: Vec<f64> = r.grouping.expand_alpha(&r.theta_hat.alpha);
                    flat.extend_from_slice(&r.theta_hat.beta);
                    // signed infinities for flagged coefficients
                    for (k, f) in r.boundary_flags[n_cut..].iter().enumerate() {
                        let idx = flat.len() - r.theta_hat.beta.len() + k;
                        match f {
                            BoundaryFlag::PlusInfinity => flat[idx] = f64::INFINITY,
                            BoundaryFlag::MinusInfinity => flat[idx] = f64::NEG_INFINITY,
                            _ => {}
                        }
                    }
                    flat
                });
            (est, prob)
        })
        .collect();

    let d = theta0.dim();
    let truth = theta0.to_flat();
    let mut prob_le = vec![0.0; d];
    let mut prob_lt = vec![0.0; d];
    let mut failed_mass = 0.0;
    let mut total_probability = 0.0;
    let mut outcomes = Vec::with_capacity(fitted.len());
    for (est, prob) in fitted {
        total_probability += prob;
        match est {
            None => failed_mass += prob,
            Some(v) => {
                for r in 0..d {
                    let diff = v[r] - truth[r];
                    if diff <= 1e-8 {
                        prob_le[r] += prob;
                    }
                    if diff < -1e-8 {
                        prob_lt[r] += prob;
                    }
                }
                outcomes.push((v, prob));
            }
        }
    }
    Ok(EnumerationReport {
        outcomes,
        failed_mass,
        total_probability,
        prob_le,
        prob_lt,
    })
}

/// Monte Carlo estimate of `Pr(Y1* > Y2*) + Pr(Y1* = Y2*) / 2` for latent
/// outcomes `Y1* = -beta_r + e1` (group `x_r = 1`) and `Y2* = e2` (group `x_r = 0`)
/// with `e1, e2` independent draws from the link distribution.
/// Returns the estimate and its Monte Carlo standard error.
pub fn latent_gamma_mc(link: LinkFamily, beta_r: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut score = 0.0;
    let latent = |rng: &mut ChaCha8Rng| loop {
        let u: f64 = rng.random();
        if let Ok(e) = link.quantile(u) {
            return e;
        }
    };
    for _ in 0..draws {
        let y1 = -beta_r + latent(&mut rng);
        let y2 = latent(&mut rng);
        if y1 > y2 {
            score += 1.0;
        } else if y1 == y2 {
            score += 0.5;
        }
    }
    let est = score / draws as f64;
    (est, (est * (1.0 - est) / draws as f64).sqrt())
}
