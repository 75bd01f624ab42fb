//! Fisher scoring for the ML, mean BR and median BR estimating equations.
//!
//! Each iteration moves `theta <- theta + i(theta)^-1 {U(theta) + A~(theta)}`,
//! halving the step while it breaks cutpoint ordering or increases the
//! largest absolute adjusted-score component. Iteration stops once every
//! component of the adjusted score is below `tol`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adjust::{adjustment_bundle, adjustment_for, score_and_info, Method};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_inverse, spd_inverse};
use crate::links::LinkFamily;
use crate::model::{Dataset, ParamVector};

/// Minimum gap between consecutive accepted cutpoints.
pub const ORDER_MARGIN: f64 = 1e-12;
/// Gap below which consecutive cutpoints are diagnosed as merged.
pub const MERGE_GAP: f64 = 1e-6;
/// Number of trailing iterates inspected for a diverging ML path.
const DIVERGENCE_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub method: Method,
    pub link: LinkFamily,
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
    /// Boundary threshold on `|theta_r|`.
    pub t_est: f64,
    /// Boundary threshold on the standard error.
    pub t_se: f64,
    /// Warm start; defaults to [`starting_values`].
    pub start: Option<ParamVector>,
    /// Merge zero-count middle categories before fitting. Disabling this is a
    /// diagnostic mode that exposes coincident cutpoints.
    pub group_categories: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: Method::MedianBr,
            link: LinkFamily::Logit,
            max_iter: 200,
            tol: 1e-10,
            max_halvings: 20,
            t_est: 20.0,
            t_se: 200.0,
            start: None,
            group_categories: true,
        }
    }
}

impl FitOptions {
    pub fn new(method: Method, link: LinkFamily) -> Self {
        Self {
            method,
            link,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max_iter must be at least 1".into()));
        }
        if !(self.t_est > 0.0 && self.t_se > 0.0) {
            return Err(Error::Input("boundary thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    Interior,
    PlusInfinity,
    MinusInfinity,
    MergedCutpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// ML path diverging towards the boundary of the parameter space.
    Diverged,
    /// Consecutive cutpoints collapsed (ungrouped diagnostic fits).
    MergedCutpoints,
}

/// Original category (1-based) to fitted category (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingMap {
    pub map: Vec<usize>,
    pub original_categories: usize,
    pub fitted_categories: usize,
    /// Original categories that were folded into their right neighbour.
    pub merged: Vec<usize>,
}

impl GroupingMap {
    pub fn identity(c: usize) -> Self {
        Self {
            map: (1..=c).collect(),
            original_categories: c,
            fitted_categories: c,
            merged: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.merged.is_empty()
    }

    /// Cutpoints on the original category scale: a merged (empty) category
    /// repeats the cutpoint below it.
    pub fn expand_alpha(&self, fitted: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.original_categories - 1);
        for j in 1..self.original_categories {
            if self.merged.contains(&j) {
                let prev = out.last().copied().unwrap_or(f64::NEG_INFINITY);
                out.push(prev);
            } else {
                out.push(fitted[self.map[j - 1] - 1]);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    pub se: Vec<f64>,
    pub vcov: DMatrix<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub method: Method,
    pub link: LinkFamily,
    pub boundary_flags: Vec<BoundaryFlag>,
    pub grouping: GroupingMap,
    /// `max_r |U~_r|` at each visited iterate.
    pub trace: Vec<f64>,
}

impl FitResult {
    /// Any parameter on the boundary of the parameter space.
    pub fn has_boundary(&self) -> bool {
        self.boundary_flags.iter().any(|f| *f != BoundaryFlag::Interior)
    }

    pub fn beta(&self) -> &[f64] {
        &self.theta_hat.beta
    }

    pub fn beta_flags(&self) -> &[BoundaryFlag] {
        &self.boundary_flags[self.theta_hat.alpha.len()..]
    }

    pub fn beta_se(&self) -> &[f64] {
        &self.se[self.theta_hat.alpha.len()..]
    }
}

/// `beta = 0` and `alpha_j = G^-1(j / c)`.
pub fn starting_values(data: &Dataset, link: LinkFamily) -> ParamVector {
    let c = data.c();
    let alpha = (1..c)
        .map(|j| {
            link.quantile(j as f64 / c as f64)
                .expect("j / c lies strictly inside (0, 1)")
        })
        .collect();
    ParamVector::new(alpha, vec![0.0; data.p()])
}

/// Merge every zero-count middle category into its right neighbour.
pub fn group_zero_categories(data: &Dataset) -> Result<(Dataset, GroupingMap)> {
    let c = data.c();
    let counts = data.category_counts();
    let mut map = Vec::with_capacity(c);
    let mut merged = Vec::new();
    let mut label = 1;
    for j in 1..=c {
        map.push(label);
        let empty_middle = j > 1 && j < c && counts[j - 1] == 0.0;
        if empty_middle {
            merged.push(j);
        } else {
            label += 1;
        }
    }
    let fitted = label - 1;
    let grouping = GroupingMap {
        map,
        original_categories: c,
        fitted_categories: fitted,
        merged,
    };
    check_observed_categories(&counts)?;
    let grouped = if grouping.is_identity() {
        data.clone()
    } else {
        let y = data.y().iter().map(|&yi| grouping.map[yi - 1]).collect();
        data.with_responses(y, fitted)?
    };
    Ok((grouped, grouping))
}

fn check_observed_categories(counts: &[f64]) -> Result<()> {
    let observed = counts.iter().filter(|&&n| n > 0.0).count();
    if observed < 2 {
        return Err(Error::DegenerateData(format!(
            "only {observed} response category observed; at least 2 are needed"
        )));
    }
    Ok(())
}

/// Flag parameters whose estimate and standard error both exceed the thresholds,
/// and consecutive cutpoints that have collapsed.
pub fn detect_boundary(theta: &ParamVector, se: &[f64], options: &FitOptions) -> Vec<BoundaryFlag> {
    let flat = theta.to_flat();
    let mut flags: Vec<BoundaryFlag> = flat
        .iter()
        .zip(se)
        .map(|(&v, &s)| {
            if v.abs() > options.t_est && !(s <= options.t_se) {
                if v > 0.0 {
                    BoundaryFlag::PlusInfinity
                } else {
                    BoundaryFlag::MinusInfinity
                }
            } else {
                BoundaryFlag::Interior
            }
        })
        .collect();
    for (j, w) in theta.alpha.windows(2).enumerate() {
        if w[1] - w[0] < MERGE_GAP {
            flags[j] = BoundaryFlag::MergedCutpoint;
            flags[j + 1] = BoundaryFlag::MergedCutpoint;
        }
    }
    flags
}

struct Iterate {
    theta: ParamVector,
    adjusted: DVector<f64>,
    info_inv: DMatrix<f64>,
    norm: f64,
}

fn evaluate(theta: ParamVector, data: &Dataset, options: &FitOptions) -> Result<Iterate> {
    let (adjusted, info_inv) = match options.method {
        Method::Ml => {
            let (u, info) = score_and_info(&theta, data, options.link)?;
            (u, spd_inverse(&info)?)
        }
        method => {
            let bundle = adjustment_bundle(&theta, data, options.link)?;
            let adj = &bundle.score + adjustment_for(&bundle, method);
            (adj, bundle.info_inv)
        }
    };
    let norm = adjusted.amax();
    if !norm.is_finite() {
        return Err(Error::NumericalFailure("non-finite adjusted score".into()));
    }
    Ok(Iterate {
        theta,
        adjusted,
        info_inv,
        norm,
    })
}

fn diverging(path: &[f64]) -> bool {
    path.len() > DIVERGENCE_WINDOW
        && path[path.len() - DIVERGENCE_WINDOW - 1..]
            .windows(2)
            .all(|w| w[1] > w[0])
}

fn has_merged_cutpoints(theta: &ParamVector) -> bool {
    theta.alpha.windows(2).any(|w| w[1] - w[0] < MERGE_GAP)
}

/// Fit the model by Fisher scoring on the chosen estimating equation.
pub fn fit(data: &Dataset, options: &FitOptions) -> Result<FitResult> {
    options.validate()?;
    let (data, grouping) = if options.group_categories {
        group_zero_categories(data)?
    } else {
        check_observed_categories(&data.category_counts())?;
        (data.clone(), GroupingMap::identity(data.c()))
    };
    let data = &data;
    let n_cut = data.c() - 1;
    let start = match &options.start {
        Some(s) if s.alpha.len() == n_cut && s.beta.len() == data.p() => s.clone(),
        Some(s) => {
            return Err(Error::InvalidParameter(format!(
                "warm start has {} cutpoints and {} coefficients, fitted model needs {} and {}",
                s.alpha.len(),
                s.beta.len(),
                n_cut,
                data.p()
            )))
        }
        None => starting_values(data, options.link),
    };
    if !start.is_strictly_ordered(ORDER_MARGIN) {
        return Err(Error::InvalidParameter("starting cutpoints are not strictly increasing".into()));
    }

    let mut current = evaluate(start, data, options)?;
    let mut trace = vec![current.norm];
    let mut sizes = vec![current.theta.to_flat().amax()];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    while iterations < options.max_iter {
        if current.norm < options.tol {
            termination = Termination::Converged;
            break;
        }
        if !options.group_categories && has_merged_cutpoints(&current.theta) {
            termination = Termination::MergedCutpoints;
            break;
        }
        let step = &current.info_inv * &current.adjusted;
        let base = current.theta.to_flat();
        let mut accepted = None;
        let mut fallback = None;
        let mut singular = false;
        let mut scale = 1.0;
        for _ in 0..=options.max_halvings {
            let cand = ParamVector::from_flat(&(&base + &step * scale), n_cut);
            scale *= 0.5;
            if !cand.is_strictly_ordered(ORDER_MARGIN) {
                continue;
            }
            match evaluate(cand, data, options) {
                Ok(next) if next.norm < current.norm => {
                    accepted = Some(next);
                    break;
                }
                Ok(next) => {
                    if fallback.is_none() {
                        fallback = Some(next);
                    }
                }
                Err(Error::SingularInformation { .. }) => singular = true,
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        let next = match (accepted, fallback) {
            (Some(next), _) => next,
            // No halving reduced the adjusted score: take the longest
            // order-preserving plain scoring step instead.
            (None, Some(next)) => next,
            (None, None) => {
                if options.method == Method::Ml && (singular || diverging(&sizes)) {
                    termination = Termination::Diverged;
                    break;
                }
                if !options.group_categories && has_merged_cutpoints(&current.theta) {
                    termination = Termination::MergedCutpoints;
                    break;
                }
                return Err(Error::NumericalFailure(format!(
                    "no admissible step from iterate {iterations} (max |U~| = {:.3e})",
                    current.norm
                )));
            }
        };
        current = next;
        trace.push(current.norm);
        sizes.push(current.theta.to_flat().amax());
    }
    if termination == Termination::MaxIterations && current.norm < options.tol {
        termination = Termination::Converged;
    }
    if termination == Termination::MaxIterations
        && options.method == Method::Ml
        && diverging(&sizes)
    {
        termination = Termination::Diverged;
    }

    let theta_hat = current.theta;
    let d = theta_hat.dim();
    let info = score_and_info(&theta_hat, data, options.link)?.1;
    let vcov = cholesky_inverse(&info)
        .unwrap_or_else(|| DMatrix::from_element(d, d, f64::INFINITY));
    let se: Vec<f64> = (0..d)
        .map(|r| {
            let v = vcov[(r, r)];
            if v >= 0.0 {
                v.sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let boundary_flags = detect_boundary(&theta_hat, &se, options);
    Ok(FitResult {
        theta_hat,
        se,
        vcov,
        converged: termination == Termination::Converged,
        termination,
        iterations,
        method: options.method,
        link: options.link,
        boundary_flags,
        grouping,
        trace,
    })
}
