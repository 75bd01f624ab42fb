//! Monte Carlo comparison of the ML, mean BR and median BR estimators.
//!
//! A covariate design is drawn once from the study seed and held fixed; each
//! replication draws fresh responses from the model at the true parameter and
//! fits every requested method. Replications run in parallel, but each has its
//! own RNG stream and results are aggregated in replication order, so a study
//! is bit-for-bit reproducible for a given seed regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::Method;
use crate::datasets;
use crate::effects::{gamma_measure, wald_interval};
use crate::error::{Error, Result};
use crate::links::LinkFamily;
use crate::model::{cell_probs, Dataset, ParamVector};
use crate::solver::{fit, BoundaryFlag, FitOptions, FitResult, Termination};

/// One covariate column generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovariateSpec {
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    Bernoulli {
        p: f64,
    },
    Poisson {
        lambda: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_level() -> f64 {
    0.95
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// Where the covariate matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignSpec {
    /// Columns drawn independently from the listed generators.
    Recipe(Vec<CovariateSpec>),
    /// A fixed design, one row per observation.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub link: LinkFamily,
    /// Sample size for recipe designs; ignored for fixed designs.
    #[serde(default)]
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub categories: usize,
    /// True `(alpha, beta)` in flat order.
    pub theta0: Vec<f64>,
    pub design: DesignSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// 1-based indices of binary coefficients whose `gamma` bias is reported.
    #[serde(default)]
    pub gamma_coefficients: Vec<usize>,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl SimConfig {
    pub fn n_obs(&self) -> usize {
        match &self.design {
            DesignSpec::Recipe(_) => self.n,
            DesignSpec::Fixed(rows) => rows.len(),
        }
    }

    pub fn p(&self) -> usize {
        match &self.design {
            DesignSpec::Recipe(cols) => cols.len(),
            DesignSpec::Fixed(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    pub fn theta0(&self) -> ParamVector {
        let k = self.categories.saturating_sub(1);
        ParamVector::new(self.theta0[..k].to_vec(), self.theta0[k..].to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Input(format!("{key}: {msg}")));
        if self.replications == 0 {
            return bad("replications", "must be at least 1".into());
        }
        if self.categories < 2 {
            return bad("categories", format!("need at least 2, got {}", self.categories));
        }
        if self.n_obs() == 0 {
            return bad("n", "sample size must be at least 1".into());
        }
        let d = self.categories - 1 + self.p();
        if self.theta0.len() != d {
            return bad(
                "theta0",
                format!("has {} entries, expected {} ({} cutpoints + {} coefficients)", self.theta0.len(), d, self.categories - 1, self.p()),
            );
        }
        let theta = self.theta0();
        if theta.check_order().is_err() || !theta.is_strictly_ordered(0.0) {
            return bad("theta0", "cutpoints must be finite and strictly increasing".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "at least one method is required".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level", format!("must lie in (0, 1), got {}", self.level));
        }
        if let Some(&k) = self.gamma_coefficients.iter().find(|&&k| k == 0 || k > self.p()) {
            return bad("gamma_coefficients", format!("index {k} outside 1..={}", self.p()));
        }
        match &self.design {
            DesignSpec::Recipe(cols) => {
                for (k, col) in cols.iter().enumerate() {
                    let ok = match *col {
                        CovariateSpec::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
                        CovariateSpec::Bernoulli { p } => (0.0..=1.0).contains(&p),
                        CovariateSpec::Poisson { lambda } => lambda > 0.0 && lambda.is_finite(),
                    };
                    if !ok {
                        return bad(&format!("design.recipe[{k}]"), format!("invalid generator {col:?}"));
                    }
                }
            }
            DesignSpec::Fixed(rows) => {
                let p = self.p();
                if let Some(i) = rows.iter().position(|r| r.len() != p || r.iter().any(|v| !v.is_finite())) {
                    return bad(&format!("design.fixed[{i}]"), format!("row must hold {p} finite values"));
                }
            }
        }
        Ok(())
    }
}

/// Per-replication seed derived from the study seed.
pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    seed ^ (replication as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Draw (or pass through) the covariate design; rows are observations.
pub fn generate_design(config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    match &config.design {
        DesignSpec::Fixed(rows) => Ok(rows.clone()),
        DesignSpec::Recipe(cols) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            // designs for different sample sizes come from separate streams
            rng.set_stream(config.n as u64);
            let mut rows = vec![Vec::with_capacity(cols.len()); config.n];
            for col in cols {
                let draws = draw_column(col, config.n, &mut rng)?;
                for (row, v) in rows.iter_mut().zip(draws) {
                    row.push(v);
                }
            }
            Ok(rows)
        }
    }
}

fn draw_column(spec: &CovariateSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let err = |e: String| Error::Input(format!("covariate generator {spec:?}: {e}"));
    Ok(match *spec {
        CovariateSpec::Normal { mean, sd } => {
            let d = Normal::new(mean, sd).map_err(|e| err(e.to_string()))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
        CovariateSpec::Bernoulli { p } => {
            let d = Bernoulli::new(p).map_err(|e| err(e.to_string()))?;
            (0..n).map(|_| if d.sample(rng) { 1.0 } else { 0.0 }).collect()
        }
        CovariateSpec::Poisson { lambda } => {
            let d = Poisson::new(lambda).map_err(|e| err(e.to_string()))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
    })
}

/// Draw `y_i` from the categorical distribution `cell_probs(theta0, x_i)` by inversion.
pub fn simulate_response(
    theta0: &ParamVector,
    design: &[Vec<f64>],
    link: LinkFamily,
    rep_seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    design
        .iter()
        .map(|x| {
            let probs = cell_probs(theta0, x, link)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (j, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Ok(j + 1);
                }
            }
            Ok(probs.len())
        })
        .collect()
}

/// What one replication contributed for one method.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicationFit {
    Fitted {
        /// Flat estimates on the original category scale.
        estimates: Vec<f64>,
        se: Vec<f64>,
        flags: Vec<BoundaryFlag>,
        /// Some parameter flagged infinite.
        infinite: bool,
        /// Infinite estimates, merged cutpoints, or a diverging ML path.
        boundary: bool,
        restarted: bool,
    },
    Failed(String),
}

/// Fit one dataset; a median or mean BR fit that fails from the default start
/// is retried from the ML estimate, as a warm start.
pub fn fit_replication(data: &Dataset, method: Method, link: LinkFamily) -> ReplicationFit {
    let opts = FitOptions::new(method, link);
    let first = fit(data, &opts);
    let (result, restarted) = match first {
        Ok(r) if r.converged || method == Method::Ml => (Ok(r), false),
        other => {
            let warm = fit(data, &FitOptions::new(Method::Ml, link))
                .ok()
                .filter(|r| !r.has_boundary() && r.converged)
                .map(|r| r.theta_hat);
            match warm {
                Some(start) => {
                    let retry = FitOptions {
                        start: Some(start),
                        ..opts
                    };
                    (fit(data, &retry), true)
                }
                None => (other, false),
            }
        }
    };
    match result {
        Err(e) => ReplicationFit::Failed(e.to_string()),
        Ok(r) if !r.converged && r.termination != Termination::Diverged && !r.has_boundary() => {
            ReplicationFit::Failed(format!("no convergence after {} iterations", r.iterations))
        }
        Ok(r) => summarize_fit(&r, restarted),
    }
}

fn summarize_fit(r: &FitResult, restarted: bool) -> ReplicationFit {
    let n_cut = r.theta_hat.alpha.len();
    let alpha = r.grouping.expand_alpha(&r.theta_hat.alpha);
    let mut alpha_se = Vec::with_capacity(alpha.len());
    let mut alpha_flags = Vec::with_capacity(alpha.len());
    for j in 1..r.grouping.original_categories {
        let k = if r.grouping.merged.contains(&j) {
            // repeats the cutpoint below; the first cutpoint is never merged
            alpha_flags.push(BoundaryFlag::MergedCutpoint);
            alpha_se.push(*alpha_se.last().unwrap_or(&f64::NAN));
            continue;
        } else {
            r.grouping.map[j - 1] - 1
        };
        alpha_flags.push(r.boundary_flags[k]);
        alpha_se.push(r.se[k]);
    }
    let mut estimates = alpha;
    estimates.extend_from_slice(&r.theta_hat.beta);
    let mut se = alpha_se;
    se.extend_from_slice(&r.se[n_cut..]);
    let mut flags = alpha_flags;
    flags.extend_from_slice(&r.boundary_flags[n_cut..]);
    let infinite = flags
        .iter()
        .any(|f| matches!(f, BoundaryFlag::PlusInfinity | BoundaryFlag::MinusInfinity));
    let boundary = flags.iter().any(|f| *f != BoundaryFlag::Interior)
        || r.termination == Termination::Diverged;
    ReplicationFit::Fitted {
        estimates,
        se,
        flags,
        infinite: infinite || r.termination == Termination::Diverged,
        boundary,
        restarted,
    }
}

/// One replication's estimate of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub estimate: f64,
    pub se: f64,
    pub flag: BoundaryFlag,
    /// Whether every estimate of this replication is finite.
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub parameter: String,
    pub true_value: f64,
    /// Percentage of replications with estimate at or below the true value.
    pub pu: f64,
    /// Relative mean bias in percent, or the absolute bias when the true value is zero.
    pub rb: f64,
    pub rb_is_absolute: bool,
    /// Wald interval coverage in percent.
    pub wald: f64,
    pub replications: usize,
    pub finite_replications: usize,
}

/// PU%, RB% and WALD% for one parameter.
///
/// Infinite flags count as `-inf <= theta0` and `+inf > theta0` in PU; RB and
/// WALD use only replications whose estimates are all finite.
pub fn metrics(name: &str, theta0: f64, draws: &[Draw], level: f64) -> Result<ParamSummary> {
    let total = draws.len();
    let under = draws
        .iter()
        .filter(|d| match d.flag {
            BoundaryFlag::MinusInfinity => true,
            BoundaryFlag::PlusInfinity => false,
            _ => d.estimate <= theta0,
        })
        .count();
    let finite: Vec<&Draw> = draws.iter().filter(|d| d.finite).collect();
    let mean = finite.iter().map(|d| d.estimate).sum::<f64>() / finite.len() as f64;
    let rb_is_absolute = theta0 == 0.0;
    let rb = if rb_is_absolute {
        mean - theta0
    } else {
        100.0 * (mean - theta0) / theta0
    };
    let mut covered = 0;
    for d in &finite {
        let (lo, hi) = wald_interval(d.estimate, d.se, level)?;
        if lo <= theta0 && theta0 <= hi {
            covered += 1;
        }
    }
    let pct = |k: usize, of: usize| if of == 0 { f64::NAN } else { 100.0 * k as f64 / of as f64 };
    Ok(ParamSummary {
        parameter: name.to_string(),
        true_value: theta0,
        pu: pct(under, total),
        rb: if finite.is_empty() { f64::NAN } else { rb },
        rb_is_absolute,
        wald: pct(covered, finite.len()),
        replications: total,
        finite_replications: finite.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub parameter: String,
    pub true_gamma: f64,
    /// Relative mean bias of `gamma(estimate)` in percent over finite replications.
    pub rb: f64,
    pub finite_replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub replications: usize,
    pub effective_replications: usize,
    pub failures: usize,
    pub restarts: usize,
    pub boundary_count: usize,
    pub boundary_pct: f64,
    pub infinite_count: usize,
    pub parameters: Vec<ParamSummary>,
    pub gamma: Vec<GammaSummary>,
}

impl MethodSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|p| p.parameter == name)
    }

    pub fn gamma_for(&self, name: &str) -> Option<&GammaSummary> {
        self.gamma.iter().find(|g| g.parameter == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub link: LinkFamily,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub theta0: Vec<f64>,
    pub methods: Vec<MethodSummary>,
}

impl SimSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub fn parameter_names(categories: usize, p: usize) -> Vec<String> {
    (1..categories)
        .map(|j| format!("alpha{j}"))
        .chain((1..=p).map(|k| format!("beta{k}")))
        .collect()
}

/// Run every replication and aggregate per method. `threads = None` uses the
/// global rayon pool.
pub fn run_study(config: &SimConfig, threads: Option<usize>) -> Result<SimSummary> {
    config.validate()?;
    let design = generate_design(config)?;
    let theta0 = config.theta0();
    let p = config.p();
    let x: Vec<f64> = design.iter().flatten().copied().collect();

    let replicate = |r: usize| -> Result<Vec<ReplicationFit>> {
        let y = simulate_response(&theta0, &design, config.link, replication_seed(config.seed, r))?;
        let data = Dataset::from_row_major(y, x.clone(), p, config.categories)?;
        Ok(config
            .methods
            .iter()
            .map(|&m| fit_replication(&data, m, config.link))
            .collect())
    };
    let outcomes: Vec<Vec<ReplicationFit>> = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?
            .install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(replicate)
                    .collect::<Result<_>>()
            })?,
        None => (0..config.replications)
            .into_par_iter()
            .map(replicate)
            .collect::<Result<_>>()?,
    };
    aggregate(config, &outcomes)
}

fn aggregate(config: &SimConfig, outcomes: &[Vec<ReplicationFit>]) -> Result<SimSummary> {
    let names = parameter_names(config.categories, config.p());
    let n_cut = config.categories - 1;
    let mut methods = Vec::with_capacity(config.methods.len());
    for (m, &method) in config.methods.iter().enumerate() {
        let mut failures = 0;
        let mut restarts = 0;
        let mut boundary_count = 0;
        let mut infinite_count = 0;
        let mut per_param: Vec<Vec<Draw>> = vec![Vec::new(); names.len()];
        for rep in outcomes {
            match &rep[m] {
                ReplicationFit::Failed(_) => failures += 1,
                ReplicationFit::Fitted {
                    estimates,
                    se,
                    flags,
                    infinite,
                    boundary,
                    restarted,
                } => {
                    restarts += usize::from(*restarted);
                    boundary_count += usize::from(*boundary);
                    infinite_count += usize::from(*infinite);
                    for (k, draws) in per_param.iter_mut().enumerate() {
                        draws.push(Draw {
                            estimate: estimates[k],
                            se: se[k],
                            flag: flags[k],
                            finite: !*infinite,
                        });
                    }
                }
            }
        }
        let effective = config.replications - failures;
        let parameters = names
            .iter()
            .zip(&config.theta0)
            .zip(&per_param)
            .map(|((name, &t0), draws)| metrics(name, t0, draws, config.level))
            .collect::<Result<Vec<_>>>()?;
        let gamma = config
            .gamma_coefficients
            .iter()
            .map(|&k| {
                let idx = n_cut + k - 1;
                let true_gamma = gamma_measure(config.link, config.theta0[idx]);
                let finite: Vec<f64> = per_param[idx]
                    .iter()
                    .filter(|d| d.finite)
                    .map(|d| gamma_measure(config.link, d.estimate))
                    .collect();
                let mean = finite.iter().sum::<f64>() / finite.len() as f64;
                GammaSummary {
                    parameter: names[idx].clone(),
                    true_gamma,
                    rb: 100.0 * (mean - true_gamma) / true_gamma,
                    finite_replications: finite.len(),
                }
            })
            .collect();
        methods.push(MethodSummary {
            method,
            replications: config.replications,
            effective_replications: effective,
            failures,
            restarts,
            boundary_count,
            boundary_pct: if effective == 0 {
                f64::NAN
            } else {
                100.0 * boundary_count as f64 / effective as f64
            },
            infinite_count,
            parameters,
            gamma,
        });
    }
    Ok(SimSummary {
        link: config.link,
        n: config.n_obs(),
        replications: config.replications,
        seed: config.seed,
        theta0: config.theta0.clone(),
        methods,
    })
}

/// Study seed shared by the bundled presets.
pub const PRESET_SEED: u64 = 20_210_531;

/// True parameters of the four-covariate study for each link.
pub fn table1_theta0(link: LinkFamily) -> Vec<f64> {
    match link {
        LinkFamily::Logit => vec![-1.0, 2.0, 1.0, -1.0, 1.0, -1.0],
        LinkFamily::Probit => vec![-0.6, 1.2, 0.6, -0.6, 0.6, -0.6],
        LinkFamily::Cloglog => vec![-1.1, 1.0, 0.7, -0.7, 0.7, -0.7],
    }
}

/// Four-covariate study: `N(0,1)`, `Bernoulli(0.5)`, `Bernoulli(0.8)`, `Poisson(2.5)`.
pub fn table1_config(link: LinkFamily, n: usize, replications: usize) -> SimConfig {
    SimConfig {
        link,
        n,
        replications,
        seed: PRESET_SEED,
        categories: 3,
        theta0: table1_theta0(link),
        design: DesignSpec::Recipe(vec![
            CovariateSpec::Normal { mean: 0.0, sd: 1.0 },
            CovariateSpec::Bernoulli { p: 0.5 },
            CovariateSpec::Bernoulli { p: 0.8 },
            CovariateSpec::Poisson { lambda: 2.5 },
        ]),
        methods: Method::ALL.to_vec(),
        gamma_coefficients: vec![2, 3],
        level: 0.95,
    }
}

/// Wine design held fixed with `theta0 = (-1, 4, -2, -1)`.
pub fn wine_config(replications: usize) -> SimConfig {
    let wine = datasets::wine();
    SimConfig {
        link: LinkFamily::Logit,
        n: wine.n(),
        replications,
        seed: PRESET_SEED,
        categories: 3,
        theta0: vec![-1.0, 4.0, -2.0, -1.0],
        design: DesignSpec::Fixed((0..wine.n()).map(|i| wine.row(i).to_vec()).collect()),
        methods: Method::ALL.to_vec(),
        gamma_coefficients: vec![1, 2],
        level: 0.95,
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "table1-logit-n50",
    "table1-logit-n100",
    "table1-logit-n200",
    "table1-probit-n50",
    "table1-probit-n100",
    "table1-probit-n200",
    "table1-cloglog-n50",
    "table1-cloglog-n100",
    "table1-cloglog-n200",
    "table2-logit-n50",
    "table2-probit-n50",
    "table2-cloglog-n50",
    "table4-wine",
];

/// Bundled study presets with the published replication count (10 000).
///
/// `table2-*` presets are the four-covariate studies; the `gamma` bias rows of
/// their summaries are the quantities of interest.
pub fn preset(name: &str) -> Option<SimConfig> {
    const R: usize = 10_000;
    if name == "table4-wine" {
        return Some(wine_config(R));
    }
    let mut parts = name.split('-');
    let table = parts.next()?;
    let link: LinkFamily = parts.next()?.parse().ok()?;
    let n: usize = parts.next()?.strip_prefix('n')?.parse().ok()?;
    if parts.next().is_some() || !PRESET_NAMES.contains(&name) {
        return None;
    }
    match table {
        "table1" | "table2" => Some(table1_config(link, n, R)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn draw(estimate: f64) -> Draw {
        Draw {
            estimate,
            se: 0.1,
            flag: BoundaryFlag::Interior,
            finite: true,
        }
    }

    #[test]
    fn metric_hand_values() {
        let draws: Vec<Draw> = [0.9, 1.1, 1.0, 1.2].into_iter().map(draw).collect();
        let m = metrics("beta1", 1.0, &draws, 0.95).unwrap();
        assert_abs_diff_eq!(m.pu, 50.0);
        assert_abs_diff_eq!(m.rb, 5.0, epsilon = 1e-12);
        // 0.9 +- 0.196 and 1.2 +- 0.196 both miss 1.0 only for 1.2
        assert_abs_diff_eq!(m.wald, 75.0);

        let draws: Vec<Draw> = [2.0; 5].into_iter().map(draw).collect();
        let m = metrics("beta1", 2.0, &draws, 0.95).unwrap();
        assert_eq!((m.pu, m.rb), (100.0, 0.0));
    }

    #[test]
    fn infinite_estimates_in_pu_only() {
        let mut draws: Vec<Draw> = [0.5, 1.5].into_iter().map(draw).collect();
        draws.push(Draw {
            estimate: 40.0,
            se: 1e5,
            flag: BoundaryFlag::PlusInfinity,
            finite: false,
        });
        draws.push(Draw {
            estimate: -40.0,
            se: 1e5,
            flag: BoundaryFlag::MinusInfinity,
            finite: false,
        });
        let m = metrics("beta1", 1.0, &draws, 0.95).unwrap();
        assert_abs_diff_eq!(m.pu, 50.0);
        assert_abs_diff_eq!(m.rb, 0.0, epsilon = 1e-12);
        assert_eq!(m.finite_replications, 2);
        assert_eq!(m.replications, 4);
    }

    #[test]
    fn zero_truth_reports_absolute_bias() {
        let draws: Vec<Draw> = [0.1, 0.3].into_iter().map(draw).collect();
        let m = metrics("beta1", 0.0, &draws, 0.95).unwrap();
        assert!(m.rb_is_absolute);
        assert_abs_diff_eq!(m.rb, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn design_reproducible_and_fixed_passthrough() {
        let mut cfg = table1_config(LinkFamily::Logit, 4, 1);
        cfg.design = DesignSpec::Recipe(vec![CovariateSpec::Bernoulli { p: 0.5 }]);
        cfg.theta0 = vec![-1.0, 2.0, 1.0];
        let a = generate_design(&cfg).unwrap();
        let b = generate_design(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r[0] == 0.0 || r[0] == 1.0));
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        cfg.design = DesignSpec::Fixed(rows.clone());
        assert_eq!(generate_design(&cfg).unwrap(), rows);
    }

    #[test]
    fn poisson_column_mean() {
        let mut cfg = table1_config(LinkFamily::Logit, 100_000, 1);
        cfg.design = DesignSpec::Recipe(vec![CovariateSpec::Poisson { lambda: 2.5 }]);
        cfg.theta0 = vec![-1.0, 2.0, 1.0];
        let rows = generate_design(&cfg).unwrap();
        let mean = rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        assert!((mean - 2.5).abs() < 0.03, "{mean}");
    }

    #[test]
    fn uniform_responses() {
        let link = LinkFamily::Probit;
        let theta = ParamVector::new(
            vec![link.quantile(1.0 / 3.0).unwrap(), link.quantile(2.0 / 3.0).unwrap()],
            vec![0.0],
        );
        let design = vec![vec![0.4]; 300_000];
        let y = simulate_response(&theta, &design, link, 17).unwrap();
        for j in 1..=3 {
            let f = y.iter().filter(|&&v| v == j).count() as f64 / y.len() as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.005);
        }
        assert_eq!(y, simulate_response(&theta, &design, link, 17).unwrap());
    }

    #[test]
    fn saturated_link_gives_first_category() {
        let theta = ParamVector::new(vec![10.0], vec![]);
        let y = simulate_response(&theta, &vec![vec![]; 1000], LinkFamily::Logit, 3).unwrap();
        assert!(y.iter().filter(|&&v| v == 1).count() >= 995);
    }

    #[test]
    fn config_validation() {
        let good = table1_config(LinkFamily::Logit, 50, 10);
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.theta0.pop();
        assert!(bad.validate().unwrap_err().to_string().contains("theta0"));
        let mut bad = good.clone();
        bad.replications = 0;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.gamma_coefficients = vec![7];
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.theta0[1] = -3.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert!(cfg.validate().is_ok(), "{name}");
            assert_eq!(cfg.replications, 10_000);
        }
        assert_eq!(preset("table1-probit-n100").unwrap().n, 100);
        assert!(preset("table1-logit-n75").is_none());
        assert!(preset("table9").is_none());
    }

    #[test]
    fn single_replication_study() {
        let cfg = table1_config(LinkFamily::Logit, 50, 1);
        let a = run_study(&cfg, Some(1)).unwrap();
        let b = run_study(&cfg, Some(3)).unwrap();
        assert_eq!(a, b);
        for m in &a.methods {
            assert_eq!(m.replications, 1);
            assert_eq!(m.parameters.len(), 6);
        }
    }
}
