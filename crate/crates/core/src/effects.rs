//! Ordinal superiority measure for binary covariates.
//!
//! `gamma(beta_r)` is the probability that an outcome from the group with
//! `x_r = 1` falls above an independent outcome from the group with `x_r = 0`,
//! plus half the probability of a tie, holding the other covariates fixed:
//!
//! * probit: `Phi(-beta_r / sqrt 2)` (exact)
//! * cloglog: `expit(-beta_r)` (exact)
//! * logit: `expit(-beta_r / sqrt 2)` (approximation)

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::{expit, LinkFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub gamma: f64,
    pub se_gamma: f64,
    pub ci: (f64, f64),
    /// The closed form for this link is an approximation.
    pub approximate: bool,
}

/// Whether the closed-form `gamma` for `link` is only approximate.
pub fn is_approximate(link: LinkFamily) -> bool {
    link == LinkFamily::Logit
}

pub fn gamma_measure(link: LinkFamily, beta_r: f64) -> f64 {
    match link {
        LinkFamily::Logit => expit(-beta_r * FRAC_1_SQRT_2),
        LinkFamily::Probit => LinkFamily::Probit.cdf(-beta_r * FRAC_1_SQRT_2),
        LinkFamily::Cloglog => expit(-beta_r),
    }
}

/// `d gamma / d beta_r`, always negative.
pub fn gamma_derivative(link: LinkFamily, beta_r: f64) -> f64 {
    match link {
        LinkFamily::Logit => -FRAC_1_SQRT_2 * LinkFamily::Logit.pdf(beta_r * FRAC_1_SQRT_2),
        LinkFamily::Probit => -FRAC_1_SQRT_2 * LinkFamily::Probit.pdf(beta_r * FRAC_1_SQRT_2),
        LinkFamily::Cloglog => -LinkFamily::Logit.pdf(beta_r),
    }
}

/// Delta-method standard error of `gamma(beta_r)`.
pub fn gamma_se(link: LinkFamily, beta_r: f64, se_beta_r: f64) -> Result<f64> {
    if !(se_beta_r >= 0.0) {
        return Err(Error::Domain(format!(
            "standard error must be non-negative, got {se_beta_r}"
        )));
    }
    if se_beta_r == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_derivative(link, beta_r).abs() * se_beta_r)
}

/// `estimate -/+ z_{(1 + level) / 2} se`.
pub fn wald_interval(estimate: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !(se >= 0.0) {
        return Err(Error::Domain(format!("standard error must be non-negative, got {se}")));
    }
    if se == 0.0 {
        return Ok((estimate, estimate));
    }
    let z = LinkFamily::Probit.quantile(0.5 * (1.0 + level))?;
    Ok((estimate - z * se, estimate + z * se))
}

/// `gamma`, its delta-method standard error, and the interval obtained by
/// mapping the Wald interval for `beta_r` through the (decreasing) transform.
pub fn effect_estimate(
    link: LinkFamily,
    beta_r: f64,
    se_beta_r: f64,
    level: f64,
) -> Result<EffectEstimate> {
    let (lo, hi) = wald_interval(beta_r, se_beta_r, level)?;
    Ok(EffectEstimate {
        gamma: gamma_measure(link, beta_r),
        se_gamma: gamma_se(link, beta_r, se_beta_r)?,
        ci: (gamma_measure(link, hi), gamma_measure(link, lo)),
        approximate: is_approximate(link),
    })
}
