//! Link families for cumulative link models.
//!
//! Each family supplies the error distribution `G` of the latent variable,
//! its density `g = G'` and the derivative `g' = G''`, all in closed form.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFamily {
    /// Logistic errors, the proportional odds model.
    #[default]
    Logit,
    /// Standard normal errors.
    Probit,
    /// Minimum extreme value errors, the proportional hazards model.
    Cloglog,
}

impl LinkFamily {
    pub const ALL: [LinkFamily; 3] = [LinkFamily::Logit, LinkFamily::Probit, LinkFamily::Cloglog];

    pub fn name(self) -> &'static str {
        match self {
            LinkFamily::Logit => "logit",
            LinkFamily::Probit => "probit",
            LinkFamily::Cloglog => "cloglog",
        }
    }

    /// Cumulative distribution function `G(eta)`.
    ///
    /// Saturates to exactly 0 or 1 in the far tails instead of producing NaN.
    #[inline]
    pub fn cdf(self, eta: f64) -> f64 {
        match self {
            LinkFamily::Logit => expit(eta),
            LinkFamily::Probit => 0.5 * erfc(-eta * FRAC_1_SQRT_2),
            LinkFamily::Cloglog => -(-eta.exp()).exp_m1(),
        }
    }

    /// Survival function `1 - G(eta)`, accurate in the upper tail.
    #[inline]
    pub fn sf(self, eta: f64) -> f64 {
        match self {
            LinkFamily::Logit => expit(-eta),
            LinkFamily::Probit => 0.5 * erfc(eta * FRAC_1_SQRT_2),
            LinkFamily::Cloglog => (-eta.exp()).exp(),
        }
    }

    /// Density `g(eta) = G'(eta)`.
    #[inline]
    pub fn pdf(self, eta: f64) -> f64 {
        match self {
            LinkFamily::Logit => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkFamily::Probit => INV_SQRT_2PI * (-0.5 * eta * eta).exp(),
            LinkFamily::Cloglog => {
                let z = eta - eta.exp();
                if z.is_nan() {
                    0.0
                } else {
                    z.exp()
                }
            }
        }
    }

    /// Second derivative `g'(eta) = G''(eta)`.
    #[inline]
    pub fn pdf_prime(self, eta: f64) -> f64 {
        match self {
            // g' = g (1 - 2G) = g tanh(-eta / 2)
            LinkFamily::Logit => self.pdf(eta) * (-0.5 * eta).tanh(),
            LinkFamily::Probit => -eta * self.pdf(eta),
            LinkFamily::Cloglog => {
                let d = self.pdf(eta);
                if d == 0.0 {
                    0.0
                } else {
                    d * (1.0 - eta.exp())
                }
            }
        }
    }

    /// Quantile function `G^{-1}(p)` for `0 < p < 1`.
    pub fn quantile(self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile requires a probability in (0, 1), got {p}"
            )));
        }
        Ok(match self {
            LinkFamily::Logit => (p / (1.0 - p)).ln(),
            LinkFamily::Probit => {
                let x = -SQRT_2 * erfc_inv(2.0 * p);
                newton_polish(self, x, p)
            }
            LinkFamily::Cloglog => (-(-p).ln_1p()).ln(),
        })
    }

    /// Inverse of the survival function: the `x` with `1 - G(x) = q`.
    ///
    /// Keeps full relative precision where `G(x)` rounds to one.
    pub fn quantile_upper(self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "upper quantile requires a probability in (0, 1), got {q}"
            )));
        }
        Ok(match self {
            LinkFamily::Logit => ((1.0 - q) / q).ln(),
            LinkFamily::Probit => -self.quantile(q)?,
            LinkFamily::Cloglog => (-q.ln()).ln(),
        })
    }
}

fn newton_polish(link: LinkFamily, mut x: f64, p: f64) -> f64 {
    for _ in 0..2 {
        let d = link.pdf(x);
        if d <= 0.0 {
            break;
        }
        // work with the smaller tail for accuracy
        let step = if x <= 0.0 {
            (link.cdf(x) - p) / d
        } else {
            ((1.0 - p) - link.sf(x)) / d
        };
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

#[inline]
pub(crate) fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkFamily::Logit),
            "probit" => Ok(LinkFamily::Probit),
            "cloglog" => Ok(LinkFamily::Cloglog),
            other => Err(Error::Input(format!(
                "unknown link '{other}' (expected logit, probit or cloglog)"
            ))),
        }
    }
}
