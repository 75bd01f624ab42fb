//! Score adjustments for mean and median bias reduction.
//!
//! With `U` the score, `i` the expected information and `j` the observed
//! information, the third-order moment matrices are
//! `P_r = E[U U' U_r]` and `Q_r = -E[j U_r]`. Mean bias reduction adds
//! `A*_r = tr{i^-1 (P_r + Q_r)} / 2` to the score; median bias reduction adds
//! `A* - i F`, where `F_r = [i^-1]_r' F~_r`,
//! `F~_{r,t} = tr[h_r {P_t / 3 + Q_t / 2}]` and `h_r = [i^-1]_r [i^-1]_r' / i^{rr}`.
//!
//! Observations are independent and each per-observation score has mean zero,
//! so the full-data expectations reduce to sums of per-observation expectations
//! over the `c` categories.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::links::LinkFamily;
use crate::model::{observation_terms, Dataset, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ml")]
    Ml,
    #[serde(rename = "mean-br")]
    MeanBr,
    #[serde(rename = "median-br")]
    MedianBr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ml, Method::MeanBr, Method::MedianBr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::MeanBr => "mean-br",
            Method::MedianBr => "median-br",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "ml" => Ok(Method::Ml),
            "mean-br" | "meanbr" => Ok(Method::MeanBr),
            "median-br" | "medianbr" => Ok(Method::MedianBr),
            other => Err(Error::Input(format!(
                "unknown method '{other}' (expected ml, mean-br or median-br)"
            ))),
        }
    }
}

/// `P_r` and `Q_r` for every parameter index `r`.
#[derive(Debug, Clone)]
pub struct Moments {
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
}

/// Everything needed to assemble the adjusted scores at one parameter value.
#[derive(Debug, Clone)]
pub struct AdjustmentBundle {
    pub score: DVector<f64>,
    pub info: DMatrix<f64>,
    pub info_inv: DMatrix<f64>,
    pub moments: Moments,
    pub a_star: DVector<f64>,
    pub h: Vec<DMatrix<f64>>,
    pub f: DVector<f64>,
}

impl AdjustmentBundle {
    /// `A~ = A* - i F`.
    pub fn median_adjustment(&self) -> DVector<f64> {
        &self.a_star - &self.info * &self.f
    }
}

struct Accumulated {
    score: DVector<f64>,
    info: DMatrix<f64>,
    moments: Option<Moments>,
}

fn accumulate(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
    with_moments: bool,
) -> Result<Accumulated> {
    if theta.alpha.len() != data.c() - 1 || theta.beta.len() != data.p() {
        return Err(Error::InvalidParameter(format!(
            "parameter dimension {} does not match data dimension {}",
            theta.dim(),
            data.dim()
        )));
    }
    theta.check_order()?;
    let d = theta.dim();
    let mut score = DVector::zeros(d);
    let mut info = DMatrix::zeros(d, d);
    let mut p = vec![DMatrix::zeros(d, d); if with_moments { d } else { 0 }];
    let mut q = p.clone();
    for i in 0..data.n() {
        let w = data.weights()[i];
        if w == 0.0 {
            continue;
        }
        let terms = observation_terms(theta, data.row(i), link, true);
        score.axpy(w, &terms.scores[data.y()[i] - 1], 1.0);
        for ((&prob, u), jmat) in terms.probs.iter().zip(&terms.scores).zip(&terms.infos) {
            if prob == 0.0 {
                continue;
            }
            let wp = w * prob;
            info += jmat * wp;
            if with_moments {
                let uu = u * u.transpose();
                for r in 0..d {
                    let s = wp * u[r];
                    if s == 0.0 {
                        continue;
                    }
                    p[r] += &uu * s;
                    q[r] -= jmat * s;
                }
            }
        }
    }
    Ok(Accumulated {
        score,
        info,
        moments: with_moments.then_some(Moments { p, q }),
    })
}

/// `P_r = E[U U' U_r]` and `Q_r = -E[j U_r]` by category enumeration per observation.
pub fn pq_moments(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<Moments> {
    Ok(accumulate(theta, data, link, true)?
        .moments
        .expect("moments requested"))
}

/// Score, information and all adjustment pieces at `theta`.
pub fn adjustment_bundle(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
) -> Result<AdjustmentBundle> {
    let acc = accumulate(theta, data, link, true)?;
    let moments = acc.moments.expect("moments requested");
    let info_inv = spd_inverse(&acc.info)?;
    let a_star = mean_adjustment(&info_inv, &moments);
    let (h, f) = median_terms(&info_inv, &moments)?;
    Ok(AdjustmentBundle {
        score: acc.score,
        info: acc.info,
        info_inv,
        moments,
        a_star,
        h,
        f,
    })
}

/// `A*_r = tr{i^-1 (P_r + Q_r)} / 2` given the inverse information.
pub fn mean_adjustment(info_inv: &DMatrix<f64>, moments: &Moments) -> DVector<f64> {
    let d = info_inv.nrows();
    DVector::from_iterator(
        d,
        moments
            .p
            .iter()
            .zip(&moments.q)
            .map(|(p, q)| 0.5 * trace_of_product(info_inv, &(p + q))),
    )
}

/// The matrices `h_r` and the vector `F`.
pub fn median_terms(
    info_inv: &DMatrix<f64>,
    moments: &Moments,
) -> Result<(Vec<DMatrix<f64>>, DVector<f64>)> {
    let d = info_inv.nrows();
    let mixed: Vec<DMatrix<f64>> = moments
        .p
        .iter()
        .zip(&moments.q)
        .map(|(p, q)| p / 3.0 + q / 2.0)
        .collect();
    let mut h = Vec::with_capacity(d);
    let mut f = DVector::zeros(d);
    for r in 0..d {
        let irr = info_inv[(r, r)];
        if !(irr > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "diagonal {r} of the inverse information is not positive ({irr})"
            )));
        }
        let col = info_inv.column(r).into_owned();
        let hr = &col * col.transpose() / irr;
        // F_r = sum_t [i^-1]_{t r} tr(h_r M_t)
        f[r] = (0..d)
            .map(|t| col[t] * trace_of_product(&hr, &mixed[t]))
            .sum();
        h.push(hr);
    }
    Ok((h, f))
}

fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(A B) = sum_ij A_ij B_ji
    a.iter()
        .zip(b.transpose().iter())
        .map(|(x, y)| x * y)
        .sum()
}

/// Mean bias-reducing adjustment `A*`.
pub fn a_star(theta: &ParamVector, data: &Dataset, link: LinkFamily) -> Result<DVector<f64>> {
    let acc = accumulate(theta, data, link, true)?;
    let info_inv = spd_inverse(&acc.info)?;
    Ok(mean_adjustment(&info_inv, acc.moments.as_ref().expect("moments requested")))
}

/// Median modification `F`.
pub fn median_modification(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
) -> Result<DVector<f64>> {
    let acc = accumulate(theta, data, link, true)?;
    let info_inv = spd_inverse(&acc.info)?;
    Ok(median_terms(&info_inv, acc.moments.as_ref().expect("moments requested"))?.1)
}

/// Score together with the expected information at `theta`.
pub fn score_and_info(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let acc = accumulate(theta, data, link, false)?;
    Ok((acc.score, acc.info))
}

/// Adjustment `A~` for `method` given a bundle.
pub fn adjustment_for(bundle: &AdjustmentBundle, method: Method) -> DVector<f64> {
    match method {
        Method::Ml => DVector::zeros(bundle.score.len()),
        Method::MeanBr => bundle.a_star.clone(),
        Method::MedianBr => bundle.median_adjustment(),
    }
}

/// `U`, `U + A*` or `U + A* - i F`.
pub fn adjusted_score(
    theta: &ParamVector,
    data: &Dataset,
    link: LinkFamily,
    method: Method,
) -> Result<DVector<f64>> {
    match method {
        Method::Ml => crate::model::score(theta, data, link),
        _ => {
            let bundle = adjustment_bundle(theta, data, link)?;
            Ok(&bundle.score + adjustment_for(&bundle, method))
        }
    }
}
