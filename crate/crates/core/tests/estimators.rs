use clmbr::adjust::adjusted_score;
use clmbr::datasets::wine;
use clmbr::links::LinkFamily::{self, Logit};
use clmbr::sim::{generate_design, simulate_response, table1_config};
use clmbr::solver::Termination;
use clmbr::{fit, BoundaryFlag, Dataset, Error, FitOptions, FitResult, Method};

fn fit_with(data: &Dataset, method: Method, link: LinkFamily) -> FitResult {
    fit(data, &FitOptions::new(method, link)).unwrap()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// A draw from the four-covariate design with an interior ML estimate.
fn simulated(link: LinkFamily, n: usize, rep: u64) -> Dataset {
    let cfg = table1_config(link, n, 1);
    let design = generate_design(&cfg).unwrap();
    let y = simulate_response(&cfg.theta0(), &design, link, rep).unwrap();
    Dataset::new(y, design, 3).unwrap()
}

#[test]
fn wine_fits() {
    let data = wine();
    let expect = [
        (Method::MedianBr, [-1.29, 6.46, -4.48, -1.24], [0.52, 2.32, 2.29, 0.68]),
        (Method::MeanBr, [-1.25, 5.48, -3.43, -1.19], [0.51, 1.48, 1.42, 0.67]),
    ];
    for (method, est, se) in expect {
        let res = fit_with(&data, method, Logit);
        assert!(res.converged && !res.has_boundary());
        let flat = res.theta_hat.to_flat();
        for k in 0..4 {
            assert!((flat[k] - est[k]).abs() < 0.005 + 1e-12, "{method} estimate {k}: {}", flat[k]);
            assert_eq!(round2(flat[k]), est[k], "{method} estimate {k}");
            assert!((res.se[k] - se[k]).abs() < 0.005 + 1e-12, "{method} se {k}: {}", res.se[k]);
        }
    }

    let ml = fit_with(&data, Method::Ml, Logit);
    assert_eq!(round2(ml.theta_hat.alpha[0]), -1.32);
    assert_eq!(round2(ml.se[0]), 0.53);
    assert_eq!(round2(ml.theta_hat.beta[1]), -1.31);
    assert!((ml.se[3] - 0.71).abs() < 0.01);
    assert_eq!(
        ml.boundary_flags,
        vec![
            BoundaryFlag::Interior,
            BoundaryFlag::PlusInfinity,
            BoundaryFlag::MinusInfinity,
            BoundaryFlag::Interior
        ]
    );
}

#[test]
fn converged_fits_solve_the_adjusted_equations() {
    let data = simulated(LinkFamily::Probit, 60, 4);
    for method in Method::ALL {
        let opts = FitOptions::new(method, LinkFamily::Probit);
        let res = fit(&data, &opts).unwrap();
        assert!(res.converged);
        let u = adjusted_score(&res.theta_hat, &data, LinkFamily::Probit, method).unwrap();
        assert!(u.amax() < opts.tol, "{method}: {}", u.amax());
    }
}

#[test]
fn fits_are_deterministic() {
    let data = simulated(LinkFamily::Cloglog, 50, 9);
    for method in Method::ALL {
        let a = fit_with(&data, method, LinkFamily::Cloglog);
        let b = fit_with(&data, method, LinkFamily::Cloglog);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.theta_hat, b.theta_hat);
    }
}

#[test]
fn binomial_closed_forms() {
    for (y, n) in [(0usize, 5usize), (1, 4), (3, 7), (6, 6)] {
        let resp: Vec<usize> = (0..n).map(|i| if i < y { 1 } else { 2 }).collect();
        // ends of the range need both categories present for the fit to run
        if y == 0 || y == n {
            let data = Dataset::new(resp, vec![vec![]; n], 2).unwrap();
            assert!(matches!(fit_with_err(&data), Error::DegenerateData(_)));
            continue;
        }
        let data = Dataset::new(resp, vec![vec![]; n], 2).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let (y, n) = (y as f64, n as f64);
        let ml = fit_with(&data, Method::Ml, Logit).theta_hat.alpha[0];
        let mean = fit_with(&data, Method::MeanBr, Logit).theta_hat.alpha[0];
        let median = fit_with(&data, Method::MedianBr, Logit).theta_hat.alpha[0];
        assert!((ml - logit(y / n)).abs() < 1e-9);
        assert!((mean - logit((y + 0.5) / (n + 1.0))).abs() < 1e-9);
        assert!((median - logit((y + 1.0 / 6.0) / (n + 1.0 / 3.0))).abs() < 1e-9);
    }
}

fn fit_with_err(data: &Dataset) -> Error {
    fit(data, &FitOptions::new(Method::MedianBr, Logit)).unwrap_err()
}

#[test]
fn rescaling_a_covariate_rescales_its_coefficient() {
    let cases = [
        (wine(), Logit),
        (simulated(Logit, 50, 1), Logit),
        (simulated(LinkFamily::Probit, 50, 2), LinkFamily::Probit),
        (simulated(LinkFamily::Cloglog, 50, 3), LinkFamily::Cloglog),
    ];
    for (data, link) in cases {
        for method in Method::ALL {
            let base = fit_with(&data, method, link);
            if base.has_boundary() {
                continue;
            }
            let base_flat = base.theta_hat.to_flat();
            let n_cut = base.theta_hat.alpha.len();
            for k in 0..data.p() {
                for kappa in [2.5, 0.1, -3.0] {
                    let scaled = data.map_column(k, |v| kappa * v);
                    let res = fit_with(&scaled, method, link);
                    let flat = res.theta_hat.to_flat();
                    for r in 0..flat.len() {
                        let want = if r == n_cut + k { base_flat[r] / kappa } else { base_flat[r] };
                        assert!(
                            (flat[r] - want).abs() < 1e-7 * want.abs().max(1.0),
                            "{link} {method} k={k} kappa={kappa} r={r}: {} vs {want}",
                            flat[r]
                        );
                    }
                }
            }
        }
    }
}

// x_k -> a x_k + b is a linear reparameterization mixing the cutpoints and
// beta_k. ML and mean BR follow it; median BR is only equivariant under
// componentwise maps, so only b = 0 applies to it (see the rescaling test).
#[test]
fn affine_covariate_maps() {
    let data = simulated(Logit, 100, 11);
    for method in [Method::Ml, Method::MeanBr] {
        let base = fit_with(&data, method, Logit);
        assert!(!base.has_boundary());
        for k in 0..data.p() {
            for (a, b) in [(1.0, 1.0), (2.0, -0.5), (-0.5, 3.0)] {
                let res = fit_with(&data.map_column(k, |v| a * v + b), method, Logit);
                let bk = base.theta_hat.beta[k];
                for (got, want) in res.theta_hat.alpha.iter().zip(&base.theta_hat.alpha) {
                    let want = want - b * bk / a;
                    assert!((got - want).abs() < 1e-7 * want.abs().max(1.0), "{method} k={k}");
                }
                for (r, (got, want)) in res.theta_hat.beta.iter().zip(&base.theta_hat.beta).enumerate() {
                    let want = if r == k { want / a } else { *want };
                    assert!((got - want).abs() < 1e-7 * want.abs().max(1.0), "{method} k={k} r={r}");
                }
            }
        }
    }
}

fn with_empty_middles(data: &Dataset) -> Dataset {
    // 1 -> 1, 2 -> 3, 3 -> 5 with five categories
    let y = data.y().iter().map(|&v| 2 * v - 1).collect();
    data.with_responses(y, 5).unwrap()
}

#[test]
fn grouping_empty_middle_categories_leaves_beta_unchanged() {
    for (data, link) in [(wine(), Logit), (simulated(LinkFamily::Probit, 50, 5), LinkFamily::Probit)] {
        let spread = with_empty_middles(&data);
        for method in Method::ALL {
            let pre = fit_with(&data, method, link);
            let merged = fit_with(&spread, method, link);
            assert_eq!(merged.grouping.merged, vec![2, 4]);
            assert_eq!(merged.grouping.fitted_categories, 3);
            for (a, b) in merged.theta_hat.beta.iter().zip(&pre.theta_hat.beta) {
                assert!((a - b).abs() < 1e-6, "{link} {method}: {a} vs {b}");
            }
            let alpha = merged.grouping.expand_alpha(&merged.theta_hat.alpha);
            assert_eq!(alpha.len(), 4);
            assert_eq!(alpha[0], alpha[1]);
            assert_eq!(alpha[2], alpha[3]);
        }
    }
}

#[test]
fn ungrouped_diagnostic_reports_coincident_cutpoints() {
    let spread = with_empty_middles(&simulated(Logit, 80, 6));
    let mut opts = FitOptions::new(Method::Ml, Logit);
    opts.group_categories = false;
    let res = fit(&spread, &opts).unwrap();
    assert_eq!(res.termination, Termination::MergedCutpoints);
    assert!(res.boundary_flags[..4].contains(&BoundaryFlag::MergedCutpoint));
}

#[test]
fn extreme_empty_category_gives_infinite_ml_cutpoint() {
    // nothing in category 3: ML pushes alpha_2 to +infinity, BR stays finite
    let data = simulated(Logit, 60, 8);
    let y = data.y().iter().map(|&v| v.min(2)).collect();
    let capped = data.with_responses(y, 3).unwrap();
    let ml = fit_with(&capped, Method::Ml, Logit);
    assert_eq!(ml.boundary_flags[1], BoundaryFlag::PlusInfinity);
    for method in [Method::MeanBr, Method::MedianBr] {
        let res = fit_with(&capped, method, Logit);
        assert!(res.converged && !res.has_boundary(), "{method}");
    }
}

#[test]
fn one_observed_category_is_rejected() {
    let data = Dataset::new(vec![2; 5], vec![vec![1.0]; 5], 3).unwrap();
    for method in Method::ALL {
        let err = fit(&data, &FitOptions::new(method, Logit)).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }
}
