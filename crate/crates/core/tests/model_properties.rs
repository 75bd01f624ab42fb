use clmbr::datasets::wine;
use clmbr::model::{
    cell_probs, exp_info, exp_info_outer, loglik, obs_info, observation_terms, score,
};
use clmbr::oracle::{fd_gradient, fd_jacobian};
use clmbr::solver::starting_values;
use clmbr::{Dataset, LinkFamily, ParamVector};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_theta(rng: &mut ChaCha8Rng, cuts: usize, p: usize) -> ParamVector {
    let mut alpha = vec![rng.random_range(-2.0..0.5)];
    for _ in 1..cuts {
        let last = *alpha.last().unwrap();
        alpha.push(last + rng.random_range(0.3..2.5));
    }
    let beta = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    ParamVector::new(alpha, beta)
}

fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn rel_err_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

/// Wine data with an extra continuous column, so every link gets exercised on
/// non-binary covariates too.
fn wine_plus() -> Dataset {
    let w = wine();
    let rows = (0..w.n())
        .map(|i| {
            let mut r = w.row(i).to_vec();
            r.push(((i * 37) % 11) as f64 / 5.0 - 1.0);
            r
        })
        .collect();
    Dataset::new(w.y().to_vec(), rows, 3).unwrap()
}

#[test]
fn score_and_observed_information_match_finite_differences() {
    let data = wine_plus();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for link in LinkFamily::ALL {
        for _ in 0..20 {
            let theta = random_theta(&mut rng, 2, 3);
            let flat = theta.to_flat();
            let ll = |t: &DVector<f64>| loglik(&ParamVector::from_flat(t, 2), &data, link).unwrap();
            let grad = fd_gradient(ll, &flat, 1e-5);
            let u = score(&theta, &data, link).unwrap();
            assert!(rel_err_vec(&u, &grad) < 1e-5, "{link} score at {flat}");

            let s = |t: &DVector<f64>| score(&ParamVector::from_flat(t, 2), &data, link).unwrap();
            let hess = fd_jacobian(s, &flat, 1e-5);
            let j = obs_info(&theta, &data, link).unwrap();
            assert!(rel_err_mat(&j, &(-hess)) < 1e-5, "{link} obs_info at {flat}");
        }
    }
}

#[test]
fn information_identity() {
    let data = wine_plus();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for link in LinkFamily::ALL {
        for _ in 0..20 {
            let theta = random_theta(&mut rng, 2, 3);
            let a = exp_info(&theta, &data, link).unwrap();
            let b = exp_info_outer(&theta, &data, link).unwrap();
            assert!(rel_err_mat(&a, &b) < 1e-9, "{link}: {}", (&a - &b).amax());
        }
    }
}

#[test]
fn expected_information_is_positive_semidefinite() {
    let data = wine_plus();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..100 {
        let link = LinkFamily::ALL[k % 3];
        let theta = random_theta(&mut rng, 2, 3);
        let info = exp_info(&theta, &data, link).unwrap();
        let eig = SymmetricEigen::new(info.clone()).eigenvalues;
        assert!(eig.min() >= -1e-10 * info.amax(), "{link}: {eig}");
    }
}

#[test]
fn permutation_leaves_totals_unchanged() {
    let data = wine_plus();
    let order: Vec<usize> = (0..data.n()).map(|i| (i * 29 + 5) % data.n()).collect();
    let shuffled = data.permuted(&order);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for link in LinkFamily::ALL {
        let theta = random_theta(&mut rng, 2, 3);
        let l0 = loglik(&theta, &data, link).unwrap();
        let l1 = loglik(&theta, &shuffled, link).unwrap();
        assert!((l0 - l1).abs() <= 1e-12 * l0.abs().max(1.0));
        let u0 = score(&theta, &data, link).unwrap();
        let u1 = score(&theta, &shuffled, link).unwrap();
        assert!(rel_err_vec(&u1, &u0) < 1e-12);
        for f in [obs_info, exp_info] {
            let a = f(&theta, &data, link).unwrap();
            let b = f(&theta, &shuffled, link).unwrap();
            assert!(rel_err_mat(&b, &a) < 1e-12);
        }
    }
}

#[test]
fn starting_values_give_uniform_cells() {
    for c in 2..=7 {
        let rows = vec![vec![0.3, -1.0], vec![2.0, 5.0]];
        let data = Dataset::new(vec![1, c], rows, c).unwrap();
        for link in LinkFamily::ALL {
            let theta = starting_values(&data, link);
            assert!(theta.beta.iter().all(|&b| b == 0.0));
            for i in 0..data.n() {
                let probs = cell_probs(&theta, data.row(i), link).unwrap();
                for p in probs {
                    assert!((p - 1.0 / c as f64).abs() < 1e-12, "{link} c={c}: {p}");
                }
            }
        }
    }
}

#[test]
fn loglik_at_median_br_wine_fit_matches_direct_sum() {
    let data = wine();
    let res = clmbr::fit(&data, &clmbr::FitOptions::new(clmbr::Method::MedianBr, LinkFamily::Logit))
        .unwrap();
    let a = &res.theta_hat.alpha;
    let b = &res.theta_hat.beta;
    let expit = |t: f64| 1.0 / (1.0 + (-t).exp());
    let mut direct = 0.0;
    for i in 0..data.n() {
        let xb = data.row(i)[0] * b[0] + data.row(i)[1] * b[1];
        let upper = if data.y()[i] == 3 { 1.0 } else { expit(a[data.y()[i] - 1] + xb) };
        let lower = if data.y()[i] == 1 { 0.0 } else { expit(a[data.y()[i] - 2] + xb) };
        direct += (upper - lower).ln();
    }
    let ll = loglik(&res.theta_hat, &data, LinkFamily::Logit).unwrap();
    assert!((ll - direct).abs() < 1e-10, "{ll} vs {direct}");
}

#[test]
fn integer_weights_equal_replicated_rows() {
    let base = wine_plus();
    let w: Vec<f64> = (0..base.n()).map(|i| (i % 3) as f64).collect();
    let weighted = base.clone().with_weights(w.clone()).unwrap();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for i in 0..base.n() {
        for _ in 0..w[i] as usize {
            y.push(base.y()[i]);
            rows.push(base.row(i).to_vec());
        }
    }
    let expanded = Dataset::new(y, rows, 3).unwrap();
    let theta = ParamVector::new(vec![-0.7, 1.4], vec![0.5, -0.3, 0.2]);
    for link in LinkFamily::ALL {
        let a = exp_info(&theta, &weighted, link).unwrap();
        let b = exp_info(&theta, &expanded, link).unwrap();
        assert!(rel_err_mat(&a, &b) < 1e-12);
        let la = loglik(&theta, &weighted, link).unwrap();
        let lb = loglik(&theta, &expanded, link).unwrap();
        assert!((la - lb).abs() < 1e-10);
    }
}

fn arb_point() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=6, 0usize..=3).prop_flat_map(|(c, p)| {
        (
            Just(c),
            prop::collection::vec(0.05f64..2.0, c - 1),
            prop::collection::vec(-3.0f64..3.0, p),
            prop::collection::vec(-2.0f64..2.0, p),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cell_probabilities_sum_to_one_and_scores_center(
        (c, gaps, beta, x) in arb_point(),
        start in -4.0f64..2.0,
        link_idx in 0usize..3,
    ) {
        let link = LinkFamily::ALL[link_idx];
        let mut alpha = Vec::with_capacity(c - 1);
        let mut a = start;
        for g in gaps {
            alpha.push(a);
            a += g;
        }
        let theta = ParamVector::new(alpha, beta);
        let terms = observation_terms(&theta, &x, link, true);
        let total: f64 = terms.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut centred = DVector::zeros(theta.dim());
        for (p, u) in terms.probs.iter().zip(&terms.scores) {
            centred += u * *p;
        }
        let scale = terms.scores.iter().zip(&terms.probs).map(|(u, p)| u.amax() * p).fold(1.0, f64::max);
        prop_assert!(centred.amax() < 1e-12 * scale, "{}", centred);
    }

    #[test]
    fn cutpoint_order_is_enforced(a1 in -3.0f64..3.0, drop in 1e-6f64..2.0) {
        let theta = ParamVector::new(vec![a1, a1 - drop], vec![]);
        prop_assert!(cell_probs(&theta, &[], LinkFamily::Logit).is_err());
    }
}
