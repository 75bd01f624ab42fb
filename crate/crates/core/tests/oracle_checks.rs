use clmbr::adjust::pq_moments;
use clmbr::oracle::{enumerate_moments, exact_estimator_distribution, latent_gamma_mc};
use clmbr::effects::gamma_measure;
use clmbr::model::cell_probs;
use clmbr::solver::starting_values;
use clmbr::{fit, BoundaryFlag, Dataset, FitOptions, LinkFamily, Method, ParamVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn enumeration_matches_per_observation_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut designs = 0;
    while designs < 25 {
        let c = rng.random_range(2..=4usize);
        let n = rng.random_range(1..=8usize);
        if (c as u32).pow(n as u32) > 6561 {
            continue;
        }
        let p = rng.random_range(0..=2usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let y = (0..n).map(|_| rng.random_range(1..=c)).collect();
        let data = Dataset::new(y, rows, c).unwrap();
        let mut alpha = vec![rng.random_range(-1.5..0.0)];
        for _ in 2..c {
            let last = *alpha.last().unwrap();
            alpha.push(last + rng.random_range(0.2..1.5));
        }
        let beta = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = ParamVector::new(alpha, beta);
        let link = LinkFamily::ALL[designs % 3];
        let fast = pq_moments(&theta, &data, link).unwrap();
        for r in 0..theta.dim() {
            let (p_r, q_r) = enumerate_moments(&theta, &data, link, r).unwrap();
            let scale = p_r.amax().max(q_r.amax()).max(1.0);
            assert!((&fast.p[r] - &p_r).amax() < 1e-8 * scale, "{link} c={c} n={n} r={r}");
            assert!((&fast.q[r] - &q_r).amax() < 1e-8 * scale, "{link} c={c} n={n} r={r}");
            assert!((&p_r - p_r.transpose()).amax() < 1e-12 * scale);
        }
        designs += 1;
    }
}

#[test]
fn enumeration_is_invariant_to_observation_order() {
    let rows = vec![vec![0.0], vec![1.0], vec![-0.5], vec![2.0], vec![1.0]];
    let data = Dataset::new(vec![1, 2, 3, 1, 2], rows, 3).unwrap();
    let shuffled = data.permuted(&[4, 2, 0, 3, 1]);
    let theta = ParamVector::new(vec![-0.4, 0.9], vec![0.6]);
    for r in 0..3 {
        let (p0, q0) = enumerate_moments(&theta, &data, LinkFamily::Probit, r).unwrap();
        let (p1, q1) = enumerate_moments(&theta, &shuffled, LinkFamily::Probit, r).unwrap();
        assert!((p0 - p1).amax() < 1e-12);
        assert!((q0 - q1).amax() < 1e-12);
    }
}

fn binary_design(n: usize, c: usize) -> Dataset {
    let rows = (0..n).map(|i| vec![(i % 2) as f64]).collect();
    let y = (0..n).map(|i| i % c + 1).collect();
    Dataset::new(y, rows, c).unwrap()
}

#[test]
fn probabilities_sum_to_one() {
    let design = binary_design(8, 3);
    let theta0 = ParamVector::new(vec![-1.0, 1.0], vec![1.0]);
    let rep = exact_estimator_distribution(&design, &theta0, LinkFamily::Logit, Method::Ml).unwrap();
    assert!((rep.total_probability - 1.0).abs() < 1e-12);
    let fitted: f64 = rep.outcomes.iter().map(|(_, p)| p).sum();
    assert!((fitted + rep.failed_mass - 1.0).abs() < 1e-12);
}

// Reversing the category order maps the estimate of beta to its negative for
// every method, and leaves the outcome probabilities unchanged when theta0 sits
// at the symmetric starting values, so Pr(<) = Pr(>).
#[test]
fn symmetric_design_is_exactly_median_centred() {
    let design = Dataset::new(vec![1; 6], (0..6).map(|i| vec![[0.0, 1.0, 2.5][i % 3]]).collect(), 3)
        .unwrap();
    for link in [LinkFamily::Logit, LinkFamily::Probit] {
        let theta0 = starting_values(&design, link);
        for method in Method::ALL {
            let rep = exact_estimator_distribution(&design, &theta0, link, method).unwrap();
            let mid = rep.mid_underestimation(2);
            assert!((mid - 0.5).abs() < 1e-12, "{link} {method}: {mid}");
        }
    }
}

#[test]
fn empty_middle_category_mass_matches_pratt() {
    let design = binary_design(6, 3);
    let theta0 = ParamVector::new(vec![-0.5, 0.4], vec![0.7]);
    let link = LinkFamily::Logit;
    let rep = exact_estimator_distribution(&design, &theta0, link, Method::Ml).unwrap();
    let merged_mass: f64 = rep
        .outcomes
        .iter()
        .filter(|(v, _)| v[0] == v[1])
        .map(|(_, p)| p)
        .sum();

    let probs: Vec<Vec<f64>> = (0..6).map(|i| cell_probs(&theta0, design.row(i), link).unwrap()).collect();
    let none_in = |cats: &[usize]| -> f64 {
        probs.iter().map(|p| cats.iter().map(|&j| p[j]).sum::<f64>()).product()
    };
    // middle empty, both extremes observed
    let predicted = none_in(&[0, 2]) - none_in(&[0]) - none_in(&[2]);
    assert!((merged_mass - predicted).abs() < 1e-12, "{merged_mass} vs {predicted}");
}

#[test]
fn ungrouped_fits_flag_merged_cutpoints() {
    let design = binary_design(6, 3);
    let mut opts = FitOptions::new(Method::Ml, LinkFamily::Logit);
    opts.group_categories = false;
    let mut checked = 0;
    for code in 0..729usize {
        let y: Vec<usize> = (0..6).map(|i| (code / 3usize.pow(i as u32)) % 3 + 1).collect();
        let counts = [1, 2, 3].map(|j| y.iter().filter(|&&v| v == j).count());
        if counts[1] != 0 || counts[0] == 0 || counts[2] == 0 {
            continue;
        }
        let data = design.with_responses(y, 3).unwrap();
        let grouped = fit(&data, &FitOptions::new(Method::Ml, LinkFamily::Logit)).unwrap();
        assert_eq!(grouped.grouping.merged, vec![2]);
        if grouped.has_boundary() {
            // separated as well; every parameter diverges
            continue;
        }
        let res = fit(&data, &opts).unwrap();
        assert!(
            res.boundary_flags[..2].contains(&BoundaryFlag::MergedCutpoint),
            "{:?}: {:?} {:?}",
            data.y(),
            res.theta_hat,
            res.boundary_flags
        );
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn latent_simulation_confirms_closed_forms() {
    let (g, se) = latent_gamma_mc(LinkFamily::Probit, 1.2, 1_000_000, 17);
    assert!((g - 0.198).abs() < 0.002, "{g} ± {se}");
    assert!((g - gamma_measure(LinkFamily::Probit, 1.2)).abs() < 4.0 * se);

    for beta in [-0.8, 0.5, 1.5] {
        let (g, se) = latent_gamma_mc(LinkFamily::Cloglog, beta, 400_000, 5);
        assert!((g - gamma_measure(LinkFamily::Cloglog, beta)).abs() < 4.0 * se);
    }

    let (g, se) = latent_gamma_mc(LinkFamily::Logit, 1.0, 1_000_000, 23);
    let approx = gamma_measure(LinkFamily::Logit, 1.0);
    println!("logit beta=1: latent {g:.5} (se {se:.5}), closed form {approx:.5}, gap {:.5}", g - approx);
}
