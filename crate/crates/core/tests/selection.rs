use manifold_boundary::chisq::{chisq_cdf, tail_bound_constant, DegreesOfFreedom};
use manifold_boundary::kselect::{d_chi2_from_statistic, BRANCH_LEVEL};
use manifold_boundary::manifolds::derive_seed;
use manifold_boundary::{
    compute_statistic, d_chi2, generate, run_test, select_k, Branch, ManifoldKind, ManifoldSpec,
    PointCloud, TestConfig,
};

fn cloud(kind: ManifoldKind, n: usize, seed: u64) -> PointCloud {
    generate(&ManifoldSpec::new(kind, n, seed)).unwrap().0
}

#[test]
fn ecdf_converges_on_the_two_sphere() {
    let c = cloud(ManifoldKind::Sphere { dprime: 2 }, 3000, 3);
    let trace = select_k(&c, None).unwrap();
    let stat = compute_statistic(&c, trace.chosen_k).unwrap();
    let ecdf = stat.empirical_cdf();
    let d = DegreesOfFreedom::new(2).unwrap();
    let gap = stat
        .deltas()
        .iter()
        .map(|&x| (ecdf.eval(x) - chisq_cdf(d, x)).abs())
        .sum::<f64>()
        / c.len() as f64;
    assert!(gap < 0.05, "k = {}: {gap}", trace.chosen_k);
}

#[test]
fn selection_on_circle_keeps_the_null() {
    for seed in 0..5 {
        let trace = select_k(&cloud(ManifoldKind::Sphere { dprime: 1 }, 3000, seed), None).unwrap();
        let best = trace.chosen();
        assert!(best.d_chi2 < 0.1, "{best:?}");
        assert!(best.p_value_bound >= BRANCH_LEVEL, "{best:?}");
        assert_eq!(best.branch, Branch::AllPoints);
    }
}

#[test]
fn selection_on_half_circle_rejects() {
    let samples = 20;
    let good = (0..samples)
        .filter(|&s| {
            let c = cloud(
                ManifoldKind::HalfSphere { dprime: 1 },
                3000,
                derive_seed(44, s),
            );
            let trace = select_k(&c, None).unwrap();
            trace.chosen().branch == Branch::FarFromBoundary
                && run_test(&c, &TestConfig::threshold(0.05, trace.chosen_k))
                    .unwrap()
                    .reject
        })
        .count();
    assert!(good * 4 >= 3 * samples as usize, "{good}/{samples}");
}

#[test]
fn averaged_k_on_two_sphere_is_moderate() {
    let picks: Vec<usize> = (0..50)
        .map(|s| {
            select_k(
                &cloud(ManifoldKind::Sphere { dprime: 2 }, 1000, derive_seed(12, s)),
                None,
            )
            .unwrap()
            .chosen_k
        })
        .collect();
    let mean = picks.iter().sum::<usize>() as f64 / picks.len() as f64;
    assert!((15.0..=60.0).contains(&mean), "{mean} from {picks:?}");
}

#[test]
fn trace_invariants_and_replay() {
    for (kind, seed) in [
        (ManifoldKind::HalfSphere { dprime: 2 }, 1),
        (ManifoldKind::Sphere { dprime: 1 }, 2),
        (ManifoldKind::DEFAULT_SPIRAL, 3),
        (ManifoldKind::DEFAULT_TORUS, 4),
    ] {
        let c = cloud(kind, 1500, seed);
        let trace = select_k(&c, None).unwrap();
        for cand in &trace.candidates {
            assert_eq!(
                cand.branch == Branch::AllPoints,
                cand.p_value_bound >= BRANCH_LEVEL
            );
            assert!((0.0..=1.0).contains(&cand.d_chi2));
        }
        let best = trace.chosen();
        for cand in &trace.candidates {
            assert!(best.d_chi2 < cand.d_chi2 || (best.d_chi2 == cand.d_chi2 && best.k <= cand.k));
        }
        assert_eq!(select_k(&c, None).unwrap(), trace);
    }
}

#[test]
fn criterion_detects_overstated_dimension() {
    for seed in [21, 22, 23] {
        let c = cloud(ManifoldKind::Sphere { dprime: 1 }, 3000, seed);
        let right = d_chi2(&c, 30).unwrap();
        let wrong = d_chi2(&c.with_intrinsic_dim(2).unwrap(), 30).unwrap();
        assert_eq!(right.branch, Branch::AllPoints);
        assert!(3.0 * right.d_chi2 < wrong.d_chi2, "{right:?} vs {wrong:?}");
    }
}

#[test]
fn understated_dimension_is_not_detected() {
    // with d' = 1 on a surface the top eigenvector leans toward the mean
    // offset and the statistic stays close to chi^2(1)
    let c = cloud(ManifoldKind::Sphere { dprime: 2 }, 3000, 21);
    let stat = compute_statistic(&c.with_intrinsic_dim(1).unwrap(), 30).unwrap();
    let wrong = d_chi2_from_statistic(&stat, DegreesOfFreedom::new(1).unwrap()).unwrap();
    assert!(wrong.d_chi2 < 0.05, "{wrong:?}");
}

#[test]
fn flag_rate_on_the_circle_matches_its_null_bound() {
    let seeds = 50u64;
    let n = 2000;
    let flagged: usize = (0..seeds)
        .map(|s| {
            let c = cloud(ManifoldKind::Sphere { dprime: 1 }, n, derive_seed(33, s));
            let k = select_k(&c, None).unwrap().chosen_k;
            run_test(&c, &TestConfig::threshold(0.05, k))
                .unwrap()
                .boundary_points
                .len()
        })
        .sum();
    let rate = flagged as f64 / (seeds as usize * n) as f64;
    let null_rate = 0.05 / tail_bound_constant();
    assert!(
        rate > 0.5 * null_rate && rate < 1.5 * null_rate,
        "{rate} vs {null_rate}"
    );
}
