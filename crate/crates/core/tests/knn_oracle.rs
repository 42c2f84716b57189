use manifold_boundary::knn::brute_force_k_nearest;
use manifold_boundary::{generate, ManifoldKind, ManifoldSpec, NeighborIndex, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng) -> PointCloud {
    let n = rng.random_range(25..=500);
    let d = rng.random_range(1..=6);
    let lattice = rng.random_bool(0.2);
    let mut coords: Vec<f64> = (0..n * d)
        .map(|_| {
            if lattice {
                // many exact distance ties
                rng.random_range(-3i32..=3) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    if !lattice && rng.random_bool(0.3) {
        for _ in 0..rng.random_range(1..5) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let src: Vec<f64> = coords[a * d..(a + 1) * d].to_vec();
            coords[b * d..(b + 1) * d].copy_from_slice(&src);
        }
    }
    PointCloud::new(coords, d, 1).unwrap()
}

#[test]
fn index_matches_brute_force_on_200_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut queries = 0usize;
    for _ in 0..200 {
        let cloud = random_cloud(&mut rng);
        let index = NeighborIndex::build(&cloud);
        for k in [1usize, 5, 20] {
            if k >= cloud.len() {
                continue;
            }
            for i in 0..cloud.len() {
                let fast = index.k_nearest(i, k);
                let slow = brute_force_k_nearest(&cloud, i, k);
                match (fast, slow) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a.neighbor_indices, b.neighbor_indices, "query {i}, k {k}");
                        assert_eq!(a.radius, b.radius);
                    }
                    (Err(a), Err(b)) => assert_eq!(a, b),
                    (a, b) => panic!("index {a:?} vs brute force {b:?}"),
                }
                queries += 1;
            }
        }
    }
    assert!(queries > 100_000);
}

#[test]
fn median_max_radius_shrinks_with_n() {
    let k = 10;
    let sizes = [200usize, 500, 1000, 2000];
    let medians: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let mut maxima: Vec<f64> = (0..20u64)
                .map(|seed| {
                    let spec = ManifoldSpec::new(ManifoldKind::Sphere { dprime: 2 }, n, seed);
                    let (cloud, _) = generate(&spec).unwrap();
                    let index = NeighborIndex::build(&cloud);
                    (0..n)
                        .map(|i| index.k_nearest(i, k).unwrap().radius)
                        .fold(0.0, f64::max)
                })
                .collect();
            maxima.sort_by(f64::total_cmp);
            0.5 * (maxima[9] + maxima[10])
        })
        .collect();
    for w in medians.windows(2) {
        assert!(w[1] < w[0], "{medians:?}");
    }
}
