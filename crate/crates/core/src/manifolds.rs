//! Seeded synthetic samples with known ground truth.
//!
//! Every generator draws from a `ChaCha8` stream seeded by the spec's 64-bit
//! seed, so a spec reproduces its cloud bit for bit. Monte Carlo replications
//! get independent streams through [`derive_seed`].
//!
//! Trefoil, torus and Moebius samples are uniform in their chart parameters,
//! not in surface measure; their densities are smooth and bounded below,
//! which is all the test needs.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::PointCloud;

/// One of the supported sampling supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ManifoldKind {
    /// Unit `d'`-sphere in `R^{d'+1}`.
    Sphere {
        dprime: usize,
    },
    /// Upper half (last coordinate `>= 0`) of the unit `d'`-sphere.
    HalfSphere {
        dprime: usize,
    },
    Trefoil,
    Torus {
        major: f64,
        minor: f64,
    },
    Moebius {
        width: f64,
    },
    /// Archimedean spiral `(t cos t, t sin t)`, `t in [t0, t1]`.
    Spiral {
        t0: f64,
        t1: f64,
    },
    /// Perimeter of the unit square: no boundary, but corners.
    SquarePerimeter,
    /// Unit circle with density `p_low` on `x <= 0` and `p_high` on `x > 0`.
    CircleDiscontinuous {
        p_low: f64,
        p_high: f64,
    },
}

impl ManifoldKind {
    pub const DEFAULT_TORUS: ManifoldKind = ManifoldKind::Torus {
        major: 2.0,
        minor: 1.0,
    };
    pub const DEFAULT_MOEBIUS: ManifoldKind = ManifoldKind::Moebius { width: 0.4 };
    pub const DEFAULT_SPIRAL: ManifoldKind = ManifoldKind::Spiral {
        t0: FRAC_PI_2,
        t1: 3.0 * PI,
    };
    pub const DEFAULT_CIRCLE_DISCONTINUOUS: ManifoldKind = ManifoldKind::CircleDiscontinuous {
        p_low: 1.0 / (4.0 * PI),
        p_high: 3.0 / (4.0 * PI),
    };

    pub fn validate(&self) -> Result<()> {
        match *self {
            ManifoldKind::Sphere { dprime } | ManifoldKind::HalfSphere { dprime } => {
                if dprime == 0 {
                    return Err(Error::invalid("sphere dimension d' must be at least 1"));
                }
            }
            ManifoldKind::Torus { major, minor } => {
                if !(major.is_finite() && minor.is_finite() && major > minor && minor > 0.0) {
                    return Err(Error::invalid(format!(
                        "torus radii must satisfy R > r > 0, got R = {major}, r = {minor}"
                    )));
                }
            }
            ManifoldKind::Moebius { width } => {
                if !(width > 0.0 && width < 1.0) {
                    return Err(Error::invalid(format!(
                        "Moebius half-width must satisfy 0 < w < 1, got w = {width}"
                    )));
                }
            }
            ManifoldKind::Spiral { t0, t1 } => {
                if !(t0.is_finite() && t1.is_finite() && t0 > 0.0 && t1 > t0) {
                    return Err(Error::invalid(format!(
                        "spiral range must satisfy 0 < t0 < t1, got t0 = {t0}, t1 = {t1}"
                    )));
                }
            }
            ManifoldKind::CircleDiscontinuous { p_low, p_high } => {
                if !(p_low.is_finite() && p_high.is_finite() && p_low > 0.0 && p_high > 0.0) {
                    return Err(Error::invalid(format!(
                        "half-circle densities must be positive, got p_low = {p_low}, p_high = {p_high}"
                    )));
                }
            }
            ManifoldKind::Trefoil | ManifoldKind::SquarePerimeter => {}
        }
        Ok(())
    }

    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            ManifoldKind::Sphere { dprime } | ManifoldKind::HalfSphere { dprime } => dprime,
            ManifoldKind::Torus { .. } | ManifoldKind::Moebius { .. } => 2,
            ManifoldKind::Trefoil
            | ManifoldKind::Spiral { .. }
            | ManifoldKind::SquarePerimeter
            | ManifoldKind::CircleDiscontinuous { .. } => 1,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            ManifoldKind::Sphere { dprime } | ManifoldKind::HalfSphere { dprime } => dprime + 1,
            ManifoldKind::Trefoil | ManifoldKind::Torus { .. } | ManifoldKind::Moebius { .. } => 3,
            ManifoldKind::Spiral { .. }
            | ManifoldKind::SquarePerimeter
            | ManifoldKind::CircleDiscontinuous { .. } => 2,
        }
    }

    pub fn has_boundary(&self) -> bool {
        matches!(
            self,
            ManifoldKind::HalfSphere { .. }
                | ManifoldKind::Moebius { .. }
                | ManifoldKind::Spiral { .. }
        )
    }

    /// Short label such as `S2`, `S1+`, `torus`.
    pub fn label(&self) -> String {
        match *self {
            ManifoldKind::Sphere { dprime } => format!("S{dprime}"),
            ManifoldKind::HalfSphere { dprime } => format!("S{dprime}+"),
            ManifoldKind::Trefoil => "trefoil".into(),
            ManifoldKind::Torus { .. } => "torus".into(),
            ManifoldKind::Moebius { .. } => "moebius".into(),
            ManifoldKind::Spiral { .. } => "spiral".into(),
            ManifoldKind::SquarePerimeter => "square_perimeter".into(),
            ManifoldKind::CircleDiscontinuous { .. } => "circle_discontinuous".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    #[serde(flatten)]
    pub kind: ManifoldKind,
    pub n: usize,
    pub seed: u64,
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, n: usize, seed: u64) -> Self {
        Self { kind, n, seed }
    }

    /// Same support and size, stream for replication `r`.
    pub fn replication(&self, r: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, r),
            ..*self
        }
    }
}

/// Analytic description of a boundary set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum BoundarySet {
    /// The equatorial `(d'-1)`-sphere `{x : |x| = 1, x_last = 0}`.
    Equator {
        dprime: usize,
    },
    Endpoints {
        points: Vec<Vec<f64>>,
    },
    /// Edge curve `v = +-w`, a single closed curve traced over `u in [0, 4 pi)`.
    MoebiusEdge {
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub has_boundary: bool,
    pub boundary: Option<BoundarySet>,
    /// Set when the sample breaks the smoothness or density assumptions, so
    /// rejections are expected even without a boundary.
    pub violates_condition_p: Option<String>,
}

pub fn ground_truth(kind: &ManifoldKind) -> GroundTruth {
    let boundary = match *kind {
        ManifoldKind::HalfSphere { dprime } => Some(BoundarySet::Equator { dprime }),
        ManifoldKind::Spiral { t0, t1 } => Some(BoundarySet::Endpoints {
            points: vec![spiral_point(t0), spiral_point(t1)],
        }),
        ManifoldKind::Moebius { width } => Some(BoundarySet::MoebiusEdge { width }),
        _ => None,
    };
    let violates_condition_p = match kind {
        ManifoldKind::SquarePerimeter => Some("support is not C2 at the four corners".to_string()),
        ManifoldKind::CircleDiscontinuous { .. } => {
            Some("density jumps at the two points with x = 0".to_string())
        }
        _ => None,
    };
    GroundTruth {
        intrinsic_dim: kind.intrinsic_dim(),
        ambient_dim: kind.ambient_dim(),
        has_boundary: kind.has_boundary(),
        boundary,
        violates_condition_p,
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `r` under `base`: `base ^ splitmix64(r)`.
pub fn derive_seed(base: u64, r: u64) -> u64 {
    base ^ splitmix64(r)
}

pub fn generate(spec: &ManifoldSpec) -> Result<(PointCloud, GroundTruth)> {
    spec.kind.validate()?;
    let kind = spec.kind;
    let d = kind.ambient_dim();
    let dprime = kind.intrinsic_dim();
    if spec.n < dprime + 2 {
        return Err(Error::invalid(format!(
            "sample size {} is below the minimum {} for d' = {dprime}",
            spec.n,
            dprime + 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coords = Vec::with_capacity(spec.n * d);
    for _ in 0..spec.n {
        sample_point(&kind, &mut rng, &mut coords);
    }
    let cloud = PointCloud::new(coords, d, dprime)?;
    Ok((cloud, ground_truth(&kind)))
}

fn gaussian_direction(rng: &mut impl Rng, dim: usize, out: &mut Vec<f64>) {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.extend(v.iter().map(|x| x / norm));
            return;
        }
    }
}

fn spiral_point(t: f64) -> Vec<f64> {
    vec![t * t.cos(), t * t.sin()]
}

fn moebius_point(u: f64, v: f64) -> [f64; 3] {
    let radial = 1.0 + v * (0.5 * u).cos();
    [radial * u.cos(), radial * u.sin(), v * (0.5 * u).sin()]
}

fn sample_point(kind: &ManifoldKind, rng: &mut impl Rng, out: &mut Vec<f64>) {
    match *kind {
        ManifoldKind::Sphere { dprime } => gaussian_direction(rng, dprime + 1, out),
        ManifoldKind::HalfSphere { dprime } => {
            gaussian_direction(rng, dprime + 1, out);
            let last = out.len() - 1;
            out[last] = out[last].abs();
        }
        ManifoldKind::Trefoil => {
            let t = rng.random_range(0.0..TAU);
            out.extend([
                t.sin() + 2.0 * (2.0 * t).sin(),
                t.cos() - 2.0 * (2.0 * t).cos(),
                -(3.0 * t).sin(),
            ]);
        }
        ManifoldKind::Torus { major, minor } => {
            let theta = rng.random_range(0.0..TAU);
            let phi = rng.random_range(0.0..TAU);
            let ring = major + minor * theta.cos();
            out.extend([ring * phi.cos(), ring * phi.sin(), minor * theta.sin()]);
        }
        ManifoldKind::Moebius { width } => {
            let u = rng.random_range(0.0..TAU);
            let v = rng.random_range(-width..=width);
            out.extend(moebius_point(u, v));
        }
        ManifoldKind::Spiral { t0, t1 } => {
            let t = rng.random_range(t0..=t1);
            out.extend(spiral_point(t));
        }
        ManifoldKind::SquarePerimeter => {
            let s: f64 = rng.random_range(0.0..4.0);
            let side = s.floor();
            let f = s - side;
            let p = match side as u8 {
                0 => [f, 0.0],
                1 => [1.0, f],
                2 => [1.0 - f, 1.0],
                _ => [0.0, 1.0 - f],
            };
            out.extend(p);
        }
        ManifoldKind::CircleDiscontinuous { p_low, p_high } => {
            let right = rng.random_bool(p_high / (p_low + p_high));
            let offset = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let angle = if right { offset } else { PI + offset };
            out.extend([angle.cos(), angle.sin()]);
        }
    }
}

/// Euclidean distance from `point` to the boundary of the spec's support.
pub fn boundary_distance(spec: &ManifoldSpec, point: &[f64]) -> Result<f64> {
    spec.kind.validate()?;
    if point.len() != spec.kind.ambient_dim() {
        return Err(Error::invalid(format!(
            "point has {} coordinates, support lives in R^{}",
            point.len(),
            spec.kind.ambient_dim()
        )));
    }
    if point.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("point has non-finite coordinates"));
    }
    match spec.kind {
        ManifoldKind::HalfSphere { dprime } => {
            let radial = point[..dprime].iter().map(|x| x * x).sum::<f64>().sqrt();
            let z = point[dprime];
            Ok(((radial - 1.0).powi(2) + z * z).sqrt())
        }
        ManifoldKind::Spiral { t0, t1 } => Ok([t0, t1]
            .iter()
            .map(|&t| euclid(point, &spiral_point(t)))
            .fold(f64::INFINITY, f64::min)),
        ManifoldKind::Moebius { width } => Ok(moebius_edge_distance(width, point)),
        kind => Err(Error::invalid(format!("{} has no boundary", kind.label()))),
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn moebius_edge_distance(width: f64, point: &[f64]) -> f64 {
    const SAMPLES: usize = 4096;
    let dist = |u: f64| euclid(point, &moebius_point(u, width));
    let step = 2.0 * TAU / SAMPLES as f64;
    let mut best_u = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..SAMPLES {
        let u = i as f64 * step;
        let v = dist(u);
        if v < best {
            best = v;
            best_u = u;
        }
    }
    // golden section on the bracketing interval
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_u - step, best_u + step);
    for _ in 0..100 {
        let c = b - inv_phi * (b - a);
        let e = a + inv_phi * (b - a);
        if dist(c) < dist(e) {
            b = e;
        } else {
            a = c;
        }
    }
    best.min(dist(0.5 * (a + b)))
}
