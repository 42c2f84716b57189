//! Chi-square distribution functions and the constants that calibrate the
//! boundary test.
//!
//! The regularized incomplete gamma functions use the usual split: a power
//! series below `x = a + 1` and a Lentz continued fraction above it. The
//! survival function is evaluated through the upper function directly so the
//! far tail keeps its relative accuracy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TERM_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 10_000;
const TINY: f64 = 1e-300;

/// `2 e^3 / 9`, the constant in the finite-sample tail bound of the test.
pub fn tail_bound_constant() -> f64 {
    2.0 * 3f64.exp() / 9.0
}

/// Degrees of freedom of a chi-square law, `1..=50`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct DegreesOfFreedom(u32);

impl DegreesOfFreedom {
    pub const MAX: u32 = 50;

    pub fn new(d: u32) -> Result<Self> {
        if (1..=Self::MAX).contains(&d) {
            Ok(Self(d))
        } else {
            Err(Error::invalid(format!(
                "degrees of freedom must lie in 1..={}, got {d}",
                Self::MAX
            )))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    fn f(self) -> f64 {
        self.0 as f64
    }

    fn shape(self) -> f64 {
        0.5 * self.f()
    }
}

impl TryFrom<u32> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        Self::new(d)
    }
}

impl From<DegreesOfFreedom> for u32 {
    fn from(d: DegreesOfFreedom) -> u32 {
        d.0
    }
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Lower regularized incomplete gamma `P(a, x)` by its power series.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_TERMS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * TERM_TOL {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * sum
}

/// `ln Q(a, x)` by the continued fraction, valid for `x >= a + 1`.
fn ln_upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < TERM_TOL {
            break;
        }
    }
    a * x.ln() - x - ln_gamma(a) + h.ln()
}

/// `Psi_d(x)`, the chi-square distribution function.
pub fn chisq_cdf(d: DegreesOfFreedom, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = d.shape();
    let y = 0.5 * x;
    if y < a + 1.0 {
        lower_series(a, y).min(1.0)
    } else {
        -ln_upper_fraction(a, y).exp_m1()
    }
}

/// `F_d(x) = 1 - Psi_d(x)`, computed without cancellation in the tail.
pub fn chisq_sf(d: DegreesOfFreedom, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let a = d.shape();
    let y = 0.5 * x;
    if y < a + 1.0 {
        (1.0 - lower_series(a, y)).max(0.0)
    } else {
        ln_upper_fraction(a, y).exp()
    }
}

/// `ln F_d(x)`; finite far beyond the point where `F_d` underflows.
pub fn chisq_ln_sf(d: DegreesOfFreedom, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = d.shape();
    let y = 0.5 * x;
    if y < a + 1.0 {
        (-lower_series(a, y)).ln_1p()
    } else {
        ln_upper_fraction(a, y)
    }
}

/// Chi-square density.
pub fn chisq_pdf(d: DegreesOfFreedom, x: f64) -> f64 {
    if x <= 0.0 {
        return if d.get() == 2 {
            0.5
        } else if d.get() == 1 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    chisq_ln_pdf(d, x).exp()
}

fn chisq_ln_pdf(d: DegreesOfFreedom, x: f64) -> f64 {
    let a = d.shape();
    let y = 0.5 * x;
    (a - 1.0) * y.ln() - y - ln_gamma(a) - std::f64::consts::LN_2
}

/// The `t` with `F_d(t) = q`.
///
/// Starts from the tail expansion `F_d(x) ~ e^{-x/2} (1 + x/2)^{d/2 - 1} /
/// Gamma(d/2)` and runs bracketed Newton on `ln F_d`, so arguments down to
/// `1e-300` invert accurately.
pub fn chisq_sf_inv(d: DegreesOfFreedom, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!(
            "tail probability must lie in (0, 1), got {q}"
        )));
    }
    let target = q.ln();
    let a = d.shape();

    let mut x = (-2.0 * target).max(1.0);
    for _ in 0..50 {
        let next = 2.0 * (-target + (a - 1.0) * (1.0 + 0.5 * x).ln() - ln_gamma(a));
        if !next.is_finite() || next <= 0.0 {
            x = d.f();
            break;
        }
        if (next - x).abs() <= 1e-12 * x {
            x = next;
            break;
        }
        x = next;
    }

    let g = |t: f64| chisq_ln_sf(d, t) - target;
    let mut lo = 0.0;
    let mut hi = x.max(d.f());
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..300 {
        let gx = g(x);
        if gx.abs() < 1e-14 {
            return Ok(x);
        }
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx ln F = -pdf / F
        let slope = -(chisq_ln_pdf(d, x) - chisq_ln_sf(d, x)).exp();
        let mut next = x - gx / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= f64::EPSILON * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Mean of `<X - x, u> / r` for `X` uniform on the half-ball of radius `r`
/// around `x` cut by the unit normal `u`:
/// `Gamma((d+2)/2) / (sqrt(pi) Gamma((d+3)/2))`.
pub fn alpha_const(d: DegreesOfFreedom) -> f64 {
    let d = d.f();
    (ln_gamma(0.5 * (d + 2.0)) - ln_gamma(0.5 * (d + 3.0))).exp() / PI.sqrt()
}

/// `H_k(eps)` from the finite-sample level bound.
pub fn h_k(k: u64, eps: f64, d: DegreesOfFreedom) -> f64 {
    let kf = k as f64;
    let df = d.f();
    let inner = kf.cbrt() + (df + 2.0).cbrt() * eps.cbrt();
    let num = kf * eps.powf(2.0 / 3.0) * (df + 2.0).powf(-4.0 / 3.0);
    (-num / (df * df * inner * inner)).exp()
}

/// `R_k(eps)` from the finite-sample level bound.
pub fn r_k(k: u64, eps: f64, d: DegreesOfFreedom) -> f64 {
    let kf = k as f64;
    let df = d.f();
    (-kf.cbrt() * eps.powf(2.0 / 3.0) / (df * df * (df + 2.0).powf(4.0 / 3.0))).exp()
}

/// The quantity minimized over `eps in [0, t]` by [`level_bound_g`].
pub fn level_bound_objective(k: u64, t: f64, eps: f64, d: DegreesOfFreedom) -> f64 {
    let df = d.f();
    tail_bound_constant() * chisq_sf(d, t - eps)
        + (df * df + df) * h_k(k, eps, d)
        + 2.0 * df * r_k(k, eps, d)
}

const G_GRID_POINTS: usize = 1024;
const G_GRID_DECADES: f64 = 12.0;
const GOLDEN_REL_TOL: f64 = 1e-6;

/// `G_k(t)`: minimum of [`level_bound_objective`] over `eps in [0, t]`.
///
/// Evaluated on `eps = 0` plus a geometric grid spanning twelve decades below
/// `t`, with golden-section refinement around the best grid point. Any grid
/// value bounds the exact minimum from above.
pub fn level_bound_g(k: u64, t: f64, d: DegreesOfFreedom) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("level bound needs t > 0, got {t}")));
    }
    if k == 0 {
        return Err(Error::invalid("level bound needs k >= 1"));
    }
    let f = |eps: f64| level_bound_objective(k, t, eps, d);
    let last = (G_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..G_GRID_POINTS)
        .map(|j| t * 10f64.powf(-G_GRID_DECADES * (last - j as f64) / last))
        .collect();

    let mut best_j = 0;
    let mut best = f(grid[0]);
    for (j, &eps) in grid.iter().enumerate().skip(1) {
        let v = f(eps);
        if v < best {
            best = v;
            best_j = j;
        }
    }

    let lo = if best_j == 0 { 0.0 } else { grid[best_j - 1] };
    let hi = grid[(best_j + 1).min(G_GRID_POINTS - 1)];
    let refined = golden_section_min(&f, lo, hi, GOLDEN_REL_TOL);
    Ok(best.min(refined).min(f(0.0)))
}

fn golden_section_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    for _ in 0..200 {
        if (b - a) <= rel_tol * b.abs().max(TINY) {
            break;
        }
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    fc.min(fe)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dof(d: u32) -> DegreesOfFreedom {
        DegreesOfFreedom::new(d).unwrap()
    }

    /// erf by its Maclaurin series, accurate for small arguments.
    fn erf_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = x;
        for n in 0..200 {
            sum += term / (2 * n + 1) as f64;
            term *= -x * x / (n + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn cdf_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((chisq_cdf(dof(2), 2.0 * ln2) - 0.5).abs() < 1e-14);
        for d in 1..=10 {
            assert_eq!(chisq_cdf(dof(d), 0.0), 0.0);
            assert_eq!(chisq_cdf(dof(d), -3.0), 0.0);
        }
        let expected = erf_series(1.0 / 2f64.sqrt());
        assert!((expected - 0.682_689_492_1).abs() < 1e-10);
        assert!((chisq_cdf(dof(1), 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn sf_examples() {
        let ln2 = std::f64::consts::LN_2;
        let v = chisq_sf(dof(2), 22.8);
        let exact = (-11.4f64).exp();
        assert!(((v - exact) / exact).abs() < 1e-10);
        assert!((v - 1.1195e-5).abs() < 1e-9);
        assert_eq!(chisq_sf(dof(3), 0.0), 1.0);
        assert!((chisq_sf(dof(2), 2.0 * ln2) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sf_far_tail_relative_accuracy() {
        for x in [50.0, 100.0, 150.0, 200.0] {
            let exact = (-0.5f64 * x).exp();
            assert!(
                ((chisq_sf(dof(2), x) - exact) / exact).abs() < 1e-10,
                "x = {x}"
            );
        }
        // chi2(4): F(x) = e^{-x/2} (1 + x/2)
        for x in [60.0, 200.0] {
            let exact = (-0.5f64 * x).exp() * (1.0 + 0.5 * x);
            assert!(
                ((chisq_sf(dof(4), x) - exact) / exact).abs() < 1e-10,
                "x = {x}"
            );
        }
        assert!((chisq_ln_sf(dof(2), 3000.0) + 1500.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_plus_sf_is_one() {
        for d in 1..=12 {
            let mut x = 0.0;
            while x <= 100.0 {
                let s = chisq_cdf(dof(d), x) + chisq_sf(dof(d), x);
                assert!((s - 1.0).abs() < 1e-12, "d = {d}, x = {x}");
                x += 0.37;
            }
        }
    }

    #[test]
    fn cdf_monotone() {
        for d in [1, 2, 5, 30] {
            let mut prev = 0.0;
            for i in 0..2000 {
                let c = chisq_cdf(dof(d), i as f64 * 0.05);
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let q = 9.0 * 0.05 / (2.0 * 3f64.exp() * 1000.0);
        let t = chisq_sf_inv(dof(2), q).unwrap();
        let exact = 2.0 * (1.0 / q).ln();
        assert!((t - exact).abs() < 1e-9 * exact);
        assert!((t - 22.799).abs() < 1e-3);
        let half = chisq_sf_inv(dof(2), 0.5).unwrap();
        assert!((half - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        for d in 1..=5 {
            for q in [1e-12, 1e-6, 0.01, 0.5, 0.99] {
                let t = chisq_sf_inv(dof(d), q).unwrap();
                let back = chisq_sf(dof(d), t);
                assert!(((back - q) / q).abs() < 1e-9, "d = {d}, q = {q}");
            }
        }
    }

    #[test]
    fn inverse_handles_extreme_tails() {
        for d in [1, 2, 3, 10, 50] {
            let t = chisq_sf_inv(dof(d), 1e-300).unwrap();
            let back = chisq_ln_sf(dof(d), t);
            assert!((back - 1e-300f64.ln()).abs() < 1e-9 * 690.0, "d = {d}");
        }
        assert!(chisq_sf_inv(dof(2), 0.0).is_err());
        assert!(chisq_sf_inv(dof(2), 1.0).is_err());
        assert!(chisq_sf_inv(dof(2), f64::NAN).is_err());
    }

    #[test]
    fn alpha_constant_values() {
        assert!((alpha_const(dof(1)) - 0.5).abs() < 1e-12);
        assert!((alpha_const(dof(2)) - 4.0 / (3.0 * PI)).abs() < 1e-12);
        for d in 1..DegreesOfFreedom::MAX {
            assert!(alpha_const(dof(d)) > alpha_const(dof(d + 1)));
        }
    }

    #[test]
    fn dof_bounds() {
        assert!(DegreesOfFreedom::new(0).is_err());
        assert!(DegreesOfFreedom::new(51).is_err());
        assert_eq!(DegreesOfFreedom::new(50).unwrap().get(), 50);
    }

    #[test]
    fn level_bound_below_zero_candidate() {
        for (k, t) in [(10u64, 5.0), (1000, 20.0), (100_000, 30.0)] {
            let g = level_bound_g(k, t, dof(2)).unwrap();
            assert!(g <= level_bound_objective(k, t, 0.0, dof(2)));
            assert!(g > 0.0);
        }
    }

    #[test]
    fn level_bound_nonincreasing_in_t() {
        for d in [1, 2, 3] {
            let mut prev = f64::INFINITY;
            for i in 1..=60 {
                let t = i as f64;
                let g = level_bound_g(5000, t, dof(d)).unwrap();
                assert!(g <= prev * (1.0 + 1e-6), "d = {d}, t = {t}");
                prev = prev.min(g);
            }
        }
    }

    #[test]
    fn level_bound_large_k() {
        // Oracle: brute-force scan of the objective on a fine uniform grid.
        let d = dof(2);
        let (k, t) = (1_000_000u64, 40.0);
        let oracle = (0..=40_000)
            .map(|i| level_bound_objective(k, t, t * i as f64 / 40_000.0, d))
            .fold(f64::INFINITY, f64::min);
        let g = level_bound_g(k, t, d).unwrap();
        assert!(g < 1e-3);
        assert!(g <= oracle * (1.0 + 1e-6));
    }

    #[test]
    fn level_bound_rejects_bad_t() {
        assert!(level_bound_g(10, 0.0, dof(1)).is_err());
        assert!(level_bound_g(10, -1.0, dof(1)).is_err());
    }
}
