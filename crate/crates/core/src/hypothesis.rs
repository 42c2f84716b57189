//! Testing `H0: the boundary is empty` against `H1: it is not`.
//!
//! The threshold rule rejects when `Delta >= F_{d'}^{-1}(9 alpha / (2 e^3 n))`,
//! which has asymptotic level `alpha`. Inverting that zone gives the
//! conservative p-value bound `min(1, (2 e^3 / 9) n F_{d'}(Delta))`. This is
//! an upper bound, not an exact finite-sample probability.
//!
//! The asymptotic growth conditions on `k` are not enforced; in particular
//! `k >> (ln n)^4` fails for every practical sample size.

use serde::{Deserialize, Serialize};

use crate::chisq::{
    alpha_const, chisq_sf, chisq_sf_inv, level_bound_g, tail_bound_constant, DegreesOfFreedom,
};
use crate::error::{Error, Result};
use crate::knn::PointCloud;
use crate::statistic::{compute_statistic, StatisticResult};

/// Default per-point flag level: `(2 e^3 / 9) F_{d'}(delta_i) <= 0.05`.
pub const DEFAULT_FLAG_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum Rule {
    /// Chi-square tail threshold with nominal level `alpha`.
    Threshold,
    /// Deterministic cut `beta_n` between `lambda ln n` and `mu k`.
    Consistent { lambda: f64, mu: f64 },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Threshold => "threshold",
            Rule::Consistent { .. } => "consistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub alpha: f64,
    pub k: usize,
    pub rule: Rule,
    pub flag_level: f64,
}

impl TestConfig {
    pub fn threshold(alpha: f64, k: usize) -> Self {
        Self {
            alpha,
            k,
            rule: Rule::Threshold,
            flag_level: DEFAULT_FLAG_LEVEL,
        }
    }

    pub fn validate(&self, cloud: &PointCloud) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.flag_level > 0.0 && self.flag_level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "flag level must lie in (0, 1), got {}",
                self.flag_level
            )));
        }
        if self.k < cloud.intrinsic_dim() + 1 {
            return Err(Error::InvalidConfig(format!(
                "k = {} must be at least d' + 1 = {}",
                self.k,
                cloud.intrinsic_dim() + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: StatisticResult,
    /// Cut applied to `Delta`: `t_n(alpha)` or `beta_n`.
    pub threshold: f64,
    pub p_value_bound: f64,
    /// True when a boundary is detected.
    pub reject: bool,
    pub boundary_points: Vec<usize>,
    pub rule_used: Rule,
    /// `n G_k(t_n(alpha))`; an asymptotic level diagnostic only.
    pub level_diagnostic: f64,
    pub consistent: Option<ConsistentDecision>,
}

fn dof(d_prime: usize) -> Result<DegreesOfFreedom> {
    DegreesOfFreedom::new(u32::try_from(d_prime).unwrap_or(u32::MAX))
}

/// `t_n(alpha) = F_{d'}^{-1}(9 alpha / (2 e^3 n))`.
pub fn threshold(n: usize, alpha: f64, d_prime: DegreesOfFreedom) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!(
            "sample size must be at least 2, got {n}"
        )));
    }
    let q = alpha / (tail_bound_constant() * n as f64);
    if q >= 1.0 {
        return Err(Error::invalid(format!(
            "tail argument 9 alpha / (2 e^3 n) = {q} is not below 1"
        )));
    }
    chisq_sf_inv(d_prime, q)
}

/// `min(1, (2 e^3 / 9) n F_{d'}(Delta))`: the smallest `alpha` whose
/// threshold rejects at this `Delta`.
pub fn p_value_bound(n: usize, big_delta: f64, d_prime: DegreesOfFreedom) -> f64 {
    (tail_bound_constant() * n as f64 * chisq_sf(d_prime, big_delta)).min(1.0)
}

/// Per-point flag: `(2 e^3 / 9) F_{d'}(delta_i) <= level`.
pub fn is_flagged(delta: f64, d_prime: DegreesOfFreedom, level: f64) -> bool {
    tail_bound_constant() * chisq_sf(d_prime, delta) <= level
}

pub fn flag_boundary_points(
    result: &StatisticResult,
    d_prime: DegreesOfFreedom,
    level: f64,
) -> Vec<usize> {
    result
        .summaries
        .iter()
        .enumerate()
        .filter(|(_, s)| is_flagged(s.delta, d_prime, level))
        .map(|(i, _)| i)
        .collect()
}

/// Largest admissible `mu`: `(d' + 2) alpha_{d'}^2`.
pub fn mu_max(d_prime: DegreesOfFreedom) -> f64 {
    let a = alpha_const(d_prime);
    (d_prime.get() as f64 + 2.0) * a * a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistentDecision {
    pub boundary: bool,
    /// `sqrt(lower * upper)`.
    pub beta: f64,
    /// `lambda ln n`.
    pub lower: f64,
    /// `mu k`.
    pub upper: f64,
}

/// Decides "boundary nonempty" iff `Delta > beta_n`, with `beta_n` the
/// geometric midpoint of `[lambda ln n, mu k]`.
pub fn consistent_rule(
    statistic: &StatisticResult,
    n: usize,
    k: usize,
    d_prime: DegreesOfFreedom,
    lambda: f64,
    mu: f64,
) -> Result<ConsistentDecision> {
    let window = consistent_window(n, k, d_prime, lambda, mu)?;
    Ok(ConsistentDecision {
        boundary: statistic.big_delta > window.beta,
        ..window
    })
}

fn consistent_window(
    n: usize,
    k: usize,
    d_prime: DegreesOfFreedom,
    lambda: f64,
    mu: f64,
) -> Result<ConsistentDecision> {
    if !(lambda > 4.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must exceed 4, got {lambda}"
        )));
    }
    let max = mu_max(d_prime);
    if !(mu > 0.0 && mu <= max * (1.0 + 1e-12)) {
        return Err(Error::InvalidConfig(format!(
            "mu must lie in (0, {max}] for d' = {}, got {mu}",
            d_prime.get()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidConfig(
            "sample size must be at least 2".into(),
        ));
    }
    let lower = lambda * (n as f64).ln();
    let upper = mu * k as f64;
    if lower > upper {
        return Err(Error::InvalidConfig(format!(
            "empty window: lambda ln n = {lower:.4} exceeds mu k = {upper:.4}; raise k to at least {}",
            (lower / mu).ceil()
        )));
    }
    Ok(ConsistentDecision {
        boundary: false,
        beta: (lower * upper).sqrt(),
        lower,
        upper,
    })
}

pub fn run_test(cloud: &PointCloud, config: &TestConfig) -> Result<TestOutcome> {
    config.validate(cloud)?;
    let d_prime = dof(cloud.intrinsic_dim())?;
    let n = cloud.len();
    let t_alpha = threshold(n, config.alpha, d_prime)?;
    if let Rule::Consistent { lambda, mu } = config.rule {
        // fail on configuration before paying for the statistic
        consistent_window(n, config.k, d_prime, lambda, mu)?;
    }
    let statistic = compute_statistic(cloud, config.k)?;
    evaluate(statistic, n, d_prime, t_alpha, config)
}

/// Applies the decision layer to an already computed statistic.
pub fn run_test_on_statistic(
    statistic: StatisticResult,
    cloud: &PointCloud,
    config: &TestConfig,
) -> Result<TestOutcome> {
    config.validate(cloud)?;
    if statistic.k_used != config.k || statistic.len() != cloud.len() {
        return Err(Error::invalid("statistic does not match cloud and config"));
    }
    let d_prime = dof(cloud.intrinsic_dim())?;
    let t_alpha = threshold(cloud.len(), config.alpha, d_prime)?;
    evaluate(statistic, cloud.len(), d_prime, t_alpha, config)
}

fn evaluate(
    statistic: StatisticResult,
    n: usize,
    d_prime: DegreesOfFreedom,
    t_alpha: f64,
    config: &TestConfig,
) -> Result<TestOutcome> {
    let p_value_bound = p_value_bound(n, statistic.big_delta, d_prime);
    let boundary_points = flag_boundary_points(&statistic, d_prime, config.flag_level);
    let level_diagnostic = n as f64 * level_bound_g(config.k as u64, t_alpha, d_prime)?;

    let (threshold, reject, consistent) = match config.rule {
        Rule::Threshold => (t_alpha, statistic.big_delta >= t_alpha, None),
        Rule::Consistent { lambda, mu } => {
            let c = consistent_rule(&statistic, n, config.k, d_prime, lambda, mu)?;
            (c.beta, c.boundary, Some(c))
        }
    };

    Ok(TestOutcome {
        statistic,
        threshold,
        p_value_bound,
        reject,
        boundary_points,
        rule_used: config.rule,
        level_diagnostic,
        consistent,
    })
}
