//! The two-period example: closed form and a grid-search oracle.
//!
//! The sender chooses a first-period bias `b₁` and residual variance `v₁`
//! to maximize `−(b₁ − β)² − v₁ − δβ²` subject to obedience
//! `b₁² ≤ δ(ρ²v₁ + σ²)` and `0 ≤ v₁ ≤ σ₁²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPeriodParams {
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
    pub sigma: f64,
    pub sigma1_sq: f64,
}

impl TwoPeriodParams {
    pub fn new(beta: f64, delta: f64, rho: f64, sigma: f64, sigma1_sq: f64) -> Result<Self> {
        let tp = TwoPeriodParams {
            beta,
            delta,
            rho,
            sigma,
            sigma1_sq,
        };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.beta, self.delta, self.rho, self.sigma, self.sigma1_sq];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("beta", "all parameters must be finite"));
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1]"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma", "must be ≥ 0"));
        }
        if self.sigma1_sq < 0.0 {
            return Err(Error::invalid("sigma1_sq", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Sender payoff `−(b − β)² − v − δβ²`.
    pub fn objective(&self, b: f64, v: f64) -> f64 {
        -(b - self.beta).powi(2) - v - self.delta * self.beta * self.beta
    }

    /// `δ(ρ²v + σ²) − b²`; nonnegative when obedient.
    pub fn slack(&self, b: f64, v: f64) -> f64 {
        self.delta * (self.rho * self.rho * v + self.sigma * self.sigma) - b * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoPeriodCase {
    /// `β ≤ √δ σ`: first best with full disclosure.
    #[serde(rename = "i")]
    FirstBest,
    /// `ρ = 0`: information has no value tomorrow.
    #[serde(rename = "ii")]
    Transient,
    /// Interior tradeoff between bias and precision.
    #[serde(rename = "iii")]
    Tradeoff,
    /// The tradeoff formula asks for negative variance; the solution sits on
    /// `v₁ = 0`.
    #[serde(rename = "iii_boundary")]
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPeriodSolution {
    pub b1: f64,
    pub v1: f64,
    pub case: TwoPeriodCase,
    /// `v̂₁ > σ₁²`: no signal can leave that much variance.
    pub infeasible: bool,
}

pub fn solve_two_period(tp: &TwoPeriodParams) -> Result<TwoPeriodSolution> {
    tp.validate()?;
    let threshold = tp.delta.sqrt() * tp.sigma;
    let done = |b1, v1, case| TwoPeriodSolution {
        b1,
        v1,
        case,
        infeasible: false,
    };
    if tp.beta <= threshold {
        return Ok(done(tp.beta, 0.0, TwoPeriodCase::FirstBest));
    }
    if tp.rho == 0.0 {
        return Ok(done(tp.beta.min(threshold), 0.0, TwoPeriodCase::Transient));
    }
    let k = tp.delta * tp.rho * tp.rho;
    let b1 = tp.beta * k / (1.0 + k);
    let v1 = tp.beta * tp.beta * k / (1.0 + k).powi(2) - (tp.sigma / tp.rho).powi(2);
    if v1 < 0.0 {
        return Ok(done(threshold, 0.0, TwoPeriodCase::Boundary));
    }
    Ok(TwoPeriodSolution {
        b1,
        v1,
        case: TwoPeriodCase::Tradeoff,
        infeasible: v1 > tp.sigma1_sq,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Grid `0, h, 2h, …` with `h = anchor/m`, extended to cover `hi`, so that
/// `anchor` itself is a grid point.
pub fn aligned_grid(anchor: f64, m: usize, hi: f64) -> Vec<f64> {
    if !(anchor > 0.0) || m == 0 {
        return uniform_grid(0.0, hi, 2);
    }
    let h = anchor / m as f64;
    let count = (hi / h).ceil().max(m as f64) as usize;
    (0..=count)
        .map(|k| if k == m { anchor } else { k as f64 * h })
        .collect()
}

/// Obedience caps `√(δ(ρ²v + σ²))` for each `v` in `grid_v`, so that every
/// row of the search has a point on the constraint.
pub fn cap_grid(tp: &TwoPeriodParams, grid_v: &[f64]) -> Vec<f64> {
    grid_v
        .iter()
        .map(|&v| (tp.delta * (tp.rho * tp.rho * v + tp.sigma * tp.sigma)).sqrt())
        .collect()
}

const FEASIBILITY_RTOL: f64 = 1e-12;

/// Exhaustive search over `grid_b × grid_v`. Among equal payoffs the smaller
/// `v₁`, then the smaller `b₁`, wins.
pub fn brute_force_two_period(
    tp: &TwoPeriodParams,
    grid_b: &[f64],
    grid_v: &[f64],
) -> Result<(f64, f64)> {
    tp.validate()?;
    let sorted = |g: &[f64]| {
        let mut g = g.to_vec();
        g.sort_by(f64::total_cmp);
        g
    };
    let bs = sorted(grid_b);
    let vs = sorted(grid_v);
    let mut best: Option<(f64, f64, f64)> = None;
    for &v in vs.iter().filter(|&&v| v >= 0.0 && v <= tp.sigma1_sq) {
        let cap = tp.delta * (tp.rho * tp.rho * v + tp.sigma * tp.sigma);
        let cap = cap * (1.0 + FEASIBILITY_RTOL) + f64::MIN_POSITIVE;
        for &b in bs.iter().filter(|&&b| b * b <= cap) {
            let value = tp.objective(b, v);
            if best.is_none_or(|(_, _, w)| value > w) {
                best = Some((b, v, value));
            }
        }
    }
    best.map(|(b, v, _)| (b, v))
        .ok_or_else(|| Error::Domain("no feasible grid point".into()))
}
