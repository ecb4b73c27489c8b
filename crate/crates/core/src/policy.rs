//! Optimal one-dimensional bias and variance paths.
//!
//! Above the first-best threshold `β > σ/√(r − 2κ)` the bias decays at rate
//! `r − 2κ` to the stationary level while the variance falls to zero at the
//! full-disclosure time `T`. When the initial variance is too small to
//! support the relaxed solution, the relaxed path is entered at the time `t₀`
//! where its variance equals `σ₀²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{bisect, growth};
use crate::state_process::ProcessParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `b ≡ β`, `v ≡ 0`: the first-best rule is already obedient.
    FirstBest,
    /// Transition phase on `[0, T)` followed by the stationary phase.
    Constrained,
    /// `σ = 0`: exponential decay without a finite full-disclosure time.
    DeterministicState,
}

/// An optimal policy, evaluated in closed form from its defining scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySolution {
    pub regime: Regime,
    /// Full-disclosure time; `None` when the state is never fully revealed.
    #[serde(rename = "T")]
    pub full_disclosure_time: Option<f64>,
    /// Shift into the relaxed solution (zero unless `σ₀²` binds).
    pub t0: f64,
    pub beta: f64,
    pub params: ProcessParams,
    pub stationary_bias: f64,
    /// `b̂(0)`.
    pub initial_bias: f64,
}

/// Variance of the relaxed solution at time `t` when it fully discloses at `t_full`.
fn closed_form_variance(p: &ProcessParams, t_full: f64, t: f64) -> f64 {
    let x = (t_full - t).max(0.0);
    if x == 0.0 {
        return 0.0;
    }
    let s2 = p.sigma * p.sigma;
    let c = p.price();
    let k = p.kappa;
    let v =
        -s2 * growth(-k, x) + s2 / (2.0 * (p.r - k)) * ((2.0 * c * x).exp() - (-2.0 * k * x).exp());
    v.max(0.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(
            "beta",
            format!("must be positive and finite, got {beta}"),
        ));
    }
    Ok(())
}

impl PolicySolution {
    pub fn eval_bias(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.regime {
            Regime::FirstBest => self.beta,
            Regime::Constrained => {
                let t_full = self.full_disclosure_time.unwrap_or(0.0);
                let x = (t_full - t).max(0.0);
                self.stationary_bias * (self.params.price() * x).exp()
            }
            Regime::DeterministicState => self.initial_bias * (-self.params.price() * t).exp(),
        }
    }

    pub fn eval_variance(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.regime {
            Regime::FirstBest => 0.0,
            Regime::Constrained => {
                closed_form_variance(&self.params, self.full_disclosure_time.unwrap_or(0.0), t)
            }
            Regime::DeterministicState => {
                let p = &self.params;
                let c = p.price();
                c / (2.0 * (p.r - p.kappa)) * self.initial_bias.powi(2) * (-2.0 * c * t).exp()
            }
        }
    }

    /// Times at which the evaluators are not differentiable.
    pub fn breakpoints(&self) -> Vec<f64> {
        match (self.regime, self.full_disclosure_time) {
            (Regime::Constrained, Some(t)) if t > 0.0 => vec![t],
            _ => Vec::new(),
        }
    }

    /// Whether `σ₀²` binds (no initial disclosure, `b̂(0) < β`).
    pub fn initial_variance_binds(&self) -> bool {
        match self.regime {
            Regime::Constrained => self.t0 > 0.0,
            Regime::DeterministicState => self.initial_bias < self.beta,
            Regime::FirstBest => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("beta", "must be finite and ≥ 0"));
        }
        match self.regime {
            Regime::Constrained => match self.full_disclosure_time {
                Some(t) if t.is_finite() && t >= 0.0 => {}
                _ => {
                    return Err(Error::invalid(
                        "T",
                        "a constrained solution needs a finite T ≥ 0",
                    ))
                }
            },
            Regime::DeterministicState if self.params.sigma != 0.0 => {
                return Err(Error::invalid(
                    "sigma",
                    "deterministic-state solutions need sigma = 0",
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Relaxed variance path (no initial-variance constraint) evaluated at `t`.
pub fn relaxed_variance(p: &ProcessParams, beta: f64, t: f64) -> f64 {
    let t_rel = relaxed_full_disclosure_time(p, beta);
    closed_form_variance(p, t_rel, t)
}

/// `T` solving `β e^{−(r−2κ)T} = σ/√(r−2κ)`; zero at or below the threshold.
pub fn relaxed_full_disclosure_time(p: &ProcessParams, beta: f64) -> f64 {
    let s = p.stationary_bias();
    if beta <= s {
        return 0.0;
    }
    (beta / s).ln() / p.price()
}

/// Optimal policy for a stochastic state (`σ > 0`).
pub fn solve(p: &ProcessParams, beta: f64) -> Result<PolicySolution> {
    p.validate()?;
    check_beta(beta)?;
    if p.sigma == 0.0 {
        return Err(Error::Domain(
            "sigma = 0 is the deterministic-state model; use solve_deterministic".into(),
        ));
    }
    let s = p.stationary_bias();
    if beta <= s {
        return Ok(PolicySolution {
            regime: Regime::FirstBest,
            full_disclosure_time: Some(0.0),
            t0: 0.0,
            beta,
            params: *p,
            stationary_bias: s,
            initial_bias: beta,
        });
    }
    let t_rel = relaxed_full_disclosure_time(p, beta);
    let v_start = closed_form_variance(p, t_rel, 0.0);
    let t0 = if p.sigma0_sq >= v_start {
        0.0
    } else if p.sigma0_sq == 0.0 {
        t_rel
    } else {
        // ṽ is strictly decreasing on [0, T_rel], from v_start down to 0.
        bisect(
            |t| closed_form_variance(p, t_rel, t) - p.sigma0_sq,
            0.0,
            t_rel,
            0.0,
        )?
    };
    let t_full = (t_rel - t0).max(0.0);
    let mut sol = PolicySolution {
        regime: Regime::Constrained,
        full_disclosure_time: Some(t_full),
        t0,
        beta,
        params: *p,
        stationary_bias: s,
        initial_bias: 0.0,
    };
    sol.initial_bias = sol.eval_bias(0.0);
    Ok(sol)
}

/// Optimal policy for a deterministic state (`σ = 0`).
pub fn solve_deterministic(p: &ProcessParams, beta: f64) -> Result<PolicySolution> {
    p.validate()?;
    check_beta(beta)?;
    if p.sigma != 0.0 {
        return Err(Error::Domain(format!(
            "solve_deterministic requires sigma = 0, got {}",
            p.sigma
        )));
    }
    let cap = (2.0 * p.sigma0_sq * (p.r - p.kappa) / p.price()).sqrt();
    Ok(PolicySolution {
        regime: Regime::DeterministicState,
        full_disclosure_time: None,
        t0: 0.0,
        beta,
        params: *p,
        stationary_bias: 0.0,
        initial_bias: beta.min(cap),
    })
}

/// Dispatches on `σ`: [`solve`] for a stochastic state, [`solve_deterministic`]
/// otherwise.
pub fn solve_any(p: &ProcessParams, beta: f64) -> Result<PolicySolution> {
    if p.sigma == 0.0 {
        solve_deterministic(p, beta)
    } else {
        solve(p, beta)
    }
}

/// The policy maximizing `π·u_S + (1 − π)·u_R`, i.e. the sender-optimal
/// policy for bias `π·β`. At `π = 0` this is zero-bias full disclosure.
pub fn pareto_point(p: &ProcessParams, beta: f64, pi: f64) -> Result<PolicySolution> {
    if !(0.0..1.0).contains(&pi) {
        return Err(Error::invalid(
            "pi",
            format!("must lie in [0, 1), got {pi}"),
        ));
    }
    check_beta(beta)?;
    p.validate()?;
    if pi == 0.0 {
        return Ok(PolicySolution {
            regime: Regime::FirstBest,
            full_disclosure_time: Some(0.0),
            t0: 0.0,
            beta: 0.0,
            params: *p,
            stationary_bias: p.stationary_bias(),
            initial_bias: 0.0,
        });
    }
    solve_any(p, pi * beta)
}

/// Direction of a pointwise comparison `hi` versus `lo` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Never below, strictly above somewhere.
    Increasing,
    /// Never above, strictly below somewhere.
    Decreasing,
    Equal,
    Mixed,
}

impl Ordering {
    fn from_flags(up: bool, down: bool) -> Self {
        match (up, down) {
            (false, false) => Ordering::Equal,
            (true, false) => Ordering::Increasing,
            (false, true) => Ordering::Decreasing,
            (true, true) => Ordering::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticsReport {
    pub bias: Ordering,
    pub variance: Ordering,
    /// Both solutions are constrained with a slack initial variance.
    pub hypothesis_holds: bool,
}

const STATICS_TOL: f64 = 1e-12;

fn compare(lo: impl Fn(f64) -> f64, hi: impl Fn(f64) -> f64, grid: &[f64]) -> Ordering {
    let mut up = false;
    let mut down = false;
    for &t in grid {
        let (a, b) = (lo(t), hi(t));
        let tol = STATICS_TOL * a.abs().max(b.abs()).max(1.0);
        if b > a + tol {
            up = true;
        } else if b < a - tol {
            down = true;
        }
    }
    Ordering::from_flags(up, down)
}

/// Pointwise ordering of `sol_hi` against `sol_lo` on `grid`.
pub fn comparative_statics_report(
    sol_lo: &PolicySolution,
    sol_hi: &PolicySolution,
    grid: &[f64],
) -> StaticsReport {
    let slack = |s: &PolicySolution| s.regime == Regime::Constrained && !s.initial_variance_binds();
    StaticsReport {
        bias: compare(|t| sol_lo.eval_bias(t), |t| sol_hi.eval_bias(t), grid),
        variance: compare(
            |t| sol_lo.eval_variance(t),
            |t| sol_hi.eval_variance(t),
            grid,
        ),
        hypothesis_holds: slack(sol_lo) && slack(sol_hi),
    }
}
