//! Discounted losses, reservation values and obedience residuals of
//! bias/variance paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{integrate_pieces, integrate_to_infinity};
use crate::policy::{PolicySolution, Regime};
use crate::state_process::ProcessParams;

/// Default absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-10;

/// A deterministic bias/variance pair. The bias is a magnitude; in several
/// dimensions it points along `β`.
pub trait PathPair: Sync {
    /// Number of state components.
    fn dim(&self) -> usize {
        1
    }
    /// `‖b(t)‖`.
    fn bias(&self, t: f64) -> f64;
    /// `v_i(t)`.
    fn variance(&self, i: usize, t: f64) -> f64;
    /// Times at which the paths have kinks.
    fn breakpoints(&self) -> Vec<f64>;
    /// Time after which both paths are constant, if any.
    fn stationary_after(&self) -> Option<f64>;

    fn total_variance(&self, t: f64) -> f64 {
        (0..self.dim()).map(|i| self.variance(i, t)).sum()
    }
}

impl PathPair for PolicySolution {
    fn bias(&self, t: f64) -> f64 {
        self.eval_bias(t)
    }
    fn variance(&self, _i: usize, t: f64) -> f64 {
        self.eval_variance(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        PolicySolution::breakpoints(self)
    }
    fn stationary_after(&self) -> Option<f64> {
        match self.regime {
            Regime::FirstBest => Some(0.0),
            Regime::Constrained => self.full_disclosure_time,
            Regime::DeterministicState => None,
        }
    }
}

/// Sampled paths, linearly interpolated and held constant after the last
/// sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub times: Vec<f64>,
    pub bias: Vec<f64>,
    /// One row per component.
    pub variances: Vec<Vec<f64>>,
}

impl GridPath {
    pub fn new(times: Vec<f64>, bias: Vec<f64>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let n = times.len();
        if n == 0
            || bias.len() != n
            || variances.is_empty()
            || variances.iter().any(|v| v.len() != n)
        {
            return Err(Error::invalid(
                "times",
                "bias and variance columns must match the time grid",
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "times",
                "must start at 0 and increase strictly",
            ));
        }
        let finite = |x: &f64| x.is_finite();
        if !bias.iter().all(finite)
            || !variances
                .iter()
                .flatten()
                .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(Error::invalid(
                "values",
                "bias must be finite and variances finite and ≥ 0",
            ));
        }
        Ok(GridPath {
            times,
            bias,
            variances,
        })
    }

    /// Samples any path pair on `times`.
    pub fn sample(pp: &dyn PathPair, times: &[f64]) -> Result<Self> {
        let bias = times.iter().map(|&t| pp.bias(t)).collect();
        let variances = (0..pp.dim())
            .map(|i| times.iter().map(|&t| pp.variance(i, t)).collect())
            .collect();
        GridPath::new(times.to_vec(), bias, variances)
    }

    fn interp(&self, ys: &[f64], t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return ys[0];
        }
        if t >= self.times[n - 1] {
            return ys[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        ys[k] + w * (ys[k + 1] - ys[k])
    }
}

impl PathPair for GridPath {
    fn dim(&self) -> usize {
        self.variances.len()
    }
    fn bias(&self, t: f64) -> f64 {
        self.interp(&self.bias, t)
    }
    fn variance(&self, i: usize, t: f64) -> f64 {
        self.interp(&self.variances[i], t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.times.clone()
    }
    fn stationary_after(&self) -> Option<f64> {
        self.times.last().copied()
    }
}

/// Paths given by closures.
pub struct FnPath<B, V> {
    pub bias: B,
    pub variance: V,
    pub kinks: Vec<f64>,
    pub stationary_after: Option<f64>,
}

impl<B, V> PathPair for FnPath<B, V>
where
    B: Fn(f64) -> f64 + Sync,
    V: Fn(f64) -> f64 + Sync,
{
    fn bias(&self, t: f64) -> f64 {
        (self.bias)(t)
    }
    fn variance(&self, _i: usize, t: f64) -> f64 {
        (self.variance)(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.kinks.clone()
    }
    fn stationary_after(&self) -> Option<f64> {
        self.stationary_after
    }
}

fn discounted<F: Fn(f64) -> f64>(
    flow: F,
    pp: &dyn PathPair,
    t: f64,
    r: f64,
    quad_tol: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be ≥ 0, got {t}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "discount rate must be positive, got {r}"
        )));
    }
    let weighted = |s: f64| r * (-r * (s - t)).exp() * flow(s);
    let value = match pp.stationary_after() {
        Some(end) => {
            let end = end.max(t);
            let body = integrate_pieces(weighted, t, end, &pp.breakpoints(), quad_tol).value;
            body + (-r * (end - t)).exp() * flow(end)
        }
        None => integrate_to_infinity(weighted, t, quad_tol).value,
    };
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "discounted loss diverges at t = {t}"
        )));
    }
    Ok(value)
}

/// `∫_t^∞ r e^{−r(s−t)} [‖b(s)‖² + Σ v_i(s)] ds`.
pub fn continuation_loss(pp: &dyn PathPair, t: f64, r: f64, quad_tol: f64) -> Result<f64> {
    discounted(
        |s| pp.bias(s).powi(2) + pp.total_variance(s),
        pp,
        t,
        r,
        quad_tol,
    )
}

/// The receiver's loss from deviating to myopic play forever.
pub fn reservation_loss(v_t: f64, p: &ProcessParams) -> f64 {
    (p.sigma * p.sigma + p.r * v_t) / p.price()
}

/// `∫_0^∞ r e^{−rt} [(‖β‖ − ‖b(t)‖)² + Σ v_i(t)] dt`.
pub fn sender_loss(pp: &dyn PathPair, beta: f64, r: f64, quad_tol: f64) -> Result<f64> {
    sender_continuation_loss(pp, beta, 0.0, r, quad_tol)
}

/// The sender's loss from `t` on.
pub fn sender_continuation_loss(
    pp: &dyn PathPair,
    beta: f64,
    t: f64,
    r: f64,
    quad_tol: f64,
) -> Result<f64> {
    discounted(
        |s| (beta - pp.bias(s)).powi(2) + pp.total_variance(s),
        pp,
        t,
        r,
        quad_tol,
    )
}

fn check_components(pp: &dyn PathPair, components: &[ProcessParams]) -> Result<()> {
    if components.len() != pp.dim() {
        return Err(Error::Incompatible(format!(
            "{} component parameter sets for a {}-dimensional path",
            components.len(),
            pp.dim()
        )));
    }
    let r = components[0].r;
    if components.iter().any(|c| c.r != r) {
        return Err(Error::Incompatible(
            "components must share the discount rate".into(),
        ));
    }
    for c in components {
        c.validate()?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObediencePoint {
    pub t: f64,
    pub excess: f64,
    pub binding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObedienceReport {
    pub obedient: bool,
    pub max_excess: f64,
    pub argmax_t: f64,
    pub points: Vec<ObediencePoint>,
}

impl ObedienceReport {
    pub fn all_binding(&self) -> bool {
        self.points.iter().all(|p| p.binding)
    }
}

/// Continuation loss minus the summed reservation losses at each grid time.
pub fn verify_obedience(
    pp: &dyn PathPair,
    components: &[ProcessParams],
    grid: &[f64],
    tol: f64,
) -> Result<ObedienceReport> {
    check_components(pp, components)?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    let r = components[0].r;
    let points = grid
        .par_iter()
        .map(|&t| {
            let follow = continuation_loss(pp, t, r, QUAD_TOL)?;
            let reservation: f64 = components
                .iter()
                .enumerate()
                .map(|(i, c)| reservation_loss(pp.variance(i, t), c))
                .sum();
            let excess = follow - reservation;
            Ok(ObediencePoint {
                t,
                excess,
                binding: excess.abs() < tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax_t, max_excess) = points.iter().fold((grid[0], f64::NEG_INFINITY), |acc, p| {
        if p.excess > acc.1 {
            (p.t, p.excess)
        } else {
            acc
        }
    });
    Ok(ObedienceReport {
        obedient: max_excess <= tol,
        max_excess,
        argmax_t,
        points,
    })
}

/// Default finite-difference step at `t`.
pub fn default_fd_step(t: f64) -> f64 {
    1e-6 * t.abs().max(1.0)
}

/// Residual of the binding obedience equation at `t`, with central
/// differences for `v′`. One-dimensional paths use
/// `(r−2κ)b² − 2κv − σ² + v′`; otherwise
/// `‖b‖² − Σ (2κ_i v_i + σ_i² − v_i′)/(r − 2κ_i)`.
pub fn ode_residual(
    pp: &dyn PathPair,
    components: &[ProcessParams],
    t: f64,
    fd_step: Option<f64>,
) -> Result<f64> {
    check_components(pp, components)?;
    let h = fd_step.unwrap_or_else(|| default_fd_step(t));
    if !(h > 0.0) {
        return Err(Error::invalid("fd_step", "must be positive"));
    }
    if t - h < 0.0 {
        return Err(Error::Domain(format!(
            "t = {t} is too close to 0 for step {h}"
        )));
    }
    if let Some(bp) = pp
        .breakpoints()
        .into_iter()
        .find(|&bp| (t - bp).abs() < 10.0 * h)
    {
        return Err(Error::Domain(format!(
            "t = {t} is within the exclusion window of breakpoint {bp}"
        )));
    }
    let b2 = pp.bias(t).powi(2);
    let dv = |i: usize| (pp.variance(i, t + h) - pp.variance(i, t - h)) / (2.0 * h);
    if components.len() == 1 {
        let c = &components[0];
        let v = pp.variance(0, t);
        return Ok(c.price() * b2 - 2.0 * c.kappa * v - c.sigma * c.sigma + dv(0));
    }
    let paid: f64 = components
        .iter()
        .enumerate()
        .map(|(i, c)| (2.0 * c.kappa * pp.variance(i, t) + c.sigma * c.sigma - dv(i)) / c.price())
        .sum();
    Ok(b2 - paid)
}
