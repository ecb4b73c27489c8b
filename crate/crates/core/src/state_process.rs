//! The persistent Gaussian state `dθ = κθ dt + σ dZ`, its conditional moments,
//! exact sampling, and the fictitious pre-history `θ_t = θ_0 + Y_{−t}` for
//! `t < 0` that serves as the sender's randomization device.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{growth, KAPPA_EPS};

/// Scalar state and preference-independent parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    /// Persistence rate κ (1/time). Negative values mean-revert.
    pub kappa: f64,
    /// Volatility σ. Zero only in the deterministic-state model.
    pub sigma: f64,
    /// Discount rate r.
    pub r: f64,
    /// Mean of the initial state.
    #[serde(default)]
    pub mu0: f64,
    /// Variance of the initial state.
    pub sigma0_sq: f64,
}

impl ProcessParams {
    pub fn new(kappa: f64, sigma: f64, r: f64, mu0: f64, sigma0_sq: f64) -> Result<Self> {
        let p = Self {
            kappa,
            sigma,
            r,
            mu0,
            sigma0_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.kappa, self.sigma, self.r, self.mu0, self.sigma0_sq];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("params", "all parameters must be finite"));
        }
        if self.r <= 0.0 {
            return Err(Error::invalid(
                "r",
                format!("must be positive, got {}", self.r),
            ));
        }
        if 2.0 * self.kappa >= self.r {
            return Err(Error::invalid(
                "kappa",
                format!(
                    "2·kappa < r is required for finite payoffs (kappa = {}, r = {})",
                    self.kappa, self.r
                ),
            ));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(
                "sigma",
                format!("must be ≥ 0, got {}", self.sigma),
            ));
        }
        if self.sigma0_sq < 0.0 {
            return Err(Error::invalid(
                "sigma0_sq",
                format!("must be ≥ 0, got {}", self.sigma0_sq),
            ));
        }
        Ok(())
    }

    /// `r − 2κ`, the variance price of squared bias.
    pub fn price(&self) -> f64 {
        self.r - 2.0 * self.kappa
    }

    /// Largest bias sustainable under full disclosure, `σ/√(r − 2κ)`.
    pub fn stationary_bias(&self) -> f64 {
        self.sigma / self.price().sqrt()
    }

    /// η(v, h) without argument checks.
    pub fn no_info_variance(&self, v: f64, h: f64) -> f64 {
        (2.0 * self.kappa * h).exp() * v + self.sigma * self.sigma * growth(self.kappa, h)
    }

    /// Duration `d` with η(0, d) = v, or `+∞` if the unconditional variance
    /// never reaches `v`.
    pub fn no_info_duration(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        if s2 == 0.0 {
            return f64::INFINITY;
        }
        if self.kappa.abs() < KAPPA_EPS {
            return v / s2;
        }
        let arg = 2.0 * self.kappa * v / s2;
        if arg <= -1.0 {
            return f64::INFINITY;
        }
        arg.ln_1p() / (2.0 * self.kappa)
    }
}

/// The posterior variance of the state after `h` units of time without
/// information, starting from variance `v`.
pub fn eta(v: f64, h: f64, p: &ProcessParams) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("eta: variance must be ≥ 0, got {v}")));
    }
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("eta: duration must be ≥ 0, got {h}")));
    }
    Ok(p.no_info_variance(v, h).max(0.0))
}

/// `E[θ_{t+dt} | θ_t]`.
pub fn conditional_mean(theta_t: f64, dt: f64, p: &ProcessParams) -> Result<f64> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!(
            "conditional_mean: dt must be ≥ 0, got {dt}"
        )));
    }
    Ok((p.kappa * dt).exp() * theta_t)
}

/// A time in `[−∞, ∞)`: the referenced time of a delayed report.
///
/// `−∞` (nothing reported yet) is its own variant so it never enters
/// floating-point arithmetic. It serializes as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum ReportTime {
    NegInfinity,
    At(f64),
}

impl From<Option<f64>> for ReportTime {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) if x.is_finite() => ReportTime::At(x),
            _ => ReportTime::NegInfinity,
        }
    }
}

impl From<ReportTime> for Option<f64> {
    fn from(v: ReportTime) -> Self {
        match v {
            ReportTime::NegInfinity => None,
            ReportTime::At(x) => Some(x),
        }
    }
}

impl ReportTime {
    /// Finite value, if any.
    pub fn value(self) -> Option<f64> {
        match self {
            ReportTime::NegInfinity => None,
            ReportTime::At(x) => Some(x),
        }
    }

    /// Total order with `−∞` below every finite time.
    pub fn le(self, other: ReportTime) -> bool {
        match (self, other) {
            (ReportTime::NegInfinity, _) => true,
            (ReportTime::At(_), ReportTime::NegInfinity) => false,
            (ReportTime::At(a), ReportTime::At(b)) => a <= b,
        }
    }
}

/// The receiver's posterior of `θ_t` given a report, as an affine map of the
/// reported value: `mean = slope·report + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub slope: f64,
    pub intercept: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn mean(&self, report: f64) -> f64 {
        self.slope * report + self.intercept
    }
}

/// Posterior of `θ_t` given the report `θ_{φ(t)}`, in affine form.
pub fn posterior_coefficients(phi_t: ReportTime, t: f64, p: &ProcessParams) -> Result<Posterior> {
    match phi_t {
        ReportTime::NegInfinity => Ok(Posterior {
            slope: 0.0,
            intercept: (p.kappa * t).exp() * p.mu0,
            variance: p.no_info_variance(p.sigma0_sq, t),
        }),
        ReportTime::At(s) if s > t => Err(Error::Domain(format!(
            "report time {s} lies after the current time {t}"
        ))),
        ReportTime::At(s) if s >= 0.0 => Ok(Posterior {
            slope: (p.kappa * (t - s)).exp(),
            intercept: 0.0,
            variance: p.no_info_variance(0.0, t - s),
        }),
        ReportTime::At(s) => {
            // Gaussian conjugate update of θ_0 from θ_0 + Y_{−s}, noise variance −s.
            let noise = -s;
            let (gain, v0) = if p.sigma0_sq == 0.0 {
                (0.0, 0.0)
            } else {
                (
                    p.sigma0_sq / (p.sigma0_sq + noise),
                    p.sigma0_sq * noise / (p.sigma0_sq + noise),
                )
            };
            let growth_factor = (p.kappa * t).exp();
            Ok(Posterior {
                slope: growth_factor * gain,
                intercept: growth_factor * (1.0 - gain) * p.mu0,
                variance: p.no_info_variance(v0, t),
            })
        }
    }
}

/// `(E[θ_t | θ_{φ(t)} = report], Var(θ_t | θ_{φ(t)}))`.
pub fn posterior_given_report(
    report: f64,
    phi_t: ReportTime,
    t: f64,
    p: &ProcessParams,
) -> Result<(f64, f64)> {
    let post = posterior_coefficients(phi_t, t, p)?;
    Ok((post.mean(report), post.variance))
}

/// A sampled state trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Standard normal draws from a ChaCha stream; the stream id keeps
/// independent consumers of the same seed apart.
pub(crate) fn normal_stream(seed: u64, stream: u64) -> impl FnMut() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    move || StandardNormal.sample(&mut rng)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if !(grid[0] >= 0.0) {
        return Err(Error::Domain(format!(
            "time grid must start at t ≥ 0, got {}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Exact sampling of the state on `grid` through the Gaussian transition
/// `θ_{t+h} | θ_t ~ N(e^{κh}θ_t, η(0, h))`.
pub fn sample_path(p: &ProcessParams, grid: &[f64], seed: u64) -> Result<StatePath> {
    check_grid(grid)?;
    let mut normal = normal_stream(seed, 0);
    let t0 = grid[0];
    let mut theta =
        (p.kappa * t0).exp() * p.mu0 + p.no_info_variance(p.sigma0_sq, t0).sqrt() * normal();
    let mut values = Vec::with_capacity(grid.len());
    values.push(theta);
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        theta = (p.kappa * h).exp() * theta + p.no_info_variance(0.0, h).sqrt() * normal();
        values.push(theta);
    }
    Ok(StatePath {
        times: grid.to_vec(),
        values,
        seed,
    })
}

/// Draws the Brownian pre-history `Y_u` at the distances `us` (all > 0), in
/// decreasing order of `u`, each conditioned on the previous draw and on
/// `Y_0 = 0`. Returns values aligned with `us`.
pub(crate) fn brownian_at(us: &[f64], normal: &mut impl FnMut() -> f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|&a, &b| us[b].total_cmp(&us[a]));
    let mut out = vec![0.0; us.len()];
    let mut prev: Option<(f64, f64)> = None;
    for idx in order {
        let u = us[idx];
        let y = match prev {
            None => u.sqrt() * normal(),
            Some((u_prev, y_prev)) if u == u_prev => y_prev,
            Some((u_prev, y_prev)) => {
                // Brownian bridge between (0, 0) and (u_prev, y_prev).
                let mean = u / u_prev * y_prev;
                let var = u * (u_prev - u) / u_prev;
                mean + var.max(0.0).sqrt() * normal()
            }
        };
        out[idx] = y;
        prev = Some((u, y));
    }
    out
}

/// Samples `θ_t = θ_0 + Y_{−t}` at the negative times `pre_times`.
pub fn sample_prehistory(theta0: f64, pre_times: &[f64], seed: u64) -> Result<Vec<f64>> {
    if let Some(&bad) = pre_times.iter().find(|&&t| !(t < 0.0)) {
        return Err(Error::Domain(format!(
            "pre-history times must be negative, got {bad}"
        )));
    }
    let us: Vec<f64> = pre_times.iter().map(|t| -t).collect();
    let mut normal = normal_stream(seed, 1);
    Ok(brownian_at(&us, &mut normal)
        .into_iter()
        .map(|y| theta0 + y)
        .collect())
}
