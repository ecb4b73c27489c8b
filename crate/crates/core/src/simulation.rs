//! Monte Carlo checks of the delayed-reporting implementation.
//!
//! Each path draws `θ_0` from the prior, samples the state exactly at the
//! grid times and at every time referenced by `φ`, and plays
//! `A_t = E[θ_t | θ_{φ(t)}] + b̂(t)`. Discounted flows use left-endpoint sums
//! with exact cell weights `e^{−rt_k} − e^{−rt_{k+1}}`; beyond the horizon
//! the analytic continuation value is added.
//!
//! Deviations are grim-trigger: a receiver who stops obeying at `t_dev`
//! gets no further information and plays the myopic forecast
//! `e^{κ(s−t_dev)}·E[θ_{t_dev} | θ_{φ(t_dev)}]` forever after.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{mean_and_se, pairwise_sum};
use crate::obedience::{continuation_loss, reservation_loss, sender_continuation_loss, QUAD_TOL};
use crate::plausibility::ReportingFunction;
use crate::policy::PolicySolution;
use crate::state_process::{brownian_at, normal_stream, posterior_coefficients, ReportTime};

/// Number of default deviation times.
pub const DEVIATION_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Truncation time; `None` means `T + 10/r`.
    pub horizon: Option<f64>,
    /// Add the analytic continuation value beyond the horizon.
    pub tail_correction: bool,
    pub base_seed: u64,
    /// Times at which the empirical bias and variance are checked.
    pub checkpoints: Vec<f64>,
    /// Deviation times; `None` means 50 points over `[0, T + 1]`.
    pub deviation_times: Option<Vec<f64>>,
    /// Also estimate the losses on the grid with step `2·dt`.
    pub coarse_check: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 10_000,
            dt: 1e-3,
            horizon: None,
            tail_correction: true,
            base_seed: 0,
            checkpoints: Vec::new(),
            deviation_times: None,
            coarse_check: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("horizon", "must be positive and finite"));
            }
        }
        if self
            .checkpoints
            .iter()
            .any(|t| !(*t >= 0.0 && t.is_finite()))
        {
            return Err(Error::invalid(
                "checkpoints",
                "times must be finite and ≥ 0",
            ));
        }
        if let Some(ts) = &self.deviation_times {
            if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(Error::invalid(
                    "deviation_times",
                    "times must be finite and ≥ 0",
                ));
            }
        }
        Ok(())
    }
}

/// A Monte Carlo mean and its standard error (`None` for a single path).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Estimate {
    fn of(values: &[f64]) -> Self {
        let (mean, se) = mean_and_se(values);
        Estimate { mean, se }
    }

    /// `|mean − target| ≤ k·se`, up to rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let slack = 1e-12 * target.abs().max(1.0);
        (self.mean - target).abs() <= k * self.se.unwrap_or(0.0) + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationTest {
    pub t_dev: f64,
    pub deviation: Estimate,
    pub follow: Estimate,
    /// Paired `deviation − follow` on common paths.
    pub difference: Estimate,
    /// `(σ² + r v̂(t_dev))/(r − 2κ)`.
    pub reservation_loss: f64,
    /// `∫ r e^{−r(s−t_dev)} [b̂² + v̂] ds`.
    pub analytic_follow: f64,
    /// `difference ≥ −4·se`; `None` without a standard error.
    pub passes: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    /// Mean of `A_t − θ_t`.
    pub bias: Estimate,
    pub expected_bias: f64,
    /// Sample variance of `θ_t − E[θ_t | θ_{φ(t)}]`.
    pub variance: Estimate,
    pub expected_variance: f64,
    pub bias_ok: bool,
    pub variance_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCheck {
    pub coarse_dt: f64,
    pub sender_loss: Estimate,
    pub receiver_loss: Estimate,
    /// Fine minus coarse, in units of the fine standard error.
    pub sender_shift_se: Option<f64>,
    pub receiver_shift_se: Option<f64>,
    /// Both shifts below one standard error.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub base_seed: u64,
    pub sender_loss: Estimate,
    pub receiver_loss: Estimate,
    pub analytic_sender_loss: f64,
    pub analytic_receiver_loss: f64,
    pub deviation_tests: Vec<DeviationTest>,
    pub checkpoints: Vec<Checkpoint>,
    pub discretization: Option<DiscretizationCheck>,
}

impl SimResult {
    pub fn no_profitable_deviation(&self) -> bool {
        self.deviation_tests.iter().all(|d| d.passes != Some(false))
    }
}

/// One row of a per-path trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub theta: f64,
    /// `φ(t)`; `None` for `−∞`.
    pub phi: Option<f64>,
    pub action: f64,
    pub receiver_flow: f64,
    pub sender_flow: f64,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Prior,
    State(usize),
    Pre(usize),
}

/// Everything that is common to all paths.
struct Plan {
    sol: PolicySolution,
    n: usize,
    dt: f64,
    horizon: f64,
    times: Vec<f64>,
    trans_a: Vec<f64>,
    trans_s: Vec<f64>,
    grid_idx: Vec<usize>,
    source: Vec<Source>,
    pre_us: Vec<f64>,
    phi: Vec<ReportTime>,
    slope: Vec<f64>,
    intercept: Vec<f64>,
    bias: Vec<f64>,
    disc: Vec<f64>,
    cell: f64,
    coarse_cell: f64,
    tail: bool,
    receiver_tail: f64,
    sender_tail: f64,
    dev_idx: Vec<usize>,
    /// `Σ_{k≥j} cell·e^{(2κ−r)(t_k−t_j)}` for every `j`.
    dev_s1: Vec<f64>,
    check_idx: Vec<usize>,
}

fn default_span(sol: &PolicySolution) -> f64 {
    sol.full_disclosure_time.unwrap_or(0.0)
}

fn check_compatible(sol: &PolicySolution, phi: &ReportingFunction, horizon: f64) -> Result<()> {
    if phi.params != sol.params {
        return Err(Error::Incompatible(
            "reporting function and policy use different parameters".into(),
        ));
    }
    let p = &sol.params;
    for k in 0..=400 {
        let t = horizon * k as f64 / 400.0;
        let induced = posterior_coefficients(phi.phi(t), t, p)?.variance;
        let target = sol.eval_variance(t);
        if (induced - target).abs() > 1e-8 * target.max(1.0) {
            return Err(Error::Incompatible(format!(
                "reporting function induces variance {induced} at t = {t}, policy has {target}"
            )));
        }
    }
    Ok(())
}

impl Plan {
    fn new(sol: &PolicySolution, phi: &ReportingFunction, cfg: &SimConfig) -> Result<Plan> {
        cfg.validate()?;
        sol.validate()?;
        let p = sol.params;
        let span = default_span(sol);
        let wanted = cfg.horizon.unwrap_or(span + 10.0 / p.r);
        if wanted < span {
            return Err(Error::invalid(
                "horizon",
                format!("{wanted} lies before the full-disclosure time {span}"),
            ));
        }
        let dev_times: Vec<f64> = match &cfg.deviation_times {
            Some(ts) => ts.clone(),
            None => {
                let end = span + 1.0;
                (0..DEVIATION_POINTS)
                    .map(|k| end * k as f64 / (DEVIATION_POINTS - 1) as f64)
                    .collect()
            }
        };
        let latest = dev_times
            .iter()
            .chain(cfg.checkpoints.iter())
            .fold(wanted, |a, &b| a.max(b + cfg.dt));
        let mut n = (latest / cfg.dt).ceil() as usize;
        n = n.max(2);
        if n % 2 == 1 {
            n += 1;
        }
        let dt = cfg.dt;
        let horizon = n as f64 * dt;
        check_compatible(sol, phi, horizon)?;

        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let phis: Vec<ReportTime> = times.iter().map(|&t| phi.phi(t)).collect();

        // Merge grid times with referenced nonnegative report times.
        let mut merged: Vec<f64> = times.clone();
        merged.extend(phis.iter().filter_map(|f| f.value()).filter(|&s| s >= 0.0));
        merged.sort_by(f64::total_cmp);
        merged.dedup();
        let locate = |t: f64| merged.partition_point(|&s| s < t);
        let grid_idx: Vec<usize> = times.iter().map(|&t| locate(t)).collect();

        let mut pre_us: Vec<f64> = phis
            .iter()
            .filter_map(|f| f.value())
            .filter(|&s| s < 0.0)
            .map(|s| -s)
            .collect();
        pre_us.sort_by(f64::total_cmp);
        pre_us.dedup();

        let source: Vec<Source> = phis
            .iter()
            .map(|f| match f {
                ReportTime::NegInfinity => Source::Prior,
                ReportTime::At(s) if *s >= 0.0 => Source::State(locate(*s)),
                ReportTime::At(s) => Source::Pre(pre_us.partition_point(|&u| u < -s)),
            })
            .collect();

        let mut trans_a = vec![0.0; merged.len()];
        let mut trans_s = vec![0.0; merged.len()];
        for m in 1..merged.len() {
            let h = merged[m] - merged[m - 1];
            trans_a[m] = (p.kappa * h).exp();
            trans_s[m] = p.no_info_variance(0.0, h).sqrt();
        }

        let mut slope = Vec::with_capacity(n + 1);
        let mut intercept = Vec::with_capacity(n + 1);
        for (k, &t) in times.iter().enumerate() {
            let post = posterior_coefficients(phis[k], t, &p)?;
            slope.push(post.slope);
            intercept.push(post.intercept);
        }
        let bias: Vec<f64> = times.iter().map(|&t| sol.eval_bias(t)).collect();
        let disc: Vec<f64> = times.iter().map(|&t| (-p.r * t).exp()).collect();
        let cell = -(-p.r * dt).exp_m1();
        let coarse_cell = -(-2.0 * p.r * dt).exp_m1();

        let (receiver_tail, sender_tail) = if cfg.tail_correction {
            (
                continuation_loss(sol, horizon, p.r, QUAD_TOL)?,
                sender_continuation_loss(sol, sol.beta, horizon, p.r, QUAD_TOL)?,
            )
        } else {
            (0.0, 0.0)
        };

        let snap = |t: f64| ((t / dt).round() as usize).min(n - 1);
        let dev_idx: Vec<usize> = dev_times.iter().map(|&t| snap(t)).collect();
        let check_idx: Vec<usize> = cfg.checkpoints.iter().map(|&t| snap(t)).collect();

        let mut dev_s1 = vec![0.0; n + 1];
        let q1 = ((2.0 * p.kappa - p.r) * dt).exp();
        for j in (0..n).rev() {
            dev_s1[j] = cell + q1 * dev_s1[j + 1];
        }

        Ok(Plan {
            sol: *sol,
            n,
            dt,
            horizon,
            times,
            trans_a,
            trans_s,
            grid_idx,
            source,
            pre_us,
            phi: phis,
            slope,
            intercept,
            bias,
            disc,
            cell,
            coarse_cell,
            tail: cfg.tail_correction,
            receiver_tail,
            sender_tail,
            dev_idx,
            dev_s1,
            check_idx,
        })
    }
}

#[derive(Default)]
struct Scratch {
    states: Vec<f64>,
    theta: Vec<f64>,
    action: Vec<f64>,
}

struct PathOut {
    receiver: f64,
    sender: f64,
    coarse_receiver: f64,
    coarse_sender: f64,
    deviation: Vec<f64>,
    follow: Vec<f64>,
    cp_bias: Vec<f64>,
    cp_resid: Vec<f64>,
}

fn run_path(plan: &Plan, seed: u64, path: usize, scratch: &mut Scratch) -> PathOut {
    let p = &plan.sol.params;
    let mut normal = normal_stream(seed, path as u64);
    let m = plan.trans_a.len();
    scratch.states.clear();
    scratch.states.resize(m, 0.0);
    scratch.states[0] = p.mu0 + p.sigma0_sq.sqrt() * normal();
    for j in 1..m {
        scratch.states[j] = plan.trans_a[j] * scratch.states[j - 1] + plan.trans_s[j] * normal();
    }
    let theta0 = scratch.states[0];
    let pre: Vec<f64> = brownian_at(&plan.pre_us, &mut normal)
        .into_iter()
        .map(|y| theta0 + y)
        .collect();

    let n = plan.n;
    scratch.theta.clear();
    scratch.action.clear();
    for k in 0..=n {
        let report = match plan.source[k] {
            Source::Prior => 0.0,
            Source::State(i) => scratch.states[i],
            Source::Pre(i) => pre[i],
        };
        let a = plan.slope[k] * report + plan.intercept[k] + plan.bias[k];
        scratch.theta.push(scratch.states[plan.grid_idx[k]]);
        scratch.action.push(a);
    }

    let beta = plan.sol.beta;
    let mut receiver = Vec::with_capacity(n);
    let mut sender = Vec::with_capacity(n);
    let mut coarse_receiver = Vec::with_capacity(n / 2);
    let mut coarse_sender = Vec::with_capacity(n / 2);
    for k in 0..n {
        let err = scratch.action[k] - scratch.theta[k];
        let r_flow = plan.disc[k] * err * err;
        let s_flow = plan.disc[k] * (err - beta) * (err - beta);
        receiver.push(r_flow);
        sender.push(s_flow);
        if k % 2 == 0 {
            coarse_receiver.push(r_flow);
            coarse_sender.push(s_flow);
        }
    }
    let tail_w = plan.disc[n];
    let total = |flows: &[f64], cell: f64, tail: f64| cell * pairwise_sum(flows) + tail_w * tail;

    let mut deviation = vec![0.0; plan.dev_idx.len()];
    let mut follow = vec![0.0; plan.dev_idx.len()];
    if let Some(&lowest) = plan.dev_idx.iter().min() {
        let c = p.price();
        let q = (-p.r * plan.dt).exp();
        let q2 = ((p.kappa - p.r) * plan.dt).exp();
        let (mut s2, mut s3, mut fol) = (0.0, 0.0, 0.0);
        let theta_h = scratch.theta[n];
        // Slots ordered so that the latest deviation time is popped first.
        let mut pending: Vec<(usize, usize)> = plan
            .dev_idx
            .iter()
            .enumerate()
            .map(|(slot, &idx)| (idx, slot))
            .collect();
        pending.sort_unstable();
        for j in (lowest..n).rev() {
            let th = scratch.theta[j];
            let err = scratch.action[j] - th;
            s2 = plan.cell * th + q2 * s2;
            s3 = plan.cell * th * th + q * s3;
            fol = plan.cell * err * err + q * fol;
            while let Some(&(idx, slot)) = pending.last() {
                if idx != j {
                    break;
                }
                pending.pop();
                let mean = scratch.action[j] - plan.bias[j];
                let to_h = plan.horizon - plan.times[j];
                let decay = (-p.r * to_h).exp();
                let (dev_tail, follow_tail) = if plan.tail {
                    let e_h = mean * (p.kappa * to_h).exp() - theta_h;
                    (
                        decay * (e_h * e_h * p.r / c + p.sigma * p.sigma / c),
                        decay * plan.receiver_tail,
                    )
                } else {
                    (0.0, 0.0)
                };
                deviation[slot] = mean * mean * plan.dev_s1[j] - 2.0 * mean * s2 + s3 + dev_tail;
                follow[slot] = fol + follow_tail;
            }
        }
    }

    let cp_bias = plan
        .check_idx
        .iter()
        .map(|&k| scratch.action[k] - scratch.theta[k])
        .collect();
    let cp_resid = plan
        .check_idx
        .iter()
        .map(|&k| scratch.theta[k] - (scratch.action[k] - plan.bias[k]))
        .collect();

    PathOut {
        receiver: total(&receiver, plan.cell, plan.receiver_tail),
        sender: total(&sender, plan.cell, plan.sender_tail),
        coarse_receiver: total(&coarse_receiver, plan.coarse_cell, plan.receiver_tail),
        coarse_sender: total(&coarse_sender, plan.coarse_cell, plan.sender_tail),
        deviation,
        follow,
        cp_bias,
        cp_resid,
    }
}

fn run_all(plan: &Plan, cfg: &SimConfig) -> Vec<PathOut> {
    (0..cfg.n_paths)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, i| {
            run_path(plan, cfg.base_seed, i, scratch)
        })
        .collect()
}

fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let (mean, _) = mean_and_se(xs);
    if n < 2 {
        return Estimate {
            mean: 0.0,
            se: None,
        };
    }
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let m2 = pairwise_sum(&dev2) / n as f64;
    let m4 = pairwise_sum(&dev4) / n as f64;
    Estimate {
        mean: pairwise_sum(&dev2) / (n - 1) as f64,
        se: Some(((m4 - m2 * m2).max(0.0) / n as f64).sqrt()),
    }
}

fn column(outs: &[PathOut], pick: impl Fn(&PathOut) -> f64) -> Vec<f64> {
    outs.iter().map(pick).collect()
}

/// Simulates the policy implemented by `phi` and estimates the discounted
/// losses, the deviation payoffs and the checkpoint moments.
pub fn simulate_policy(
    sol: &PolicySolution,
    phi: &ReportingFunction,
    cfg: &SimConfig,
) -> Result<SimResult> {
    let plan = Plan::new(sol, phi, cfg)?;
    let outs = run_all(&plan, cfg);
    let p = &sol.params;

    let sender_loss = Estimate::of(&column(&outs, |o| o.sender));
    let receiver_loss = Estimate::of(&column(&outs, |o| o.receiver));

    let mut deviation_tests = Vec::with_capacity(plan.dev_idx.len());
    for (slot, &j) in plan.dev_idx.iter().enumerate() {
        let t_dev = plan.times[j];
        let dev = column(&outs, |o| o.deviation[slot]);
        let fol = column(&outs, |o| o.follow[slot]);
        let diff: Vec<f64> = dev.iter().zip(&fol).map(|(d, f)| d - f).collect();
        let difference = Estimate::of(&diff);
        deviation_tests.push(DeviationTest {
            t_dev,
            deviation: Estimate::of(&dev),
            follow: Estimate::of(&fol),
            difference,
            reservation_loss: reservation_loss(sol.eval_variance(t_dev), p),
            analytic_follow: continuation_loss(sol, t_dev, p.r, QUAD_TOL)?,
            passes: difference.se.map(|se| difference.mean >= -4.0 * se),
        });
    }

    let checkpoints = plan
        .check_idx
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let t = plan.times[k];
            let bias = Estimate::of(&column(&outs, |o| o.cp_bias[slot]));
            let variance = variance_estimate(&column(&outs, |o| o.cp_resid[slot]));
            let expected_bias = sol.eval_bias(t);
            let expected_variance = sol.eval_variance(t);
            Checkpoint {
                t,
                bias,
                expected_bias,
                variance,
                expected_variance,
                bias_ok: bias.within(expected_bias, 4.0),
                variance_ok: variance.within(expected_variance, 4.0),
            }
        })
        .collect();

    let discretization = cfg.coarse_check.then(|| {
        let cs = Estimate::of(&column(&outs, |o| o.coarse_sender));
        let cr = Estimate::of(&column(&outs, |o| o.coarse_receiver));
        let shift =
            |fine: &Estimate, coarse: &Estimate| fine.se.map(|se| (fine.mean - coarse.mean) / se);
        let sender_shift_se = shift(&sender_loss, &cs);
        let receiver_shift_se = shift(&receiver_loss, &cr);
        let below = |x: Option<f64>| x.is_some_and(|x| x.abs() < 1.0);
        DiscretizationCheck {
            coarse_dt: 2.0 * plan.dt,
            sender_loss: cs,
            receiver_loss: cr,
            sender_shift_se,
            receiver_shift_se,
            consistent: below(sender_shift_se) && below(receiver_shift_se),
        }
    });

    Ok(SimResult {
        n_paths: cfg.n_paths,
        dt: plan.dt,
        horizon: plan.horizon,
        base_seed: cfg.base_seed,
        sender_loss,
        receiver_loss,
        analytic_sender_loss: sender_continuation_loss(sol, sol.beta, 0.0, p.r, QUAD_TOL)?,
        analytic_receiver_loss: continuation_loss(sol, 0.0, p.r, QUAD_TOL)?,
        deviation_tests,
        checkpoints,
        discretization,
    })
}

/// The deviator's continuation loss at `t_dev` under grim trigger, with the
/// paired follow loss on the same paths.
pub fn simulate_deviation(
    sol: &PolicySolution,
    phi: &ReportingFunction,
    t_dev: f64,
    cfg: &SimConfig,
) -> Result<DeviationTest> {
    if !(t_dev >= 0.0 && t_dev.is_finite()) {
        return Err(Error::Domain(format!(
            "deviation time must be ≥ 0, got {t_dev}"
        )));
    }
    let cfg = SimConfig {
        deviation_times: Some(vec![t_dev]),
        checkpoints: Vec::new(),
        coarse_check: false,
        ..cfg.clone()
    };
    let res = simulate_policy(sol, phi, &cfg)?;
    Ok(res.deviation_tests[0])
}

/// Per-step trace of a single path.
pub fn trace_path(
    sol: &PolicySolution,
    phi: &ReportingFunction,
    cfg: &SimConfig,
    path: usize,
) -> Result<Vec<TraceRow>> {
    let cfg = SimConfig {
        deviation_times: Some(Vec::new()),
        checkpoints: Vec::new(),
        ..cfg.clone()
    };
    let plan = Plan::new(sol, phi, &cfg)?;
    let mut scratch = Scratch::default();
    run_path(&plan, cfg.base_seed, path, &mut scratch);
    Ok((0..=plan.n)
        .map(|k| {
            let err = scratch.action[k] - scratch.theta[k];
            TraceRow {
                t: plan.times[k],
                theta: scratch.theta[k],
                phi: plan.phi[k].value(),
                action: scratch.action[k],
                receiver_flow: err * err,
                sender_flow: (err - sol.beta).powi(2),
            }
        })
        .collect())
}
