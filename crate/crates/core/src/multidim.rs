//! The optimal policy with several independent state components.
//!
//! Components are ordered by increasing persistence. The sender fully
//! discloses the least persistent components at once and then reveals the
//! remaining ones one at a time, each phase `i` decaying the bias magnitude at
//! rate `r − 2κ_i`. The full-disclosure times come from a shooting procedure
//! over initial bias magnitudes `α` and initial variances `ν`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{bisect, growth};
use crate::obedience::PathPair;
use crate::policy::Regime;
use crate::state_process::ProcessParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiParams {
    /// Persistence rates in ascending order.
    pub kappa: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma0_sq: Vec<f64>,
    pub r: f64,
    pub beta: Vec<f64>,
}

impl MultiParams {
    pub fn new(
        kappa: Vec<f64>,
        sigma: Vec<f64>,
        sigma0_sq: Vec<f64>,
        r: f64,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let p = MultiParams {
            kappa,
            sigma,
            sigma0_sq,
            r,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.kappa.len();
        if n == 0 {
            return Err(Error::invalid("kappa", "need at least one component"));
        }
        if self.sigma.len() != n || self.sigma0_sq.len() != n || self.beta.len() != n {
            return Err(Error::invalid(
                "kappa",
                "kappa, sigma, sigma0_sq and beta must have the same length",
            ));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid(
                "r",
                format!("must be positive, got {}", self.r),
            ));
        }
        for i in 0..n {
            let k = self.kappa[i];
            if !k.is_finite() || 2.0 * k >= self.r {
                return Err(Error::invalid(
                    "kappa",
                    format!("need 2κ < r, got κ[{i}] = {k}"),
                ));
            }
            if !(self.sigma[i].is_finite() && self.sigma[i] > 0.0) {
                return Err(Error::invalid("sigma", format!("σ[{i}] must be positive")));
            }
            if !(self.sigma0_sq[i].is_finite() && self.sigma0_sq[i] >= 0.0) {
                return Err(Error::invalid("sigma0_sq", format!("σ₀²[{i}] must be ≥ 0")));
            }
            if !self.beta[i].is_finite() {
                return Err(Error::invalid("beta", "must be finite"));
            }
        }
        if self.kappa.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(
                "kappa",
                "components must be sorted by ascending κ (see MultiParams::sorted)",
            ));
        }
        if self.beta_norm() == 0.0 {
            return Err(Error::invalid("beta", "must not be the zero vector"));
        }
        Ok(())
    }

    /// Reorders the components by ascending κ. Returns the permutation:
    /// component `k` of the result is component `perm[k]` of the input.
    pub fn sorted(mut self) -> (Self, Vec<usize>) {
        let mut perm: Vec<usize> = (0..self.kappa.len()).collect();
        perm.sort_by(|&a, &b| self.kappa[a].total_cmp(&self.kappa[b]));
        let pick = |xs: &Vec<f64>| perm.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        self.kappa = pick(&self.kappa);
        self.sigma = pick(&self.sigma);
        self.sigma0_sq = pick(&self.sigma0_sq);
        self.beta = pick(&self.beta);
        (self, perm)
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// `r − 2κ_i`.
    pub fn price(&self, i: usize) -> f64 {
        self.r - 2.0 * self.kappa[i]
    }

    /// One-dimensional parameters of component `i` (prior mean 0).
    pub fn component(&self, i: usize) -> ProcessParams {
        ProcessParams {
            kappa: self.kappa[i],
            sigma: self.sigma[i],
            r: self.r,
            mu0: 0.0,
            sigma0_sq: self.sigma0_sq[i],
        }
    }

    pub fn components(&self) -> Vec<ProcessParams> {
        (0..self.n()).map(|i| self.component(i)).collect()
    }

    fn eta(&self, i: usize, v: f64, h: f64) -> f64 {
        (2.0 * self.kappa[i] * h).exp() * v + self.sigma[i].powi(2) * growth(self.kappa[i], h)
    }

    fn has_tied_kappa(&self) -> bool {
        self.kappa.windows(2).any(|w| w[0] == w[1])
    }
}

/// Partial sums `σ̂_j²` and the magnitude `σ̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaHat {
    pub partial_sq: Vec<f64>,
    pub sigma_hat: f64,
}

pub fn sigma_hat(p: &MultiParams) -> SigmaHat {
    let mut acc = 0.0;
    let partial_sq: Vec<f64> = (0..p.n())
        .map(|i| {
            acc += p.sigma[i].powi(2) / p.price(i);
            acc
        })
        .collect();
    SigmaHat {
        sigma_hat: acc.sqrt(),
        partial_sq,
    }
}

/// State at the start of one phase of the shooting procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStart {
    pub component: usize,
    pub start: f64,
    pub bias: f64,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub alpha: f64,
    pub nu: Vec<f64>,
    /// Disclosure times `t_1, …, t_n`.
    pub times: Vec<f64>,
    pub terminal: f64,
    pub f: f64,
    pub phases: Vec<PhaseStart>,
    /// Bias and variances at the terminal time.
    pub final_bias: f64,
    pub final_variances: Vec<f64>,
}

/// Variance of the phase component `u` time units into its phase.
fn phase_variance(p: &MultiParams, sh: &SigmaHat, i: usize, bias0: f64, v0: f64, u: f64) -> f64 {
    let k = p.kappa[i];
    let c = p.price(i);
    let grow = (2.0 * k * u).exp();
    grow * v0 - c * bias0 * bias0 * (grow - (-2.0 * c * u).exp()) / (2.0 * (p.r - k))
        + c * sh.partial_sq[i] * growth(k, u)
}

impl ShootResult {
    /// Bias magnitude and variances along the shot trajectory.
    pub fn eval(&self, p: &MultiParams, t: f64) -> (f64, Vec<f64>) {
        let sh = sigma_hat(p);
        let Some(first) = self.phases.first() else {
            return (self.final_bias, self.final_variances.clone());
        };
        if t >= self.terminal {
            return (self.final_bias, self.final_variances.clone());
        }
        let k = self.phases.partition_point(|ph| ph.start <= t).max(1) - 1;
        let ph = if t < first.start {
            first
        } else {
            &self.phases[k]
        };
        let u = (t - ph.start).max(0.0);
        let i = ph.component;
        let bias = ph.bias * (-p.price(i) * u).exp();
        let vars = (0..p.n())
            .map(|j| {
                if j < i {
                    0.0
                } else if j == i {
                    phase_variance(p, &sh, i, ph.bias, ph.variances[i], u).max(0.0)
                } else {
                    p.eta(j, ph.variances[j], u)
                }
            })
            .collect();
        (bias, vars)
    }
}

/// Runs the shooting procedure from bias magnitude `alpha` and initial
/// variances `nu`, returning the phase times and
/// `f(α, ν) = ‖b(T)‖ − σ̂ − Σ v_i(T)`.
pub fn shoot(alpha: f64, nu: &[f64], p: &MultiParams) -> Result<ShootResult> {
    p.validate()?;
    let n = p.n();
    if nu.len() != n || nu.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(
            "nu",
            "need n finite, nonnegative initial variances",
        ));
    }
    let sh = sigma_hat(p);
    if !(alpha >= sh.sigma_hat) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha = {alpha} lies below the stationary magnitude {}",
            sh.sigma_hat
        )));
    }
    let mut times = vec![0.0; n];
    let mut phases = Vec::new();
    let Some(i0) = nu.iter().position(|&v| v > 0.0) else {
        return Ok(ShootResult {
            alpha,
            nu: nu.to_vec(),
            times,
            terminal: 0.0,
            f: alpha - sh.sigma_hat,
            phases,
            final_bias: alpha,
            final_variances: vec![0.0; n],
        });
    };
    let mut v: Vec<f64> = nu.to_vec();
    for x in v.iter_mut().take(i0) {
        *x = 0.0;
    }
    let mut bias = alpha;
    let mut clock = 0.0;
    for i in i0..n {
        phases.push(PhaseStart {
            component: i,
            start: clock,
            bias,
            variances: v.clone(),
        });
        let c = p.price(i);
        let v0 = v[i];
        let u_bias = if bias > sh.sigma_hat {
            (bias / sh.sigma_hat).ln() / c
        } else {
            0.0
        };
        let w = |u: f64| phase_variance(p, &sh, i, bias, v0, u) * (-2.0 * p.kappa[i] * u).exp();
        let (u, bias_first) = if v0 <= 0.0 {
            (0.0, false)
        } else if w(u_bias) > 0.0 {
            (u_bias, true)
        } else {
            (bisect(w, 0.0, u_bias, 0.0)?, false)
        };
        let vi_end = phase_variance(p, &sh, i, bias, v0, u);
        for j in (i + 1)..n {
            v[j] = p.eta(j, v[j], u);
        }
        v[i] = if bias_first { vi_end.max(0.0) } else { 0.0 };
        bias = if bias_first {
            sh.sigma_hat
        } else {
            bias * (-c * u).exp()
        };
        clock += u;
        times[i] = clock;
        if bias_first {
            for t in times.iter_mut().skip(i + 1) {
                *t = clock;
            }
            break;
        }
    }
    let f = bias - sh.sigma_hat - v.iter().sum::<f64>();
    Ok(ShootResult {
        alpha,
        nu: nu.to_vec(),
        times,
        terminal: clock,
        f,
        phases,
        final_bias: bias,
        final_variances: v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDimSolution {
    pub regime: Regime,
    /// Critical component, counted from 1; `n + 1` when every initial
    /// variance is zero, `None` in the first-best regime.
    pub i0: Option<usize>,
    /// Full-disclosure times `t_1, …, t_n`.
    pub times: Vec<f64>,
    /// `τ_j = Σ_{i≥j} (r − 2κ_i)(t_i − t_{i−1})`.
    pub tau: Vec<f64>,
    pub sigma_hat: f64,
    pub sigma_hat_partial_sq: Vec<f64>,
    /// `‖b̂(0)‖`.
    pub initial_bias: f64,
    /// Initial variances `v̂(0)` used by the shooting procedure.
    pub nu: Vec<f64>,
    /// Tied persistence rates: only sums of tied variances are pinned down.
    pub non_unique: bool,
    pub params: MultiParams,
}

fn alpha_star(nu: &[f64], p: &MultiParams, sh: f64) -> Result<f64> {
    let f = |a: f64| shoot(a, nu, p).map(|s| s.f);
    if f(sh)? >= 0.0 {
        return Ok(sh);
    }
    let mut hi = sh + 1.0;
    let mut tries = 0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::RootSearch("no α with f(α, ν) > 0".into()));
        }
    }
    let mut failure = None;
    let root = bisect(
        |a| match f(a) {
            Ok(x) => x,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        sh,
        hi,
        0.0,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

fn chain_point(p: &MultiParams, i0: usize, nu_i0: f64) -> Vec<f64> {
    (0..p.n())
        .map(|j| match j.cmp(&i0) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => nu_i0,
            std::cmp::Ordering::Greater => p.sigma0_sq[j],
        })
        .collect()
}

pub fn solve_multidim(p: &MultiParams) -> Result<MultiDimSolution> {
    p.validate()?;
    let n = p.n();
    let sh = sigma_hat(p);
    let beta_norm = p.beta_norm();
    let base = MultiDimSolution {
        regime: Regime::FirstBest,
        i0: None,
        times: vec![0.0; n],
        tau: vec![0.0; n],
        sigma_hat: sh.sigma_hat,
        sigma_hat_partial_sq: sh.partial_sq.clone(),
        initial_bias: beta_norm,
        nu: vec![0.0; n],
        non_unique: false,
        params: p.clone(),
    };
    if beta_norm <= sh.sigma_hat {
        return Ok(base);
    }
    let full = p.sigma0_sq.clone();
    let alpha_hat = alpha_star(&full, p, sh.sigma_hat)?;
    let (alpha, nu) = if beta_norm >= alpha_hat {
        (alpha_hat, full)
    } else {
        let g = |nu: &[f64]| shoot(beta_norm, nu, p).map(|s| s.f);
        let mut found = None;
        for i0 in (0..n).rev() {
            if p.sigma0_sq[i0] == 0.0 {
                continue;
            }
            if g(&chain_point(p, i0, p.sigma0_sq[i0]))? <= 0.0 {
                found = Some(i0);
                break;
            }
        }
        let i0 = found.ok_or_else(|| Error::RootSearch("no chain segment brackets α*".into()))?;
        let nu_i0 = bisect(
            |x| g(&chain_point(p, i0, x)).unwrap_or(f64::NAN),
            0.0,
            p.sigma0_sq[i0],
            0.0,
        )?;
        (beta_norm, chain_point(p, i0, nu_i0))
    };
    let shot = shoot(alpha, &nu, p)?;
    let i0 = nu.iter().position(|&v| v > 0.0).map_or(n + 1, |i| i + 1);
    let mut times = shot.times;
    // The last variance reaches zero tangentially; the bias hitting σ̂ pins
    // the terminal time far more precisely.
    if let Some(last) = shot.phases.last() {
        let end = last.start + (last.bias / sh.sigma_hat).ln().max(0.0) / p.price(last.component);
        for t in times.iter_mut().skip(last.component) {
            *t = end;
        }
    }
    for i in 1..n {
        times[i] = times[i].max(times[i - 1]);
    }
    let mut tau = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        let prev = if i == 0 { 0.0 } else { times[i - 1] };
        acc += p.price(i) * (times[i] - prev);
        tau[i] = acc;
    }
    Ok(MultiDimSolution {
        regime: Regime::Constrained,
        i0: Some(i0),
        times,
        tau,
        initial_bias: alpha,
        nu,
        non_unique: p.has_tied_kappa(),
        ..base
    })
}

impl MultiDimSolution {
    fn start_of(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.times[i - 1]
        }
    }

    /// `‖b̂(t)‖`.
    pub fn bias_norm(&self, t: f64) -> f64 {
        if self.regime == Regime::FirstBest {
            return self.initial_bias;
        }
        let t = t.max(0.0);
        let exponent: f64 = (0..self.params.n())
            .map(|i| self.params.price(i) * (self.times[i] - t.max(self.start_of(i))).max(0.0))
            .sum();
        self.sigma_hat * exponent.exp()
    }

    /// `v̂_i(t)`.
    pub fn variance(&self, i: usize, t: f64) -> f64 {
        let p = &self.params;
        let critical = match (self.regime, self.i0) {
            (Regime::Constrained, Some(i0)) => i0 - 1,
            _ => return 0.0,
        };
        if i < critical {
            return 0.0;
        }
        let t = t.max(0.0);
        let start = self.start_of(i);
        let within = |t: f64| {
            let x = (self.times[i] - t).max(0.0);
            if x == 0.0 {
                return 0.0;
            }
            let k = p.kappa[i];
            let c = p.price(i);
            let tau_next = if i + 1 < p.n() { self.tau[i + 1] } else { 0.0 };
            let v = -self.sigma_hat_partial_sq[i] * c * growth(-k, x)
                + self.sigma_hat.powi(2) * c * (2.0 * tau_next).exp() / (2.0 * (p.r - k))
                    * ((2.0 * c * x).exp() - (-2.0 * k * x).exp());
            v.max(0.0)
        };
        if t >= start {
            within(t)
        } else {
            let h = start - t;
            let k = p.kappa[i];
            let v = (-2.0 * k * h).exp() * (within(start) - p.sigma[i].powi(2) * growth(k, h));
            v.max(0.0)
        }
    }

    /// Times where the evaluators have kinks.
    pub fn kinks(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.times.iter().copied().filter(|&t| t > 0.0).collect();
        ts.dedup();
        ts
    }
}

/// `(b̂(t), v̂(t))` with `b̂` pointing along `β`.
pub fn eval_multi(sol: &MultiDimSolution, t: f64) -> (Vec<f64>, Vec<f64>) {
    let norm = sol.bias_norm(t);
    let beta_norm = sol.params.beta_norm();
    let bias = sol
        .params
        .beta
        .iter()
        .map(|b| norm * b / beta_norm)
        .collect();
    let vars = (0..sol.params.n()).map(|i| sol.variance(i, t)).collect();
    (bias, vars)
}

impl PathPair for MultiDimSolution {
    fn dim(&self) -> usize {
        self.params.n()
    }
    fn bias(&self, t: f64) -> f64 {
        self.bias_norm(t)
    }
    fn variance(&self, i: usize, t: f64) -> f64 {
        MultiDimSolution::variance(self, i, t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.kinks()
    }
    fn stationary_after(&self) -> Option<f64> {
        Some(self.times.last().copied().unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obedience::{ode_residual, verify_obedience};
    use crate::policy::solve;

    fn fig5(sigma0_2: f64) -> MultiParams {
        MultiParams::new(
            vec![-0.75, -0.25, 0.25],
            vec![2.0; 3],
            vec![4.0, sigma0_2, 4.0],
            3.0,
            vec![3.0, 4.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn sigma_hat_examples() {
        let sh = sigma_hat(&fig5(100.0));
        let expected = 4.0 / 4.5 + 4.0 / 3.5 + 4.0 / 2.5;
        assert!((sh.sigma_hat.powi(2) - expected).abs() < 1e-14);
        assert!((sh.sigma_hat.powi(2) - 3.6317).abs() < 1e-4);
        let twin = MultiParams::new(
            vec![0.1; 2],
            vec![1.5; 2],
            vec![1.0; 2],
            3.0,
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!((sigma_hat(&twin).sigma_hat.powi(2) - 2.0 * 2.25 / 2.8).abs() < 1e-14);
    }

    #[test]
    fn shoot_boundary_values() {
        let p = fig5(100.0);
        let sh = sigma_hat(&p).sigma_hat;
        let zero = shoot(4.0, &[0.0; 3], &p).unwrap();
        assert!((zero.f - (4.0 - sh)).abs() < 1e-15);
        let stuck = shoot(sh, &[0.0, 2.0, 4.0], &p).unwrap();
        assert!((stuck.f + 6.0).abs() < 1e-12);
        assert!(matches!(
            shoot(sh - 0.1, &[0.0; 3], &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reduces_to_one_dimension() {
        for (kappa, sigma0_sq, beta) in [
            (-0.5, 100.0, 3.0),
            (-0.5, 2.0, 3.0),
            (0.4, 5.0, 4.0),
            (0.0, 1.0, 2.5),
        ] {
            let one = ProcessParams::new(kappa, 2.0, 3.0, 0.0, sigma0_sq).unwrap();
            let sol1 = solve(&one, beta).unwrap();
            let p =
                MultiParams::new(vec![kappa], vec![2.0], vec![sigma0_sq], 3.0, vec![beta]).unwrap();
            let solm = solve_multidim(&p).unwrap();
            assert!((solm.times[0] - sol1.full_disclosure_time.unwrap()).abs() < 1e-8);
            for k in 0..50 {
                let t = k as f64 * 0.02;
                assert!((solm.bias_norm(t) - sol1.eval_bias(t)).abs() < 1e-8);
                assert!((solm.variance(0, t) - sol1.eval_variance(t)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn first_best_below_sigma_hat() {
        let p = MultiParams::new(
            vec![-0.75, 0.25],
            vec![2.0; 2],
            vec![1.0; 2],
            3.0,
            vec![0.6, 0.8],
        )
        .unwrap();
        let sol = solve_multidim(&p).unwrap();
        assert_eq!(sol.regime, Regime::FirstBest);
        let (b, v) = eval_multi(&sol, 0.3);
        assert_eq!(b, vec![0.6, 0.8]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn fig5_structure() {
        let p = fig5(100.0);
        let sol = solve_multidim(&p).unwrap();
        assert_eq!(sol.i0, Some(2));
        assert!((sol.bias_norm(0.0) - 5.0).abs() < 1e-9);
        let t = &sol.times;
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 0.043327).abs() < 1e-5 && (t[2] - 0.368502).abs() < 1e-5);
        // Decay rate 3.5 inside phase 2, 2.5 inside phase 3.
        let rate = |a: f64, b: f64| (sol.bias_norm(a) / sol.bias_norm(b)).ln() / (b - a);
        assert!((rate(0.01, 0.03) - 3.5).abs() < 1e-9);
        assert!((rate(0.1, 0.3) - 2.5).abs() < 1e-9);
        let (b, v) = eval_multi(&sol, t[2] + 0.1);
        assert!((b[0] - 0.6 * sol.sigma_hat).abs() < 1e-12);
        assert!(v.iter().all(|&x| x == 0.0));
        assert_eq!(sol.variance(1, t[1]), 0.0);
    }

    #[test]
    fn closed_form_matches_shooting() {
        for sigma0_2 in [100.0, 0.5] {
            let p = fig5(sigma0_2);
            let sol = solve_multidim(&p).unwrap();
            let shot = shoot(sol.initial_bias, &sol.nu, &p).unwrap();
            let end = sol.times[2];
            for k in 0..=500 {
                let t = end * k as f64 / 500.0;
                let (b, v) = shot.eval(&p, t);
                assert!((b - sol.bias_norm(t)).abs() < 1e-6);
                for i in 0..3 {
                    assert!((v[i] - sol.variance(i, t)).abs() < 1e-6, "i = {i}, t = {t}");
                }
            }
        }
    }

    #[test]
    fn binding_and_residual() {
        let p = fig5(100.0);
        let sol = solve_multidim(&p).unwrap();
        let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.01).collect();
        let rep = verify_obedience(&sol, &p.components(), &grid, 1e-6).unwrap();
        assert!(rep.all_binding(), "{}", rep.max_excess);
        for t in [0.02, 0.2, 0.5] {
            assert!(ode_residual(&sol, &p.components(), t, None).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn binding_initial_variance_uses_full_chain() {
        let mut p = fig5(0.02);
        p.sigma0_sq = vec![0.02, 0.02, 0.02];
        let sol = solve_multidim(&p).unwrap();
        assert!(sol.initial_bias < p.beta_norm());
        assert_eq!(sol.nu, p.sigma0_sq);
        assert_eq!(sol.i0, Some(1));
        for i in 0..3 {
            assert!((sol.variance(i, 0.0) - 0.02).abs() < 1e-8);
        }
    }

    #[test]
    fn low_middle_variance_moves_critical_component_down() {
        let sol = solve_multidim(&fig5(0.05)).unwrap();
        assert_eq!(sol.i0, Some(1));
        assert!((sol.bias_norm(0.0) - 5.0).abs() < 1e-9);
        assert!((sol.variance(1, 0.0) - 0.05).abs() < 1e-8);
    }

    #[test]
    fn continuity_at_phase_starts() {
        let p = fig5(100.0);
        let sol = solve_multidim(&p).unwrap();
        let t1 = sol.times[1];
        let left = sol.variance(2, t1 - 1e-12);
        let right = sol.variance(2, t1);
        assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn ties_flagged() {
        let p = MultiParams::new(
            vec![0.1, 0.1],
            vec![1.0; 2],
            vec![2.0; 2],
            3.0,
            vec![3.0, 0.0],
        )
        .unwrap();
        let sol = solve_multidim(&p).unwrap();
        assert!(sol.non_unique);
    }

    #[test]
    fn sorting_and_validation() {
        let raw = MultiParams {
            kappa: vec![0.25, -0.75],
            sigma: vec![1.0, 2.0],
            sigma0_sq: vec![1.0, 2.0],
            r: 3.0,
            beta: vec![1.0, 0.0],
        };
        assert!(raw.validate().is_err());
        let (sorted, perm) = raw.sorted();
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(sorted.sigma, vec![2.0, 1.0]);
        assert!(sorted.validate().is_ok());
        assert!(MultiParams::new(vec![1.6], vec![1.0], vec![1.0], 3.0, vec![1.0]).is_err());
        assert!(MultiParams::new(vec![0.0], vec![1.0], vec![1.0], 3.0, vec![0.0]).is_err());
    }
}
