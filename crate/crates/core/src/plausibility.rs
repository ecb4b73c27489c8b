//! Bayes plausibility of variance paths and the delayed-reporting
//! construction that implements them.
//!
//! A path `v` is implemented by revealing, at time `t`, the state at the
//! earlier time `φ(t)`. Negative report times stand for a noisy signal of
//! `θ_0` whose noise variance is `−φ(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{bisect, ROOT_TOL};
use crate::policy::{PolicySolution, Regime};
use crate::state_process::{posterior_coefficients, ProcessParams, ReportTime};

/// Tolerance below `η(σ₀², t)` at which a variance counts as "no information".
pub const TANGENCY_TOL: f64 = 1e-12;

/// A deterministic variance path `v(t) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariancePath {
    /// Samples interpolated linearly and held constant after the last time.
    Sampled { times: Vec<f64>, values: Vec<f64> },
    /// Closed-form variance of an optimal policy.
    Policy { policy: PolicySolution },
}

impl VariancePath {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let path = VariancePath::Sampled { times, values };
        path.validate()?;
        Ok(path)
    }

    pub fn from_policy(policy: &PolicySolution) -> Self {
        VariancePath::Policy { policy: *policy }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VariancePath::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::invalid(
                        "values",
                        "need one value per time and at least one sample",
                    ));
                }
                if times[0] != 0.0 {
                    return Err(Error::invalid("times", "must start at 0"));
                }
                if times
                    .windows(2)
                    .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
                {
                    return Err(Error::invalid(
                        "times",
                        "must be strictly increasing and finite",
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::invalid("values", format!("variance {v} is not ≥ 0")));
                }
                Ok(())
            }
            VariancePath::Policy { policy } => policy.validate(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            VariancePath::Policy { policy } => policy.eval_variance(t),
            VariancePath::Sampled { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let (t0, t1) = (times[k], times[k + 1]);
                let w = (t - t0) / (t1 - t0);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Times where the path stops being smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            VariancePath::Policy { policy } => policy.breakpoints(),
            VariancePath::Sampled { times, .. } => times.clone(),
        }
    }

    /// Default grid on which the path is scanned.
    fn scan_grid(&self) -> Vec<f64> {
        match self {
            VariancePath::Sampled { times, .. } => times.clone(),
            VariancePath::Policy { policy } => {
                let end = match (policy.regime, policy.full_disclosure_time) {
                    (Regime::Constrained, Some(t)) if t > 0.0 => t,
                    (Regime::DeterministicState, _) => 20.0 / policy.params.price(),
                    _ => 1.0,
                };
                let n = 1024;
                let mut grid: Vec<f64> = (0..=n).map(|k| end * k as f64 / n as f64).collect();
                grid.push(end + 1.0);
                grid
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `v(0) ≤ σ₀²`.
    InitialVariance,
    /// `v(s) ≤ η(v(t), s − t)`.
    NoDisclosureBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Earlier time of the pair (0 for the initial constraint).
    pub t: f64,
    /// Time at which the bound is exceeded.
    pub s: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityVerdict {
    pub plausible: bool,
    pub violations: Vec<Violation>,
}

impl PlausibilityVerdict {
    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::NotPlausible {
                t: v.s,
                constraint: match v.constraint {
                    Constraint::InitialVariance => "initial variance",
                    Constraint::NoDisclosureBound => "no-disclosure bound",
                },
                excess: v.excess,
            }),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::invalid("grid", "must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Checks the initial-variance constraint and the no-disclosure bound on
/// adjacent pairs of `grid`. By the semigroup property of `η` adjacent pairs
/// imply all pairs.
pub fn is_bayes_plausible(
    v: &VariancePath,
    p: &ProcessParams,
    grid: &[f64],
    tol: f64,
) -> Result<PlausibilityVerdict> {
    check_grid(grid)?;
    let mut violations = Vec::new();
    let v0 = v.eval(0.0);
    if v0 > p.sigma0_sq + tol {
        violations.push(Violation {
            constraint: Constraint::InitialVariance,
            t: 0.0,
            s: 0.0,
            excess: v0 - p.sigma0_sq,
        });
    }
    let mut prev = v0;
    for w in grid.windows(2) {
        let next = v.eval(w[1]);
        let bound = p.no_info_variance(prev, w[1] - w[0]);
        if next > bound + tol {
            violations.push(Violation {
                constraint: Constraint::NoDisclosureBound,
                t: w[0],
                s: w[1],
                excess: next - bound,
            });
        }
        prev = next;
    }
    Ok(PlausibilityVerdict {
        plausible: violations.is_empty(),
        violations,
    })
}

/// Which branch of the delayed-reporting construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportingCase {
    /// `v = η(σ₀², t)`: nothing is reported, `φ = −∞`.
    NoReport,
    /// `η(0, t) < v < η(σ₀², t)`: a noisy signal of `θ_0`, `φ < 0`.
    NoisyInitial,
    /// `v ≤ η(0, t)`: the state at `φ = t − d ≥ 0`.
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportingPiece {
    pub start: f64,
    /// `None` for the final, unbounded piece.
    pub end: Option<f64>,
    pub case: ReportingCase,
}

/// `φ` implementing a plausible variance path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportingFunction {
    pub params: ProcessParams,
    pub path: VariancePath,
    pub pieces: Vec<ReportingPiece>,
}

fn classify(v: f64, t: f64, p: &ProcessParams) -> ReportingCase {
    if v >= p.no_info_variance(p.sigma0_sq, t) - TANGENCY_TOL {
        ReportingCase::NoReport
    } else if v <= p.no_info_variance(0.0, t) {
        ReportingCase::Delayed
    } else {
        ReportingCase::NoisyInitial
    }
}

fn phi_from_variance(v: f64, t: f64, p: &ProcessParams) -> ReportTime {
    match classify(v, t, p) {
        ReportingCase::NoReport => ReportTime::NegInfinity,
        ReportingCase::NoisyInitial => {
            // Variance at time 0 that grows into v(t) without news.
            let w = (v - p.no_info_variance(0.0, t)) * (-2.0 * p.kappa * t).exp();
            let s0 = p.sigma0_sq;
            let phi = s0 * w / (w - s0);
            ReportTime::At(phi.min(0.0))
        }
        ReportingCase::Delayed => {
            let d = p.no_info_duration(v).min(t);
            ReportTime::At(t - d)
        }
    }
}

impl ReportingFunction {
    /// `φ(t)`.
    pub fn phi(&self, t: f64) -> ReportTime {
        phi_from_variance(self.path.eval(t), t, &self.params)
    }

    pub fn case_at(&self, t: f64) -> ReportingCase {
        classify(self.path.eval(t), t, &self.params)
    }

    /// Times at which the case changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }
}

/// Builds `φ` for a Bayes-plausible path.
pub fn build_reporting_function(v: &VariancePath, p: &ProcessParams) -> Result<ReportingFunction> {
    p.validate()?;
    v.validate()?;
    let grid = v.scan_grid();
    let tol = 1e-9 * p.sigma0_sq.max(1.0);
    is_bayes_plausible(v, p, &grid, tol)?.into_result()?;

    let case = |t: f64| classify(v.eval(t), t, p);
    let mut pieces = vec![ReportingPiece {
        start: 0.0,
        end: None,
        case: case(0.0),
    }];
    for w in grid.windows(2) {
        let current = pieces
            .last()
            .map(|pc| pc.case)
            .unwrap_or(ReportingCase::NoReport);
        let next = case(w[1]);
        if next <= current {
            continue;
        }
        // Locate each boundary crossed between the two scan points.
        let mut from = current;
        let mut lo = w[0];
        while from < next {
            let to = match from {
                ReportingCase::NoReport => ReportingCase::NoisyInitial,
                _ => ReportingCase::Delayed,
            };
            let at = bisect(
                |t| if case(t) >= to { 1.0 } else { -1.0 },
                lo,
                w[1],
                ROOT_TOL,
            )
            .unwrap_or(w[1]);
            let landed = case(at.max(lo)).max(to);
            if let Some(last) = pieces.last_mut() {
                last.end = Some(at);
            }
            pieces.push(ReportingPiece {
                start: at,
                end: None,
                case: landed,
            });
            from = landed;
            lo = at;
        }
    }
    Ok(ReportingFunction {
        params: *p,
        path: v.clone(),
        pieces,
    })
}

/// Posterior variance of `θ_t` under `φ`.
pub fn induced_variance(phi: &ReportingFunction, t: f64, p: &ProcessParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be ≥ 0, got {t}")));
    }
    Ok(posterior_coefficients(phi.phi(t), t, p)?.variance)
}

/// `A_t = E[θ_t | θ_{φ(t)} = report] + b_t`.
pub fn decision_rule_action(
    report: f64,
    phi_t: ReportTime,
    t: f64,
    b_t: f64,
    p: &ProcessParams,
) -> Result<f64> {
    Ok(posterior_coefficients(phi_t, t, p)?.mean(report) + b_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::solve;

    fn params(kappa: f64, sigma: f64, sigma0_sq: f64) -> ProcessParams {
        ProcessParams::new(kappa, sigma, 3.0, 0.0, sigma0_sq).unwrap()
    }

    #[test]
    fn constant_prior_variance_is_plausible() {
        let p = params(0.0, 1.0, 2.0);
        let grid: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let v = VariancePath::sampled(grid.clone(), vec![2.0; 11]).unwrap();
        assert!(is_bayes_plausible(&v, &p, &grid, 0.0).unwrap().plausible);
    }

    #[test]
    fn initial_excess_is_reported() {
        let p = params(0.0, 1.0, 2.0);
        let v = VariancePath::sampled(vec![0.0, 1.0], vec![3.0, 3.0]).unwrap();
        let verdict = is_bayes_plausible(&v, &p, &[0.0, 1.0], 0.0).unwrap();
        assert!(!verdict.plausible);
        assert_eq!(
            verdict.violations[0].constraint,
            Constraint::InitialVariance
        );
        assert_eq!(verdict.violations[0].t, 0.0);
        assert!((verdict.violations[0].excess - 1.0).abs() < 1e-15);
    }

    #[test]
    fn upward_jump_is_reported() {
        let p = params(0.0, 1.0, 1.0);
        let v = VariancePath::sampled(vec![0.0, 0.1], vec![0.0, 0.2]).unwrap();
        let verdict = is_bayes_plausible(&v, &p, &[0.0, 0.1], 1e-12).unwrap();
        assert_eq!(verdict.violations.len(), 1);
        let bad = verdict.violations[0];
        assert_eq!(bad.constraint, Constraint::NoDisclosureBound);
        assert!((bad.excess - 0.1).abs() < 1e-12);
        assert!(build_reporting_function(&v, &p).is_err());
    }

    #[test]
    fn full_disclosure_reports_current_state() {
        let p = params(-0.5, 2.0, 1.0);
        let v = VariancePath::sampled(vec![0.0, 1.0, 2.0], vec![0.0; 3]).unwrap();
        let phi = build_reporting_function(&v, &p).unwrap();
        for t in [0.0, 0.4, 1.7, 5.0] {
            assert_eq!(phi.phi(t), ReportTime::At(t));
        }
    }

    #[test]
    fn delayed_case_example() {
        let p = params(0.0, 2.0, 1.0);
        assert_eq!(phi_from_variance(2.0, 1.0, &p), ReportTime::At(0.5));
    }

    #[test]
    fn noisy_case_example() {
        let p = params(0.0, 2.0, 3.0);
        let phi = phi_from_variance(3.0, 0.1, &p).value().unwrap();
        assert!((phi + 19.5).abs() < 1e-9);
        let post = posterior_coefficients(ReportTime::At(phi), 0.1, &p).unwrap();
        assert!((post.variance - 3.0).abs() < 1e-12);
    }

    #[test]
    fn induced_variance_conventions() {
        let p = params(0.0, 2.0, 3.0);
        let v = VariancePath::sampled(vec![0.0, 1.0], vec![3.0, 7.0]).unwrap();
        let phi = build_reporting_function(&v, &p).unwrap();
        assert_eq!(phi.phi(0.0), ReportTime::NegInfinity);
        assert_eq!(induced_variance(&phi, 0.0, &p).unwrap(), 3.0);
        let zero = VariancePath::sampled(vec![0.0], vec![0.0]).unwrap();
        let phi = build_reporting_function(&zero, &p).unwrap();
        assert_eq!(induced_variance(&phi, 0.8, &p).unwrap(), 0.0);
    }

    #[test]
    fn policy_round_trip_and_cases() {
        let p = ProcessParams::new(-0.5, 2.0, 3.0, 0.0, 100.0).unwrap();
        let sol = solve(&p, 3.0).unwrap();
        let phi = build_reporting_function(&VariancePath::from_policy(&sol), &p).unwrap();
        let cases: Vec<_> = phi.pieces.iter().map(|pc| pc.case).collect();
        assert_eq!(
            cases,
            vec![ReportingCase::NoisyInitial, ReportingCase::Delayed]
        );
        // v̂ meets η(0, ·) where φ crosses zero.
        let cross = phi.pieces[1].start;
        assert!((cross - 0.133761).abs() < 1e-6);
        match phi.phi(cross) {
            ReportTime::At(x) => assert!(x.abs() < 1e-9),
            ReportTime::NegInfinity => panic!("expected a finite report time"),
        }
        let mut prev = ReportTime::NegInfinity;
        for k in 0..=600 {
            let t = k as f64 * 0.001;
            let now = phi.phi(t);
            assert!(prev.le(now));
            prev = now;
            let err = induced_variance(&phi, t, &p).unwrap() - sol.eval_variance(t);
            assert!(err.abs() < 1e-9, "t = {t}: {err}");
        }
    }

    #[test]
    fn binding_initial_variance_starts_silent() {
        let p = ProcessParams::new(-0.5, 2.0, 3.0, 0.0, 2.0).unwrap();
        let sol = solve(&p, 3.0).unwrap();
        let phi = build_reporting_function(&VariancePath::from_policy(&sol), &p).unwrap();
        assert_eq!(phi.pieces[0].case, ReportingCase::NoReport);
        assert_eq!(phi.phi(0.0), ReportTime::NegInfinity);
    }

    #[test]
    fn decision_rule_examples() {
        let p = params(0.0, 1.0, 1.0);
        assert_eq!(
            decision_rule_action(0.7, ReportTime::At(0.3), 0.3, 0.0, &p).unwrap(),
            0.7
        );
        assert_eq!(
            decision_rule_action(0.7, ReportTime::At(0.3), 0.3, 2.0, &p).unwrap(),
            2.7
        );
        let a = decision_rule_action(1.0, ReportTime::At(0.0), 2.0, 0.5, &p).unwrap();
        assert!((a - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sampled_path_json() {
        let v = VariancePath::sampled(vec![0.0, 0.5], vec![1.0, 0.5]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"times":[0.0,0.5],"values":[1.0,0.5]}"#);
        let back: VariancePath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
