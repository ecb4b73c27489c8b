use std::io::Write;
use std::path::Path;

use persuasion_core::obedience::PathPair;
use persuasion_core::{
    is_bayes_plausible, ode_residual, solve_any, verify_obedience, Error, GridPath, PolicySolution,
    ProcessParams, Regime, VariancePath,
};
use serde::Serialize;

use super::{default_end, default_end_multi, read_solution, SolutionFile};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{to_json, OutDir};

#[derive(Debug, Serialize)]
struct ObedienceCheck {
    max_excess: f64,
    argmax_t: f64,
    /// Largest allowance added to `tol` for sampled input.
    max_allowance: f64,
    /// First time at which the excess breaks `tol` plus its allowance.
    failed_at: Option<f64>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct ResidualCheck {
    max_abs: f64,
    at_t: f64,
    points: usize,
    max_allowance: f64,
    failed_at: Option<f64>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct PlausibilityCheck {
    component: usize,
    plausible: bool,
    /// First violated constraint: `(kind, t, s, excess)`.
    first_violation: Option<(String, f64, f64, f64)>,
}

#[derive(Debug, Serialize)]
struct Report {
    source: String,
    tol: f64,
    obedience: ObedienceCheck,
    ode_residual: Option<ResidualCheck>,
    plausibility: Vec<PlausibilityCheck>,
    pass: bool,
}

/// A path to verify, with per-time allowances for sampling error.
struct Subject {
    source: String,
    path: Box<dyn PathPair>,
    /// Path used for the residual check when it differs from `path`.
    residual_path: Option<Box<dyn PathPair>>,
    components: Vec<ProcessParams>,
    grid: Vec<f64>,
    /// Whether the binding equation should hold on binding points.
    check_ode: bool,
    obedience_allowance: Vec<f64>,
    /// `(t, fd step, allowance)` for the residual check; `None` means every
    /// grid point with the default step and no allowance.
    residual_points: Option<Vec<(f64, f64, f64)>>,
}

pub fn run(cfg: &RunConfig, input: Option<&Path>, out: &mut OutDir) -> Result<bool, CliError> {
    let tol = cfg.tol()?;
    let subject = match input {
        None => policy_subject(cfg, solve_any(&cfg.params(), cfg.beta())?, "config".into())?,
        Some(path)
            if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv")) =>
        {
            csv_subject(cfg, path)?
        }
        Some(path) => {
            let source = path.display().to_string();
            match read_solution(path)? {
                SolutionFile::Policy(sol) => policy_subject(cfg, sol, source)?,
                SolutionFile::Multi(m) => {
                    let sol = m.solution;
                    let grid = cfg.grid(default_end_multi(&sol))?;
                    let components = sol.params.components();
                    let n = grid.len();
                    Subject {
                        source,
                        check_ode: sol.regime != Regime::FirstBest,
                        path: Box::new(sol),
                        residual_path: None,
                        components,
                        grid,
                        obedience_allowance: vec![0.0; n],
                        residual_points: None,
                    }
                }
            }
        }
    };
    let report = check(&subject, tol)?;
    out.json("verify.json", &report)?;
    let _ = writeln!(std::io::stdout(), "{}", to_json(&report)?);
    if let Some(t) = report.obedience.failed_at {
        eprintln!(
            "obedience fails at t = {t} (largest excess {:e})",
            report.obedience.max_excess
        );
    }
    if let Some(t) = report.ode_residual.as_ref().and_then(|r| r.failed_at) {
        eprintln!("binding equation fails at t = {t}");
    }
    for p in &report.plausibility {
        if let Some((kind, t, s, excess)) = &p.first_violation {
            let at = if t == s {
                format!("at t = {t}")
            } else {
                format!("between t = {t} and t = {s}")
            };
            eprintln!(
                "component {}: {kind} violated {at}: excess {excess:e}",
                p.component + 1
            );
        }
    }
    Ok(report.pass)
}

fn policy_subject(
    cfg: &RunConfig,
    sol: PolicySolution,
    source: String,
) -> Result<Subject, CliError> {
    let grid = cfg.grid(default_end(&sol))?;
    let n = grid.len();
    Ok(Subject {
        source,
        check_ode: sol.regime != Regime::FirstBest,
        components: vec![sol.params],
        path: Box::new(sol),
        residual_path: None,
        grid,
        obedience_allowance: vec![0.0; n],
        residual_points: None,
    })
}

fn csv_subject(cfg: &RunConfig, path: &Path) -> Result<Subject, CliError> {
    let bad = |msg: String| CliError::Invalid(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let m = headers.len().saturating_sub(2);
    let shape_ok = m >= 1
        && headers[0] == "t"
        && (headers[1] == "b" || headers[1] == "b_norm")
        && (headers[2..] == ["v".to_string()]
            || headers[2..]
                .iter()
                .enumerate()
                .all(|(i, h)| *h == format!("v{}", i + 1)));
    if !shape_ok {
        return Err(bad(format!(
            "expected columns t, b, v or t, b_norm, v1..vn; got {headers:?}"
        )));
    }
    let mut times = Vec::new();
    let mut bias = Vec::new();
    let mut variances = vec![Vec::new(); m];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let mut cells = record.iter().map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", line + 2)))
        });
        times.push(cells.next().unwrap()?);
        bias.push(cells.next().unwrap()?);
        for v in variances.iter_mut() {
            v.push(cells.next().unwrap()?);
        }
    }
    if times.len() < 4 {
        return Err(bad("need at least four rows".into()));
    }
    let components = if m == 1 {
        vec![cfg.params()]
    } else {
        let multi = cfg.multi();
        if multi.n() != m {
            return Err(bad(format!(
                "{m} variance columns but the configuration has {} components",
                multi.n()
            )));
        }
        let (sorted, permutation) = multi.sorted();
        sorted.validate()?;
        let mut components = sorted.components();
        for (k, c) in sorted.components().into_iter().enumerate() {
            components[permutation[k]] = c;
        }
        components
    };
    let r = components[0].r;
    let total: Vec<f64> = (0..times.len())
        .map(|k| bias[k].powi(2) + variances.iter().map(|v| v[k]).sum::<f64>())
        .collect();
    let obedience_allowance = interpolation_allowance(&times, &total, r);
    let residual_points = residual_points(&times, &variances);
    let gp = GridPath::new(times.clone(), bias, variances)?;
    Ok(Subject {
        source: path.display().to_string(),
        path: Box::new(gp.clone()),
        residual_path: Some(Box::new(Unkinked(gp))),
        components,
        grid: times,
        check_ode: true,
        obedience_allowance,
        residual_points: Some(residual_points),
    })
}

/// Sampled paths whose interpolation kinks are ignored, so the residual can
/// be differenced across samples.
struct Unkinked(GridPath);

impl PathPair for Unkinked {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn bias(&self, t: f64) -> f64 {
        self.0.bias(t)
    }
    fn variance(&self, i: usize, t: f64) -> f64 {
        self.0.variance(i, t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn stationary_after(&self) -> Option<f64> {
        self.0.stationary_after()
    }
}

fn second_derivative(ts: &[f64], ys: &[f64], k: usize) -> f64 {
    let (hl, hr) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
    2.0 * ((ys[k + 1] - ys[k]) / hr - (ys[k] - ys[k - 1]) / hl) / (hl + hr)
}

/// Discounted bound on the linear-interpolation error of the continuation
/// loss from each sample on: `Σ_{k≥j} r e^{−r(t_k−t_j)} h_k³ |f″_k| / 8`,
/// doubled.
fn interpolation_allowance(ts: &[f64], f: &[f64], r: f64) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for j in (0..n).rev() {
        if j + 1 < n {
            acc *= (-r * (ts[j + 1] - ts[j])).exp();
        }
        if j > 0 && j + 1 < n {
            let h = (ts[j + 1] - ts[j]).max(ts[j] - ts[j - 1]);
            acc += r * h.powi(3) * second_derivative(ts, f, j).abs() / 8.0;
        }
        out[j] = 2.0 * acc;
    }
    out
}

/// Interior samples with the smaller neighbouring gap as difference step and
/// `max |Δ³v| / (6h)` over nearby third differences as allowance, summed
/// over components and doubled.
fn residual_points(ts: &[f64], variances: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    let n = ts.len();
    (1..n - 1)
        .map(|k| {
            let h = (ts[k] - ts[k - 1]).min(ts[k + 1] - ts[k]);
            let third =
                |v: &[f64], j: usize| (v[j + 2] - 3.0 * v[j + 1] + 3.0 * v[j] - v[j - 1]).abs();
            let allowance: f64 = variances
                .iter()
                .map(|v| {
                    let lo = k.saturating_sub(1).max(1);
                    let hi = (k + 1).min(n - 3);
                    (lo..=hi).map(|j| third(v, j)).fold(0.0, f64::max)
                })
                .sum::<f64>()
                / (6.0 * h);
            (ts[k], h, 2.0 * allowance)
        })
        .collect()
}

fn check(s: &Subject, tol: f64) -> Result<Report, CliError> {
    let obedience = verify_obedience(s.path.as_ref(), &s.components, &s.grid, tol)?;
    let mut binding = Vec::new();
    let mut failed_at = None;
    for (pt, &allow) in obedience.points.iter().zip(&s.obedience_allowance) {
        if pt.excess.abs() <= tol + allow {
            binding.push(pt.t);
        }
        if pt.excess > tol + allow && failed_at.is_none() {
            failed_at = Some(pt.t);
        }
    }
    let obedience = ObedienceCheck {
        max_excess: obedience.max_excess,
        argmax_t: obedience.argmax_t,
        max_allowance: s.obedience_allowance.iter().copied().fold(0.0, f64::max),
        failed_at,
        pass: failed_at.is_none(),
    };

    let ode_residual = if s.check_ode {
        let residual_path = s.residual_path.as_deref().unwrap_or(s.path.as_ref());
        let candidates: Vec<(f64, Option<f64>, f64)> = match &s.residual_points {
            None => binding.iter().map(|&t| (t, None, 0.0)).collect(),
            Some(points) => points
                .iter()
                .filter(|(t, _, _)| binding.binary_search_by(|b| b.total_cmp(t)).is_ok())
                .map(|&(t, h, a)| (t, Some(h), a))
                .collect(),
        };
        let mut largest: Option<(f64, f64)> = None;
        let mut failed_at = None;
        let mut max_allowance = 0.0f64;
        let mut points = 0;
        for (t, h, allow) in candidates {
            let res = match ode_residual(residual_path, &s.components, t, h) {
                Ok(res) => res.abs(),
                Err(Error::Domain(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            points += 1;
            max_allowance = max_allowance.max(allow);
            if largest.is_none_or(|l| res > l.0) {
                largest = Some((res, t));
            }
            if res > tol + allow && failed_at.is_none() {
                failed_at = Some(t);
            }
        }
        largest.map(|(max_abs, at_t)| ResidualCheck {
            max_abs,
            at_t,
            points,
            max_allowance,
            failed_at,
            pass: failed_at.is_none(),
        })
    } else {
        None
    };

    let plausibility = (0..s.components.len())
        .map(|i| {
            let values = s.grid.iter().map(|&t| s.path.variance(i, t)).collect();
            let vp = VariancePath::sampled(s.grid.clone(), values)?;
            let verdict = is_bayes_plausible(&vp, &s.components[i], &s.grid, tol)?;
            Ok(PlausibilityCheck {
                component: i,
                plausible: verdict.plausible,
                first_violation: verdict
                    .violations
                    .first()
                    .map(|v| (format!("{:?}", v.constraint), v.t, v.s, v.excess)),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let pass = obedience.pass
        && ode_residual.as_ref().is_none_or(|r| r.pass)
        && plausibility.iter().all(|p| p.plausible);
    Ok(Report {
        source: s.source.clone(),
        tol,
        obedience,
        ode_residual,
        plausibility,
        pass,
    })
}
