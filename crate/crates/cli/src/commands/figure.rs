use persuasion_core::{
    build_reporting_function, solve, solve_any, solve_multidim, MultiParams, ProcessParams,
    ReportTime, ReportingCase, VariancePath,
};
use serde_json::json;

use super::solve::multi_table;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{header, Cell, OutDir};

const NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

fn base(sigma0_sq: f64) -> ProcessParams {
    ProcessParams {
        kappa: -0.5,
        sigma: 2.0,
        r: 3.0,
        mu0: 0.0,
        sigma0_sq,
    }
}

pub fn run(cfg: &RunConfig, name: &str, out: &mut OutDir) -> Result<bool, CliError> {
    let names: Vec<&str> = match name {
        "all" => NAMES.to_vec(),
        n if NAMES.contains(&n) => vec![n],
        n => {
            return Err(CliError::Invalid(format!(
                "unknown figure {n:?}; expected one of {NAMES:?} or all"
            )))
        }
    };
    for n in names {
        match n {
            "fig2" => policy(cfg, out)?,
            "fig3" => reporting(cfg, out)?,
            "fig4" => deterministic_limit(cfg, out)?,
            _ => multidim(cfg, out)?,
        }
    }
    Ok(true)
}

/// Optimal bias and variance with a slack (σ₀² = 100) and a binding
/// (σ₀² = 2) initial variance.
fn policy(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let slack = solve(&base(100.0), 3.0)?;
    let binding = solve(&base(2.0), 3.0)?;
    let grid = cfg.grid(0.35)?;
    let rows = grid.iter().map(|&t| {
        vec![
            t.into(),
            slack.eval_bias(t).into(),
            slack.eval_variance(t).into(),
            binding.eval_bias(t).into(),
            binding.eval_variance(t).into(),
        ]
    });
    out.csv(
        "fig2.csv",
        &header(&["t", "b", "v", "b_binding", "v_binding"]),
        rows,
    )?;
    out.json(
        "fig2.json",
        &json!({
            "params": slack.params,
            "binding_sigma0_sq": 2.0,
            "beta": 3.0,
            "T": slack.full_disclosure_time,
            "t0": binding.t0,
            "stationary_bias": slack.stationary_bias,
        }),
    )
}

/// Reporting function for σ₀² = 100; `phi` is empty where nothing is reported.
fn reporting(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let sol = solve(&base(100.0), 3.0)?;
    let phi = build_reporting_function(&VariancePath::from_policy(&sol), &sol.params)?;
    let grid = cfg.grid(0.35)?;
    let case_name = |c: ReportingCase| {
        serde_json::to_value(c)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
    };
    let rows = grid.iter().map(|&t| {
        let value = match phi.phi(t) {
            ReportTime::NegInfinity => Cell::Empty,
            ReportTime::At(x) => x.into(),
        };
        vec![
            t.into(),
            value,
            Cell::Text(case_name(phi.case_at(t)).unwrap_or_default()),
        ]
    });
    out.csv("fig3.csv", &header(&["t", "phi", "case"]), rows)?;
    let zero_crossing = phi
        .pieces
        .iter()
        .find(|p| p.case == ReportingCase::Delayed)
        .map(|p| p.start);
    out.json(
        "fig3.json",
        &json!({
            "params": sol.params,
            "beta": 3.0,
            "T": sol.full_disclosure_time,
            "pieces": phi.pieces,
            "zero_crossing": zero_crossing,
        }),
    )
}

/// Policies as the state noise vanishes, with σ₀² = 1.
fn deterministic_limit(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let sigmas = [0.1, 0.01, 0.0];
    let sols = sigmas
        .iter()
        .map(|&sigma| solve_any(&ProcessParams { sigma, ..base(1.0) }, 3.0))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = cfg.grid(2.0)?;
    let mut cols = vec!["t".to_string()];
    for s in sigmas {
        cols.push(format!("b_sigma_{s}"));
        cols.push(format!("v_sigma_{s}"));
    }
    let rows = grid.iter().map(|&t| {
        let mut row: Vec<Cell> = vec![t.into()];
        for sol in &sols {
            row.push(sol.eval_bias(t).into());
            row.push(sol.eval_variance(t).into());
        }
        row
    });
    out.csv("fig4.csv", &cols, rows)?;
    let meta: Vec<_> = sigmas
        .iter()
        .zip(&sols)
        .map(|(s, sol)| {
            json!({
                "sigma": s,
                "regime": sol.regime,
                "T": sol.full_disclosure_time,
                "t0": sol.t0,
                "initial_bias": sol.initial_bias,
            })
        })
        .collect();
    out.json(
        "fig4.json",
        &json!({ "base": base(1.0), "beta": 3.0, "solutions": meta }),
    )
}

/// Three components with ‖β‖ = 5.
fn multidim(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = MultiParams {
        kappa: vec![-0.75, -0.25, 0.25],
        sigma: vec![2.0; 3],
        sigma0_sq: vec![4.0, 100.0, 4.0],
        r: 3.0,
        beta: vec![3.0, 4.0, 0.0],
    };
    let sol = solve_multidim(&p)?;
    let grid = cfg.grid(0.55)?;
    let (cols, rows) = multi_table(&sol, &[0, 1, 2], &grid);
    out.csv("fig5.csv", &cols, rows)?;
    out.json(
        "fig5.json",
        &json!({
            "params": p,
            "i0": sol.i0,
            "times": sol.times,
            "sigma_hat": sol.sigma_hat,
        }),
    )
}
