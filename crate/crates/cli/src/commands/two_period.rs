use persuasion_core::{
    brute_force_two_period, cap_grid, solve_two_period, uniform_grid, TwoPeriodParams,
    TwoPeriodSolution,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Debug, Serialize)]
struct Oracle {
    points: usize,
    b1: f64,
    v1: f64,
    /// Distance to the closed form in units of the local grid step.
    b_steps: f64,
    v_steps: f64,
    agrees: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    params: TwoPeriodParams,
    solution: TwoPeriodSolution,
    oracle: Oracle,
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> Result<bool, CliError> {
    let tp = cfg.two_period();
    let sol = solve_two_period(&tp)?;
    let n = cfg.oracle_points();
    if n < 2 {
        return Err(CliError::Invalid(format!(
            "oracle_points must be ≥ 2, got {n}"
        )));
    }
    // Uniform in v; in b the union of a uniform grid and the obedience cap of
    // every v row.
    let gv = uniform_grid(0.0, tp.sigma1_sq, n);
    let caps = cap_grid(&tp, &gv);
    let mut gb = uniform_grid(0.0, tp.beta, n);
    gb.extend(&caps);
    let (b1, v1) = brute_force_two_period(&tp, &gb, &gv)?;

    let hv = gv[1] - gv[0];
    let cap_at = |v: f64| tp.slack(0.0, v.clamp(0.0, tp.sigma1_sq)).max(0.0).sqrt();
    let hb = (tp.beta / (n - 1) as f64)
        .max((cap_at(sol.v1 + hv) - cap_at(sol.v1)).abs())
        .max((cap_at(sol.v1) - cap_at(sol.v1 - hv)).abs());
    let target_v = sol.v1.min(tp.sigma1_sq);
    let b_steps = (b1 - sol.b1).abs() / hb;
    let v_steps = if hv > 0.0 {
        (v1 - target_v).abs() / hv
    } else {
        0.0
    };
    let agrees = b_steps <= 1.0 + 1e-9 && v_steps <= 1.0 + 1e-9;
    if !agrees {
        eprintln!(
            "grid argmax ({b1}, {v1}) is more than one step from the closed form ({}, {})",
            sol.b1, sol.v1
        );
    }
    if sol.infeasible {
        log::warn!("closed-form v1 exceeds sigma1_sq; the grid optimum sits on the variance cap");
    }
    let report = Report {
        params: tp,
        solution: sol,
        oracle: Oracle {
            points: n,
            b1,
            v1,
            b_steps,
            v_steps,
            agrees,
        },
    };
    out.json("two_period.json", &report)?;
    Ok(agrees || sol.infeasible)
}
