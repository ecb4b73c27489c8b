use std::path::Path;

use persuasion_core::{build_reporting_function, simulate_policy, solve_any, Error, VariancePath};

use super::{read_solution, SolutionFile};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{header, Cell, OutDir};

pub fn run(cfg: &RunConfig, solution: Option<&Path>, out: &mut OutDir) -> Result<bool, CliError> {
    let sol = match solution {
        None => solve_any(&cfg.params(), cfg.beta())?,
        Some(path) => match read_solution(path)? {
            SolutionFile::Policy(sol) => sol,
            SolutionFile::Multi(_) => {
                return Err(CliError::Invalid(
                    "simulate takes a one-dimensional solution".into(),
                ))
            }
        },
    };
    let sim = cfg.sim();
    let phi = build_reporting_function(&VariancePath::from_policy(&sol), &sol.params).map_err(
        |e| match e {
            Error::NotPlausible { .. } => {
                CliError::Failed(format!("no reporting function implements this policy: {e}"))
            }
            e => e.into(),
        },
    )?;
    let res = simulate_policy(&sol, &phi, &sim)?;
    out.json("simulation.json", &res)?;
    let rows = res.deviation_tests.iter().map(|d| {
        vec![
            d.t_dev.into(),
            d.deviation.mean.into(),
            d.deviation.se.into(),
            d.follow.mean.into(),
            d.follow.se.into(),
            d.difference.mean.into(),
            d.difference.se.into(),
            d.reservation_loss.into(),
            d.analytic_follow.into(),
            d.passes.map_or(Cell::Empty, Cell::from),
        ]
    });
    let cols = header(&[
        "t_dev",
        "deviation",
        "deviation_se",
        "follow",
        "follow_se",
        "difference",
        "difference_se",
        "reservation_loss",
        "analytic_follow",
        "passes",
    ]);
    out.csv("deviations.csv", &cols, rows)?;
    log::info!(
        "sender loss {:?} (analytic {}), receiver loss {:?} (analytic {})",
        res.sender_loss,
        res.analytic_sender_loss,
        res.receiver_loss,
        res.analytic_receiver_loss
    );
    if res.n_paths == 1 {
        log::warn!("one path: standard errors and deviation verdicts are unavailable");
    }
    for d in res
        .deviation_tests
        .iter()
        .filter(|d| d.passes == Some(false))
    {
        eprintln!(
            "profitable deviation at t = {}: deviation − follow = {:e} (se {:e})",
            d.t_dev,
            d.difference.mean,
            d.difference.se.unwrap_or(f64::NAN)
        );
    }
    Ok(res.no_profitable_deviation())
}
