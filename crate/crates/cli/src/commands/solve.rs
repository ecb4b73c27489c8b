use persuasion_core::{solve_any, solve_multidim, MultiDimSolution};

use super::{default_end, default_end_multi, MultiOutput};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{header, Cell, OutDir};

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> Result<bool, CliError> {
    let sol = solve_any(&cfg.params(), cfg.beta())?;
    log::info!(
        "regime {:?}, T = {:?}, t0 = {}",
        sol.regime,
        sol.full_disclosure_time,
        sol.t0
    );
    let grid = cfg.grid(default_end(&sol))?;
    out.json("solution.json", &sol)?;
    let rows = grid.iter().map(|&t| {
        vec![
            t.into(),
            sol.eval_bias(t).into(),
            sol.eval_variance(t).into(),
        ]
    });
    out.csv("solution.csv", &header(&["t", "b", "v"]), rows)?;
    Ok(true)
}

/// `(header, rows)` of `(t, ‖b‖, v_1, …, v_n)` with variances in input order.
pub fn multi_table(
    sol: &MultiDimSolution,
    permutation: &[usize],
    grid: &[f64],
) -> (Vec<String>, Vec<Vec<Cell>>) {
    let n = permutation.len();
    let mut cols = vec!["t".to_string(), "b_norm".to_string()];
    cols.extend((1..=n).map(|i| format!("v{i}")));
    let mut sorted_index = vec![0; n];
    for (k, &orig) in permutation.iter().enumerate() {
        sorted_index[orig] = k;
    }
    let rows = grid
        .iter()
        .map(|&t| {
            let mut row: Vec<Cell> = vec![t.into(), sol.bias_norm(t).into()];
            row.extend(sorted_index.iter().map(|&k| Cell::from(sol.variance(k, t))));
            row
        })
        .collect();
    (cols, rows)
}

pub fn run_multi(cfg: &RunConfig, out: &mut OutDir) -> Result<bool, CliError> {
    let raw = cfg.multi();
    let n = raw.kappa.len();
    if raw.sigma.len() != n || raw.sigma0_sq.len() != n || raw.beta.len() != n {
        return Err(CliError::Invalid(
            "multi: kappa, sigma, sigma0_sq and beta must have the same length".into(),
        ));
    }
    let (p, permutation) = raw.sorted();
    if permutation.iter().enumerate().any(|(k, &j)| k != j) {
        log::info!("components reordered by ascending kappa: {permutation:?}");
    }
    let solution = solve_multidim(&p)?;
    if solution.non_unique {
        log::warn!("tied persistence rates: only sums of tied variances are pinned down");
    }
    let grid = cfg.grid(default_end_multi(&solution))?;
    let (cols, rows) = multi_table(&solution, &permutation, &grid);
    out.json(
        "solution.json",
        &MultiOutput {
            solution,
            permutation,
        },
    )?;
    out.csv("solution.csv", &cols, rows)?;
    Ok(true)
}
