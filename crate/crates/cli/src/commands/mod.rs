pub mod figure;
pub mod simulate;
pub mod solve;
pub mod sweep;
pub mod two_period;
pub mod verify;

use std::path::Path;

use persuasion_core::policy::Regime;
use persuasion_core::{MultiDimSolution, PolicySolution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Multidimensional solution as written by `solve-multi`: components in
/// ascending κ, with `permutation[k]` the input index of component `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiOutput {
    #[serde(flatten)]
    pub solution: MultiDimSolution,
    pub permutation: Vec<usize>,
}

pub enum SolutionFile {
    Policy(PolicySolution),
    Multi(MultiOutput),
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Invalid(format!("{}: {e}", path.display()));
    if value.get("i0").is_some() {
        let multi: MultiOutput = serde_json::from_value(value).map_err(bad)?;
        multi.solution.params.validate()?;
        Ok(SolutionFile::Multi(multi))
    } else {
        let sol: PolicySolution = serde_json::from_value(value).map_err(bad)?;
        sol.validate()?;
        Ok(SolutionFile::Policy(sol))
    }
}

/// Default end of the output grid: one time unit past full disclosure.
pub fn default_end(sol: &PolicySolution) -> f64 {
    match sol.regime {
        Regime::DeterministicState => 5.0 / sol.params.price(),
        _ => sol.full_disclosure_time.unwrap_or(0.0) + 1.0,
    }
}

pub fn default_end_multi(sol: &MultiDimSolution) -> f64 {
    sol.times.last().copied().unwrap_or(0.0) + 1.0
}
