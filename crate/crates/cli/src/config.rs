//! Run configuration: defaults, then the JSON file, then command-line flags.

use std::path::Path;

use persuasion_core::{MultiParams, ProcessParams, SimConfig, TwoPeriodParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Output time grid. `end` defaults per command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub step: Option<f64>,
    pub end: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Beta,
    Sigma,
    R,
    Kappa,
    Sigma0Sq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    /// Zero means a single point at `from`.
    #[serde(default)]
    pub step: f64,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let finite = [self.from, self.to, self.step]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.step < 0.0 || self.to < self.from {
            return Err(CliError::Invalid(
                "sweep needs finite from ≤ to and step ≥ 0".into(),
            ));
        }
        if self.step == 0.0 || self.to == self.from {
            return Ok(vec![self.from]);
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.from + k as f64 * self.step).collect())
    }
}

/// Everything a command may read. Each block is optional in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Option<ProcessParams>,
    pub beta: Option<f64>,
    pub multi: Option<MultiParams>,
    pub two_period: Option<TwoPeriodParams>,
    #[serde(default)]
    pub grid: GridSpec,
    pub tol: Option<f64>,
    pub sim: Option<SimConfig>,
    pub sweep: Option<SweepSpec>,
    /// Points per axis of the two-period grid search.
    pub oracle_points: Option<usize>,
}

/// Values given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_step: Option<f64>,
    pub tol: Option<f64>,
    pub paths: Option<usize>,
}

pub const DEFAULT_GRID_STEP: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_ORACLE_POINTS: usize = 2001;

fn fig2_params() -> ProcessParams {
    ProcessParams {
        kappa: -0.5,
        sigma: 2.0,
        r: 3.0,
        mu0: 0.0,
        sigma0_sq: 2.0,
    }
}

fn fig5_params() -> MultiParams {
    MultiParams {
        kappa: vec![-0.75, -0.25, 0.25],
        sigma: vec![2.0; 3],
        sigma0_sq: vec![4.0, 100.0, 4.0],
        r: 3.0,
        beta: vec![3.0, 4.0, 0.0],
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.grid_step.is_some() {
            self.grid.step = o.grid_step;
        }
        if o.tol.is_some() {
            self.tol = o.tol;
        }
        if o.seed.is_some() || o.paths.is_some() {
            let sim = self.sim.get_or_insert_with(SimConfig::default);
            if let Some(seed) = o.seed {
                sim.base_seed = seed;
            }
            if let Some(n) = o.paths {
                sim.n_paths = n;
            }
        }
    }

    pub fn params(&self) -> ProcessParams {
        self.params.unwrap_or_else(fig2_params)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(3.0)
    }

    pub fn multi(&self) -> MultiParams {
        self.multi.clone().unwrap_or_else(fig5_params)
    }

    pub fn two_period(&self) -> TwoPeriodParams {
        self.two_period.unwrap_or(TwoPeriodParams {
            beta: 1.0,
            delta: 0.25,
            rho: 1.0,
            sigma: 0.2,
            sigma1_sq: 1.0,
        })
    }

    pub fn tol(&self) -> Result<f64, CliError> {
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Invalid(format!(
                "tol must be positive, got {tol}"
            )));
        }
        Ok(tol)
    }

    pub fn sim(&self) -> SimConfig {
        self.sim.clone().unwrap_or_default()
    }

    pub fn sweep(&self) -> SweepSpec {
        self.sweep.unwrap_or(SweepSpec {
            axis: Axis::Beta,
            from: 1.5,
            to: 4.0,
            step: 0.5,
        })
    }

    pub fn oracle_points(&self) -> usize {
        self.oracle_points.unwrap_or(DEFAULT_ORACLE_POINTS)
    }

    /// `0, step, 2·step, …` up to `end` (from the config or `default_end`),
    /// always including `end`.
    pub fn grid(&self, default_end: f64) -> Result<Vec<f64>, CliError> {
        let step = self.grid.step.unwrap_or(DEFAULT_GRID_STEP);
        let end = self.grid.end.unwrap_or(default_end);
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Invalid(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if !(end >= 0.0 && end.is_finite()) {
            return Err(CliError::Invalid(format!(
                "grid end must be ≥ 0, got {end}"
            )));
        }
        let n = (end / step + 1e-9).floor() as usize;
        if n > 10_000_000 {
            return Err(CliError::Invalid(format!(
                "grid with {n} points is too large"
            )));
        }
        let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        if end - ts[n] > 1e-12 * end.max(1.0) {
            ts.push(end);
        }
        Ok(ts)
    }
}
