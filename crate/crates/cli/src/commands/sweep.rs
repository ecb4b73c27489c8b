use persuasion_core::policy::Ordering;
use persuasion_core::{
    comparative_statics_report, solve_any, PolicySolution, ProcessParams, Regime,
};
use serde::Serialize;

use crate::config::{Axis, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, OutDir};

#[derive(Debug, Serialize)]
struct PairVerdict {
    from: f64,
    to: f64,
    bias: Ordering,
    variance: Ordering,
    expected_bias: Option<Ordering>,
    expected_variance: Option<Ordering>,
    /// Both solutions constrained with a slack initial variance.
    hypothesis_holds: bool,
    /// Observed directions agree with the predicted ones, allowing equality.
    monotone: bool,
    /// `ok`, `violation`, `outside_hypothesis` or `no_prediction`.
    verdict: &'static str,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    axis: Axis,
    values: Vec<f64>,
    regimes: Vec<Regime>,
    pairs: Vec<PairVerdict>,
    pass: bool,
}

/// Directions of `(b̂, v̂)` as the swept parameter increases.
fn expected(axis: Axis) -> (Option<Ordering>, Option<Ordering>) {
    use Ordering::*;
    match axis {
        Axis::Beta => (Some(Increasing), Some(Increasing)),
        Axis::Sigma => (Some(Increasing), Some(Decreasing)),
        Axis::R => (Some(Decreasing), None),
        Axis::Kappa => (Some(Increasing), None),
        Axis::Sigma0Sq => (None, None),
    }
}

fn set(axis: Axis, x: f64, p: &ProcessParams, beta: f64) -> (ProcessParams, f64) {
    let mut p = *p;
    let mut beta = beta;
    match axis {
        Axis::Beta => beta = x,
        Axis::Sigma => p.sigma = x,
        Axis::R => p.r = x,
        Axis::Kappa => p.kappa = x,
        Axis::Sigma0Sq => p.sigma0_sq = x,
    }
    (p, beta)
}

/// Agrees with a prediction when equal or in the predicted direction.
fn consistent(seen: Ordering, want: Option<Ordering>) -> bool {
    want.is_none_or(|w| seen == w || seen == Ordering::Equal)
}

fn label(t: f64) -> String {
    format!("{}", (t * 1e9).round() / 1e9)
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> Result<bool, CliError> {
    let spec = cfg.sweep();
    let values = spec.values()?;
    let (base, beta) = (cfg.params(), cfg.beta());
    let grid = if cfg.grid.step.is_none() && cfg.grid.end.is_none() {
        RunConfig {
            grid: crate::config::GridSpec {
                step: Some(0.05),
                end: Some(1.0),
            },
            ..RunConfig::default()
        }
        .grid(1.0)?
    } else {
        cfg.grid(1.0)?
    };
    let sols = values
        .iter()
        .map(|&x| {
            let (p, b) = set(spec.axis, x, &base, beta);
            solve_any(&p, b).map_err(CliError::from)
        })
        .collect::<Result<Vec<PolicySolution>, _>>()?;

    let mut cols = ["param", "regime", "T", "t0", "regime_change"]
        .map(String::from)
        .to_vec();
    cols.extend(grid.iter().map(|&t| format!("b@{}", label(t))));
    cols.extend(grid.iter().map(|&t| format!("v@{}", label(t))));
    let rows = values.iter().zip(&sols).enumerate().map(|(k, (&x, sol))| {
        let regime = serde_json::to_value(sol.regime)
            .ok()
            .and_then(|v| v.as_str().map(String::from));
        let mut row: Vec<Cell> = vec![
            x.into(),
            Cell::Text(regime.unwrap_or_default()),
            sol.full_disclosure_time.into(),
            sol.t0.into(),
            (k > 0 && sols[k - 1].regime != sol.regime).into(),
        ];
        row.extend(grid.iter().map(|&t| Cell::from(sol.eval_bias(t))));
        row.extend(grid.iter().map(|&t| Cell::from(sol.eval_variance(t))));
        row
    });
    out.csv("sweep.csv", &cols, rows)?;

    let (want_b, want_v) = expected(spec.axis);
    let pairs: Vec<PairVerdict> = values
        .windows(2)
        .zip(sols.windows(2))
        .map(|(x, s)| {
            let rep = comparative_statics_report(&s[0], &s[1], &grid);
            let monotone = consistent(rep.bias, want_b) && consistent(rep.variance, want_v);
            let verdict = if want_b.is_none() && want_v.is_none() {
                "no_prediction"
            } else if !rep.hypothesis_holds {
                "outside_hypothesis"
            } else if monotone {
                "ok"
            } else {
                "violation"
            };
            PairVerdict {
                from: x[0],
                to: x[1],
                bias: rep.bias,
                variance: rep.variance,
                expected_bias: want_b,
                expected_variance: want_v,
                hypothesis_holds: rep.hypothesis_holds,
                monotone,
                verdict,
            }
        })
        .collect();
    for p in pairs.iter().filter(|p| p.verdict == "violation") {
        eprintln!(
            "monotonicity fails between {} and {}: bias {:?}, variance {:?}",
            p.from, p.to, p.bias, p.variance
        );
    }
    let pass = pairs.iter().all(|p| p.verdict != "violation");
    let report = SweepReport {
        axis: spec.axis,
        values,
        regimes: sols.iter().map(|s| s.regime).collect(),
        pairs,
        pass,
    };
    out.json("sweep.json", &report)?;
    Ok(pass)
}
