//! Optimal dynamic persuasion of a receiver tracking a Gaussian
//! Ornstein–Uhlenbeck state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod math;
pub mod multidim;
pub mod obedience;
pub mod plausibility;
pub mod policy;
pub mod simulation;
pub mod state_process;
pub mod two_period;

pub use error::{Error, Result};
pub use multidim::{
    eval_multi, shoot, sigma_hat, solve_multidim, MultiDimSolution, MultiParams, ShootResult,
};
pub use obedience::{
    continuation_loss, ode_residual, reservation_loss, sender_continuation_loss, sender_loss,
    verify_obedience, FnPath, GridPath, ObedienceReport, PathPair,
};
pub use plausibility::{
    build_reporting_function, decision_rule_action, induced_variance, is_bayes_plausible,
    PlausibilityVerdict, ReportingCase, ReportingFunction, VariancePath,
};
pub use policy::{
    comparative_statics_report, pareto_point, solve, solve_any, solve_deterministic,
    PolicySolution, Regime, StaticsReport,
};
pub use simulation::{
    simulate_deviation, simulate_policy, trace_path, DeviationTest, Estimate, SimConfig, SimResult,
};
pub use state_process::{
    conditional_mean, eta, posterior_given_report, sample_path, sample_prehistory, ProcessParams,
    ReportTime, StatePath,
};
pub use two_period::{
    aligned_grid, brute_force_two_period, cap_grid, solve_two_period, uniform_grid, TwoPeriodCase,
    TwoPeriodParams, TwoPeriodSolution,
};
