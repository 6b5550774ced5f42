//! Power and receive-scaling control for over-the-air federated gradient
//! aggregation that doubles as a radar sensing waveform.
//!
//! Devices transmit analog gradients over a shared multiple-access channel;
//! the base station also uses the aggregate as an illumination signal and
//! must collect enough echo energy to detect a target. The crate provides
//! the channel and sensing model, the exact active-set solver, an
//! independent numerical oracle, baseline policies and a Monte-Carlo and
//! toy federated-learning harness.

pub mod baselines;
pub mod error;
pub mod fl;
pub mod io;
pub mod oracle;
pub mod problem;
pub mod qfunc;
pub mod scenario;
pub mod sensing;
pub mod sim;
pub mod solver;

pub use baselines::{solve_greedy_sp, solve_no_sensing_baseline, solve_zf, Policy};
pub use error::{Error, Result};
pub use fl::{run_toy_fl, ChannelSetup, FlConfig, FlPolicy, FlRound, Heterogeneity};
pub use oracle::{solve_oracle, OracleConfig};
pub use problem::{
    classify_feasibility, gap_bound, kkt_residuals, mse_ota, objective_p2, solve_boundary_equality,
    solve_no_sensing, GapBoundParams, KktReport,
};
pub use scenario::{Feasibility, FeasibilityClass, Scenario, Solution, Status, MEMBERSHIP_TOL};
pub use sim::{normalize_gradients, simulate_round, RoundStats};
pub use solver::{solve, solve_with, CandidateIndex, SolveReport, SolverOptions, TraceRow};
pub use sensing::{
    build_scenario, compute_eta_d, dbm_to_watts, detection_probability, rayleigh_fading, sample_feasible_layout,
    two_group_layout, Geometry, PathLoss, RadioConfig, RandomLayoutConfig, SensingConfig,
};
