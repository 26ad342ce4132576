//! Contextuality-by-Default analysis of CHSH-type systems of ±1 observables.
//!
//! A [`CyclicSystem`] holds the joint tables of the four contexts
//! `(a_i, b_j)`. From it the crate computes the signaling measure `Δ₀`, the
//! CHSH measure `Δ_CHSH`, and, by linear programming over couplings of the
//! eight context-indexed variables, the minimal mismatch `Δ_min`.

pub mod coupling;
pub mod error;
pub mod generators;
pub mod ingest;
pub mod measures;
pub mod report;
pub mod simplex;
pub mod types;
pub mod verify;

pub use coupling::{
    build_coupling_lp, jpd_feasibility, minimize_mismatch, optimal_coupling, Coupling, JpdResult,
    MismatchSolution,
};
pub use error::{Error, Result};
pub use generators::{generate, GeneratorSpec};
pub use ingest::{accumulate, bootstrap_resample, normalize, CountTable, TrialRecord};
pub use measures::{
    bdk_check, chsh_profile, closed_form_delta_min, genuine_contextuality, marginal_consistency,
    signaling_profile, ChshProfile, SignalingProfile,
};
pub use report::{run_analysis, AnalysisOptions, AnalysisReport};
pub use simplex::{simplex_solve, LinearProgram, LpSolution, LpStatus};
pub use types::{
    joint_from_stats, pair_stats, ContextLabel, CyclicSystem, Outcome, PairJoint, PairStats,
};
