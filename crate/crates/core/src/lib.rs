//! Non-myopic multi-objective Bayesian optimization.
//!
//! The crate scores candidate inputs by expected hypervolume improvement
//! (EHVI) and extends that myopic score with a planned lookahead horizon.
//! Three lookahead acquisition functions are provided:
//!
//! * **NMMO-Nested**: EHVI plus the best lookahead batch found by greedy
//!   search over a fixed Sobol grid, scored under a fantasy model.
//! * **NMMO-Joint**: EHVI plus a lookahead batch that is optimized jointly
//!   with the candidate itself.
//! * **BINOM**: the whole horizon is scored as one batch (batch EHVI) and the
//!   member with the highest single-point EHVI is evaluated next.
//!
//! Objectives are handled internally in the maximization convention.
//!
//! Module map:
//!
//! * [`pareto`]: dominance, fronts, exact hypervolume and its improvement.
//! * [`surrogate`]: Matérn 5/2 ARD Gaussian processes, fitting, fantasies.
//! * [`acquisition`]: EHVI, batch EHVI and the lookahead acquisitions.
//! * [`optimizer`]: Sobol candidates and derivative-free maximization.
//! * [`benchmarks`]: analytic engineering test problems.
//! * [`engine`]: the sequential loop and an ask/tell interface.
//! * [`campaign`]: multi-seed campaigns and CSV output, used by the CLI.

pub mod acquisition;
pub mod benchmarks;
pub mod campaign;
pub mod engine;
pub mod optimizer;
pub mod pareto;
pub mod surrogate;

mod error;
mod seed;

pub use error::{Error, Result};
pub use seed::mix_seed;
