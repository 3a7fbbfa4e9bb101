//! Conventional polar Newton-Raphson power flow and a natural-parameter
//! continuation used as an independent reference for the embedding.

mod continuation;
mod newton;

pub use continuation::{continuation_nose, NoseOptions, NoseResult, NoseStatus, OracleSwitch};
pub use newton::{newton_solve, power_mismatch, solve_from, PfSolution, PowerFlowProblem};
