//! Holomorphic embedding of the load-scaled power-flow equations.
//!
//! The load scale `s` multiplies every load and every generator's real
//! output; shunts and line charging stay in the admittance matrix. Voltages
//! are carried as `V = V_sw + |V_sw|^2 M` with reciprocal `W = 1/V`, and the
//! per-order coefficients come from one constant real linear system.

mod embedding;
mod germ;
mod linear;
mod solution;
mod stages;

pub use germ::Germ;
pub use solution::{
    compute_germ, extend_series, solve, HeSolution, IdentityResiduals, DEFAULT_ORDER,
};
pub use stages::{
    solve_with_qlimits, HeOptions, Stage, StagePlan, StagedSolution, SwitchEvent,
};
