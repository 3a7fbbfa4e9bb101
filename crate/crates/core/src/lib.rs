//! Holomorphic-embedding power flow with per-bus two-bus equivalents.

pub mod error;
pub mod he;
pub mod network;
pub mod oracle;
pub mod series;
pub mod sigma;

pub use error::{Error, Result};
pub use network::{
    build_ybus, load_case, parse_case, AdmittanceMatrix, Branch, Bus, BusId, BusType, CaseFormat,
    Clamp, Generator, NetworkCase, QLimit,
};
pub use series::{ComplexPowerSeries, EvalMethod, Evaluation, Radius};
