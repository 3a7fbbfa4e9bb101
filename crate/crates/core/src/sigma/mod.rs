//! Per-bus channel index sigma, the parabolic boundary and collapse search.

mod channel;
mod critical;
mod trace;

pub use channel::{boundary_delta, sigma_coefficients, two_bus_voltage, virtual_impedance};
pub use critical::{
    assess, distance_to_boundary, find_critical_s, rank_weak_buses, sigma_radius,
    CriticalPoint, CriticalStatus, RankedBus, StabilityReport,
};
pub use trace::{
    bus_crossing, sample_bus, sample_grid, trace_trajectories, ChannelTrajectory, SigmaPoint,
    CRITICAL_SCAN_STEP,
};
