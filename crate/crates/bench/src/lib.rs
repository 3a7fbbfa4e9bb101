//! Shared fixtures for the benchmarks.

use sigma_he::{parse_case, CaseFormat, NetworkCase};

pub const IEEE14: &str = include_str!("../../../cases/ieee14.m");
pub const TWO_BUS: &str = include_str!("../../../cases/two_bus.m");

pub fn ieee14() -> NetworkCase {
    parse_case(IEEE14, CaseFormat::Matpower).expect("shipped case")
}

pub fn two_bus() -> NetworkCase {
    parse_case(TWO_BUS, CaseFormat::Matpower).expect("shipped case")
}
