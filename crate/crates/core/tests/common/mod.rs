#![allow(dead_code)]

use std::path::PathBuf;

use sigma_he::{load_case, NetworkCase};

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
}

pub fn case(name: &str) -> NetworkCase {
    load_case(case_path(name)).unwrap()
}

/// `(bus, vm, va_deg)` rows of the published solved IEEE 14-bus case.
pub fn published_ieee14() -> Vec<(usize, f64, f64)> {
    let text = std::fs::read_to_string(case_path("ieee14_solved.csv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("bus"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}
