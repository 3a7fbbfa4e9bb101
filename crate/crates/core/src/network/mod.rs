//! Network cases: parsing, validation and admittance-matrix assembly.

mod case;
pub mod json;
pub mod matpower;
mod ybus;

use std::path::Path;

pub use case::{Branch, Bus, BusId, BusType, Clamp, GenTotals, Generator, NetworkCase, QLimit};
pub use ybus::{build_ybus, AdmittanceMatrix};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseFormat {
    Matpower,
    Json,
}

impl CaseFormat {
    /// `.m` is MATPOWER text, `.json` the native schema.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "m" => Some(CaseFormat::Matpower),
            "json" => Some(CaseFormat::Json),
            _ => None,
        }
    }
}

pub fn parse_case(text: &str, format: CaseFormat) -> Result<NetworkCase> {
    let (case, warnings) = parse_case_with_warnings(text, format)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(case)
}

pub fn parse_case_with_warnings(
    text: &str,
    format: CaseFormat,
) -> Result<(NetworkCase, Vec<String>)> {
    match format {
        CaseFormat::Matpower => matpower::parse(text),
        CaseFormat::Json => Ok((json::parse(text)?, Vec::new())),
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase> {
    let path = path.as_ref();
    let format = CaseFormat::from_path(path).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "cannot infer case format of {} (expected .m or .json)",
            path.display()
        ))
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_case(&text, format)
}
