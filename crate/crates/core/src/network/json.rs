//! Native JSON case format. Values are stored per-unit and angles in
//! radians, so a parse/serialize round trip is lossless. Unbounded reactive
//! limits are written as `null`. The schema lives in `case.schema.json`.

use super::case::NetworkCase;
use crate::error::{Error, Result};

pub fn parse(text: &str) -> Result<NetworkCase> {
    let case: NetworkCase = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    case.validate()?;
    Ok(case)
}

pub fn to_string(case: &NetworkCase) -> String {
    serde_json::to_string_pretty(case).expect("case serializes")
}
