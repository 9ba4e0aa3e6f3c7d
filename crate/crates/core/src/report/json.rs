use serde_json::Value;

use super::AuditReport;
use crate::error::Result;

/// Canonical JSON: keys sorted at every level, two-space indentation,
/// shortest round-trip float formatting and a trailing newline.
pub fn render_json(r: &AuditReport) -> Vec<u8> {
    // Value's object map is ordered by key, which sorts struct fields too
    let value: Value = serde_json::to_value(r).expect("report fields are JSON-representable");
    let mut out = serde_json::to_vec_pretty(&value).expect("in-memory serialisation");
    out.push(b'\n');
    out
}

pub fn parse_json(bytes: &[u8]) -> Result<AuditReport> {
    Ok(serde_json::from_slice(bytes)?)
}
