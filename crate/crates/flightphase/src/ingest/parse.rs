//! JSON and CSV report-export parsing against a minimal documented schema.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{IngestError, RawReport};

/// Supported export formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Field-name mapping from the export's schema to the four fields this tool
/// consumes. Export schemas vary between publishers and years, so the names
/// are configurable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMap {
    #[serde(default = "default_report_id")]
    pub report_id: String,
    #[serde(default = "default_narrative")]
    pub narrative: String,
    #[serde(default = "default_flight_phase")]
    pub flight_phase: String,
    #[serde(default = "default_complete")]
    pub complete: String,
}

fn default_report_id() -> String {
    "report_id".to_string()
}
fn default_narrative() -> String {
    "narrative".to_string()
}
fn default_flight_phase() -> String {
    "flight_phase".to_string()
}
fn default_complete() -> String {
    "complete".to_string()
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            report_id: default_report_id(),
            narrative: default_narrative(),
            flight_phase: default_flight_phase(),
            complete: default_complete(),
        }
    }
}

/// Parse a report export. Missing narrative/phase fields become empty
/// strings; a missing completion flag becomes `false`; input order is
/// preserved.
pub fn parse_report_file(
    bytes: &[u8],
    format: ReportFormat,
    fields: &FieldMap,
) -> Result<Vec<RawReport>, IngestError> {
    let reports = match format {
        ReportFormat::Json => parse_json(bytes, fields)?,
        ReportFormat::Csv => parse_csv(bytes, fields)?,
    };
    let mut seen = HashSet::with_capacity(reports.len());
    for report in &reports {
        if !seen.insert(report.report_id.as_str()) {
            return Err(IngestError::DuplicateId {
                id: report.report_id.clone(),
            });
        }
    }
    Ok(reports)
}

fn malformed(position: String, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedInput {
        position,
        reason: reason.into(),
    }
}

fn parse_json(bytes: &[u8], fields: &FieldMap) -> Result<Vec<RawReport>, IngestError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| malformed(format!("line {}", e.line()), e.to_string()))?;
    let array = value
        .as_array()
        .ok_or_else(|| malformed("document".to_string(), "expected a JSON array of objects"))?;

    let mut reports = Vec::with_capacity(array.len());
    for (i, item) in array.iter().enumerate() {
        let position = format!("record {i}");
        let obj = item
            .as_object()
            .ok_or_else(|| malformed(position.clone(), "expected an object"))?;

        let report_id = match obj.get(fields.report_id.as_str()) {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => return Err(malformed(position, "report id must be a string or number")),
            None => {
                return Err(malformed(
                    position,
                    format!("missing field {:?}", fields.report_id),
                ))
            }
        };

        let narrative = opt_string(obj.get(fields.narrative.as_str()), &position, "narrative")?;
        let flight_phase = opt_string(obj.get(fields.flight_phase.as_str()), &position, "phase")?;
        let investigation_complete = opt_bool(
            obj.get(fields.complete.as_str()),
            &position,
            "completion flag",
        )?;

        reports.push(RawReport {
            report_id,
            narrative,
            flight_phase,
            investigation_complete,
        });
    }
    Ok(reports)
}

fn opt_string(value: Option<&Value>, position: &str, what: &str) -> Result<String, IngestError> {
    match value {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(
            position.to_string(),
            format!("{what} must be a string"),
        )),
    }
}

fn opt_bool(value: Option<&Value>, position: &str, what: &str) -> Result<bool, IngestError> {
    match value {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) => Ok(parse_flag(s)),
        Some(_) => Err(malformed(
            position.to_string(),
            format!("{what} must be a boolean"),
        )),
    }
}

/// CSV completion flags in the wild: true/false, 1/0, yes/no. Anything else
/// (including blanks) reads as incomplete.
fn parse_flag(s: &str) -> bool {
    matches!(
        s.trim().to_lowercase().as_str(),
        "true" | "1" | "yes" | "y" | "t"
    )
}

fn parse_csv(bytes: &[u8], fields: &FieldMap) -> Result<Vec<RawReport>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| malformed("header".to_string(), e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);

    let id_col = column(&fields.report_id).ok_or_else(|| {
        malformed(
            "header".to_string(),
            format!("missing column {:?}", fields.report_id),
        )
    })?;
    let narrative_col = column(&fields.narrative);
    let phase_col = column(&fields.flight_phase);
    let complete_col = column(&fields.complete);

    let mut reports = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let position = format!("record {i}");
        let row = row.map_err(|e| malformed(position.clone(), e.to_string()))?;
        let report_id = row.get(id_col).unwrap_or("").to_string();
        if report_id.is_empty() {
            return Err(malformed(position, "empty report id"));
        }
        let field = |col: Option<usize>| col.and_then(|c| row.get(c)).unwrap_or("").to_string();
        reports.push(RawReport {
            report_id,
            narrative: field(narrative_col),
            flight_phase: field(phase_col),
            investigation_complete: parse_flag(&field(complete_col)),
        });
    }
    Ok(reports)
}
