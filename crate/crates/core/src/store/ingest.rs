use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::Value as Json;
use thiserror::Error;

use super::{io_err, Store, StoreError};
use crate::ast::parse;
use crate::record::AttemptRecord;

const FIELDS: [&str; 6] = ["query_text", "score", "user", "schema", "exercise_id", "timestamp"];

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum RejectReason {
    #[error("not a JSON object: {0}")]
    Format(String),
    #[error("missing field {0}")]
    MissingField(String),
    #[error("field {field}: {message}")]
    BadField { field: String, message: String },
    #[error("score {0} is outside 0..=100")]
    InvalidScore(f64),
    #[error("query does not parse: {0}")]
    ParseError(String),
    #[error("unknown exercise {0}")]
    UnknownExercise(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the source.
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub duplicates: usize,
    pub rejected: Vec<Rejection>,
}

fn text_field(obj: &serde_json::Map<String, Json>, field: &str) -> Result<String, RejectReason> {
    match &obj[field] {
        Json::String(s) => Ok(s.clone()),
        other => Err(RejectReason::BadField {
            field: field.into(),
            message: format!("expected a string, found {other}"),
        }),
    }
}

fn record(line: &str) -> Result<AttemptRecord, RejectReason> {
    let json: Json = serde_json::from_str(line).map_err(|e| RejectReason::Format(e.to_string()))?;
    let Json::Object(obj) = json else {
        return Err(RejectReason::Format("expected an object".into()));
    };
    if let Some(f) = FIELDS.iter().find(|f| obj.get(**f).is_none_or(Json::is_null)) {
        return Err(RejectReason::MissingField(f.to_string()));
    }
    let score = obj["score"].as_f64().ok_or_else(|| RejectReason::BadField {
        field: "score".into(),
        message: "expected a number".into(),
    })?;
    if !(0.0..=100.0).contains(&score) {
        return Err(RejectReason::InvalidScore(score));
    }
    let stamp = text_field(&obj, "timestamp")?;
    let timestamp: DateTime<Utc> = stamp.parse().map_err(|e: chrono::ParseError| RejectReason::BadField {
        field: "timestamp".into(),
        message: e.to_string(),
    })?;
    let query_text = text_field(&obj, "query_text")?;
    match parse(&query_text) {
        Ok(t) if t.is_complete() => {}
        Ok(_) => return Err(RejectReason::ParseError("query is incomplete".into())),
        Err(e) => return Err(RejectReason::ParseError(e.to_string())),
    }
    Ok(AttemptRecord {
        query_text,
        score,
        user: text_field(&obj, "user")?,
        schema: text_field(&obj, "schema")?,
        exercise_id: text_field(&obj, "exercise_id")?,
        timestamp,
    })
}

impl Store {
    /// Validates and stores the attempts in a line-delimited JSON file.
    /// Bad lines are reported and skipped; identical records already in the
    /// store are counted as duplicates. With `rescore`, the stored score is
    /// replaced by the grade the executor gives today.
    pub fn ingest_attempts(&mut self, source: &Path, rescore: bool) -> Result<IngestReport, StoreError> {
        let text = fs::read_to_string(source).map_err(io_err(source))?;
        self.ingest_text(&text, rescore)
    }

    pub fn ingest_text(&mut self, text: &str, rescore: bool) -> Result<IngestReport, StoreError> {
        let mut report = IngestReport::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let checked = record(line).and_then(|mut a| match self.exercise(&a.exercise_id) {
                Ok(ex) => {
                    if rescore {
                        a.score = self.grade(ex, &a.query_text);
                    }
                    Ok(a)
                }
                Err(_) => Err(RejectReason::UnknownExercise(a.exercise_id)),
            });
            match checked {
                Ok(a) => {
                    if self.append_attempt(a)? {
                        report.accepted += 1;
                    } else {
                        report.duplicates += 1;
                    }
                }
                Err(reason) => report.rejected.push(Rejection { line: i + 1, reason }),
            }
        }
        Ok(report)
    }
}
