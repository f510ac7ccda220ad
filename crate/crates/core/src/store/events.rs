use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Edit,
    Execute,
    HintRequested,
    HintEmployed,
    FocusLost,
    FocusGained,
    Submit,
}

impl EventKind {
    pub fn needs_snapshot(self) -> bool {
        matches!(self, EventKind::Execute | EventKind::HintEmployed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub user: String,
    pub exercise_id: String,
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_snapshot: Option<String>,
    /// Position in the log, assigned on append.
    #[serde(default)]
    pub seq: u64,
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("{0:?} event without a query snapshot")]
    MissingSnapshot(EventKind),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
}

/// Append-only event log.
pub struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
    next_seq: u64,
}

impl EventLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<EventLog, EventError> {
        let path = path.into();
        let io = |source| EventError::Io {
            path: path.clone(),
            source,
        };
        let next_seq = if path.exists() {
            read_events(&path)?.iter().map(|e| e.seq + 1).max().unwrap_or(0)
        } else {
            0
        };
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(EventLog {
            path,
            out: BufWriter::new(file),
            next_seq,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes `e` with the next sequence number and returns the stored copy.
    pub fn append(&mut self, mut e: ActionEvent) -> Result<ActionEvent, EventError> {
        if e.kind.needs_snapshot() && e.query_snapshot.is_none() {
            return Err(EventError::MissingSnapshot(e.kind));
        }
        e.seq = self.next_seq;
        let line = serde_json::to_string(&e).expect("event serializes");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|source| EventError::Io {
                path: self.path.clone(),
                source,
            })?;
        self.next_seq += 1;
        Ok(e)
    }
}

/// Reads a log, ordered by timestamp and then by sequence number.
pub fn read_events(path: &Path) -> Result<Vec<ActionEvent>, EventError> {
    let file = File::open(path).map_err(|source| EventError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EventError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let e: ActionEvent = serde_json::from_str(&line).map_err(|err| EventError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: err.to_string(),
        })?;
        out.push(e);
    }
    out.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.seq.cmp(&b.seq)));
    Ok(out)
}
