//! File-backed exercise store.
//!
//! A store is a directory:
//!
//! ```text
//! schemas/<name>.json      Schema JSON
//! exercises/<id>.json      ExerciseBundle JSON
//! attempts.jsonl           one AttemptRecord per line
//! events.jsonl             one ActionEvent per line
//! ```

mod cache;
mod events;
mod ingest;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ast::{parse, QueryTree};
use crate::exec::{execute, score, EvaluationRule, ResultMatrix, Schema, SchemaError};
use crate::record::AttemptRecord;

pub use cache::MdpCache;
pub use events::{read_events, ActionEvent, EventError, EventKind, EventLog};
pub use ingest::{IngestReport, RejectReason, Rejection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Difficult,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Difficult => "difficult",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseBundle {
    pub id: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub schema: String,
    #[serde(default)]
    pub schema_image: String,
    pub ideal_solutions: Vec<String>,
    #[serde(default)]
    pub evaluation_rule: EvaluationRule,
}

/// A bundle checked against its schema, with the parsed ideals and the
/// ideal result every submission is graded against.
#[derive(Debug, Clone)]
pub struct Exercise {
    pub bundle: ExerciseBundle,
    pub ideals: Vec<QueryTree>,
    pub ideal_result: ResultMatrix,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("schema {name}: {source}")]
    Schema { name: String, source: SchemaError },
    #[error("exercise {exercise}: unknown schema {schema}")]
    UnknownSchema { exercise: String, schema: String },
    #[error("exercise {0} has no ideal solutions")]
    NoIdeals(String),
    #[error("exercise {exercise}: ideal solution {index} is invalid: {reason}")]
    BadIdeal { exercise: String, index: usize, reason: String },
    #[error("exercise {exercise}: ideal solution {index} scores {score} against the reference result")]
    IdealFailsSelfTest { exercise: String, index: usize, score: f64 },
    #[error("unknown exercise {0}")]
    UnknownExercise(String),
    #[error("duplicate exercise {0}")]
    DuplicateExercise(String),
    #[error("exercise {exercise}: cannot build graph: {reason}")]
    Build { exercise: String, reason: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a bundle and checks it against `schema`. The first ideal's result
/// is the reference; every ideal must run and reach the pass threshold
/// against it.
pub fn check_bundle(bundle: ExerciseBundle, schema: &Schema) -> Result<Exercise, StoreError> {
    if bundle.ideal_solutions.is_empty() {
        return Err(StoreError::NoIdeals(bundle.id));
    }
    let bad = |index: usize, reason: String| StoreError::BadIdeal {
        exercise: bundle.id.clone(),
        index,
        reason,
    };
    let mut ideals = Vec::new();
    let mut results = Vec::new();
    for (i, text) in bundle.ideal_solutions.iter().enumerate() {
        let tree = parse(text).map_err(|e| bad(i, e.to_string()))?;
        let result = execute(&tree, schema).map_err(|e| bad(i, e.to_string()))?;
        ideals.push(tree);
        results.push(result);
    }
    let rule = &bundle.evaluation_rule;
    for (index, r) in results.iter().enumerate() {
        let s = score(r, &results[0], rule);
        if !s.passes(rule) {
            return Err(StoreError::IdealFailsSelfTest {
                exercise: bundle.id.clone(),
                index,
                score: s.percent,
            });
        }
    }
    let ideal_result = results.swap_remove(0);
    Ok(Exercise {
        bundle,
        ideals,
        ideal_result,
    })
}

pub fn load_exercise_bundle(path: &Path, schemas: &BTreeMap<String, Schema>) -> Result<Exercise, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bundle: ExerciseBundle = serde_json::from_str(&text).map_err(|e| StoreError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let schema = schemas.get(&bundle.schema).ok_or_else(|| StoreError::UnknownSchema {
        exercise: bundle.id.clone(),
        schema: bundle.schema.clone(),
    })?;
    check_bundle(bundle, schema)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Content hash used to deduplicate attempts.
pub fn attempt_hash(a: &AttemptRecord) -> String {
    let line = serde_json::to_string(a).expect("attempt serializes");
    hex::encode(Sha256::digest(line.as_bytes()))
}

pub struct Store {
    root: PathBuf,
    schemas: BTreeMap<String, Schema>,
    exercises: BTreeMap<String, Exercise>,
    attempts: Vec<AttemptRecord>,
    hashes: Vec<String>,
    seen: HashSet<String>,
}

impl Store {
    /// Loads every schema, bundle and stored attempt under `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        let mut schemas = BTreeMap::new();
        for path in json_files(&root.join("schemas"))? {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let name = path.file_stem().unwrap().to_string_lossy().to_string();
            let schema = Schema::from_json(&text).map_err(|source| StoreError::Schema { name, source })?;
            schemas.insert(schema.name.clone(), schema);
        }
        let mut exercises = BTreeMap::new();
        for path in json_files(&root.join("exercises"))? {
            let ex = load_exercise_bundle(&path, &schemas)?;
            let id = ex.bundle.id.clone();
            if exercises.insert(id.clone(), ex).is_some() {
                return Err(StoreError::DuplicateExercise(id));
            }
        }
        let mut store = Store {
            root,
            schemas,
            exercises,
            attempts: Vec::new(),
            hashes: Vec::new(),
            seen: HashSet::new(),
        };
        let log = store.attempts_path();
        if log.exists() {
            let text = fs::read_to_string(&log).map_err(io_err(&log))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let a: AttemptRecord = serde_json::from_str(line).map_err(|e| StoreError::Format {
                    path: log.clone(),
                    message: format!("line {}: {e}", i + 1),
                })?;
                store.remember(a);
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn attempts_path(&self) -> PathBuf {
        self.root.join("attempts.jsonl")
    }

    pub fn events_path(&self) -> PathBuf {
        self.root.join("events.jsonl")
    }

    pub fn schema(&self, name: &str) -> Option<&Schema> {
        self.schemas.get(name)
    }

    pub fn exercise(&self, id: &str) -> Result<&Exercise, StoreError> {
        self.exercises.get(id).ok_or_else(|| StoreError::UnknownExercise(id.to_string()))
    }

    pub fn exercises(&self) -> impl Iterator<Item = &Exercise> {
        self.exercises.values()
    }

    /// Adds a checked exercise in memory (not written to disk).
    pub fn insert_exercise(&mut self, ex: Exercise) {
        self.exercises.insert(ex.bundle.id.clone(), ex);
    }

    pub fn insert_schema(&mut self, schema: Schema) {
        self.schemas.insert(schema.name.clone(), schema);
    }

    pub fn attempts(&self) -> &[AttemptRecord] {
        &self.attempts
    }

    pub fn attempts_for<'a>(&'a self, exercise: &'a str) -> impl Iterator<Item = &'a AttemptRecord> + 'a {
        self.attempts.iter().filter(move |a| a.exercise_id == exercise)
    }

    /// Hash over the attempts of `exercise` and its ideal texts; changes
    /// whenever the graph built from them would.
    pub fn fingerprint(&self, exercise: &str) -> Result<String, StoreError> {
        let ex = self.exercise(exercise)?;
        let mut h = Sha256::new();
        for ideal in &ex.bundle.ideal_solutions {
            h.update(ideal.as_bytes());
            h.update([0u8]);
        }
        for (a, hash) in self.attempts.iter().zip(&self.hashes) {
            if a.exercise_id == exercise {
                h.update(hash.as_bytes());
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    fn remember(&mut self, a: AttemptRecord) -> bool {
        let hash = attempt_hash(&a);
        if !self.seen.insert(hash.clone()) {
            return false;
        }
        self.hashes.push(hash);
        self.attempts.push(a);
        true
    }

    /// Stores one attempt unless an identical one is already stored.
    /// Returns whether it was new.
    pub fn append_attempt(&mut self, a: AttemptRecord) -> Result<bool, StoreError> {
        if self.seen.contains(&attempt_hash(&a)) {
            return Ok(false);
        }
        let path = self.attempts_path();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        let line = serde_json::to_string(&a).expect("attempt serializes");
        writeln!(f, "{line}").map_err(io_err(&path))?;
        Ok(self.remember(a))
    }

    /// Grades `query` for `exercise`; queries that fail to parse or run
    /// score 0.
    pub fn grade(&self, exercise: &Exercise, query: &str) -> f64 {
        let Some(schema) = self.schema(&exercise.bundle.schema) else {
            return 0.0;
        };
        match parse(query).ok().and_then(|t| execute(&t, schema).ok()) {
            Some(m) => score(&m, &exercise.ideal_result, &exercise.bundle.evaluation_rule).percent,
            None => 0.0,
        }
    }
}
