//! Request handling shared by the HTTP service and the command line.

use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sqlhint_core::exec::{execute, score, ResultMatrix, Score};
use sqlhint_core::hint::{generate_hint, Hint, HintError};
use sqlhint_core::mdp::{to_dot, MdpGraph};
use sqlhint_core::record::AttemptRecord;
use sqlhint_core::store::{read_events, ActionEvent, Difficulty, EventKind, EventLog, MdpCache, Store, StoreError};
use sqlhint_core::{parse, QueryTree};
use thiserror::Error;

use crate::config::{final_score, Config};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown exercise {0}")]
    UnknownExercise(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("parse error at {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("query is incomplete")]
    PartialQuery,
    #[error("execution failed: {0}")]
    Exec(String),
    #[error("the query is empty")]
    EmptySolution,
    #[error("no passing solution is reachable in this exercise")]
    NoHintAvailable,
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownExercise(_) => "UnknownExercise",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::Parse { .. } => "ParseError",
            ApiError::PartialQuery => "PartialQuery",
            ApiError::Exec(_) => "ExecError",
            ApiError::EmptySolution => "EmptySolution",
            ApiError::NoHintAvailable => "NoHintAvailable",
            ApiError::Internal(_) => "Internal",
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownExercise(id) => ApiError::UnknownExercise(id),
            other => ApiError::Internal(other.into()),
        }
    }
}

impl From<HintError> for ApiError {
    fn from(e: HintError) -> Self {
        match e {
            HintError::EmptySolution => ApiError::EmptySolution,
            HintError::NoHintAvailable | HintError::StaleHint => ApiError::NoHintAvailable,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExerciseSummary {
    pub id: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub schema: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExerciseDetail {
    #[serde(flatten)]
    pub summary: ExerciseSummary,
    pub schema_image: String,
    /// Table name to column names.
    pub tables: Vec<(String, Vec<String>)>,
    pub penalty_per_hint: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRequest {
    pub user: String,
    pub query_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecuteResponse {
    pub result: ResultMatrix,
    pub score: Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    pub raw_score: f64,
    pub hints_used: usize,
    pub penalty_per_hint: f64,
    pub final_score: f64,
}

/// An event posted by a client. The server stamps missing timestamps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientEvent {
    pub user: String,
    pub exercise_id: String,
    pub kind: EventKind,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    pub query_snapshot: Option<String>,
}

pub struct Engine {
    pub config: Config,
    store: Store,
    cache: MdpCache,
    log: Option<EventLog>,
    /// Hints employed per (user, exercise) since that pair's last submit.
    hints_used: HashMap<(String, String), usize>,
}

fn parse_query(text: &str) -> Result<QueryTree, ApiError> {
    parse(text).map_err(|e| ApiError::Parse {
        position: e.position,
        expected: e.expected,
    })
}

impl Engine {
    pub fn open(config: Config) -> anyhow::Result<Engine> {
        let store = Store::open(&config.store)?;
        let mut cache = MdpCache::new(config.cache_size, config.reward);
        cache.epsilon = config.epsilon;
        cache.max_iter = config.max_iter;
        let path = store.events_path();
        let mut hints_used = HashMap::new();
        if path.exists() {
            for e in read_events(&path)? {
                replay(&mut hints_used, &e);
            }
        }
        Ok(Engine {
            config,
            store,
            cache,
            log: None,
            hints_used,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn hints_used(&self, user: &str, exercise: &str) -> usize {
        self.hints_used.get(&(user.to_string(), exercise.to_string())).copied().unwrap_or(0)
    }

    pub fn graph(&mut self, exercise: &str) -> Result<Arc<MdpGraph>, ApiError> {
        Ok(self.cache.get_mdp(&self.store, exercise)?)
    }

    pub fn list_exercises(&self) -> Vec<ExerciseSummary> {
        self.store
            .exercises()
            .map(|e| ExerciseSummary {
                id: e.bundle.id.clone(),
                description: e.bundle.description.clone(),
                difficulty: e.bundle.difficulty,
                schema: e.bundle.schema.clone(),
            })
            .collect()
    }

    pub fn exercise(&self, id: &str) -> Result<ExerciseDetail, ApiError> {
        let e = self.store.exercise(id)?;
        let tables = self
            .store
            .schema(&e.bundle.schema)
            .map(|s| {
                s.tables
                    .iter()
                    .map(|t| (t.name.clone(), t.columns.iter().map(|c| c.name.clone()).collect()))
                    .collect()
            })
            .unwrap_or_default();
        Ok(ExerciseDetail {
            summary: ExerciseSummary {
                id: e.bundle.id.clone(),
                description: e.bundle.description.clone(),
                difficulty: e.bundle.difficulty,
                schema: e.bundle.schema.clone(),
            },
            schema_image: e.bundle.schema_image.clone(),
            tables,
            penalty_per_hint: self.config.penalty.per_hint(e.bundle.difficulty),
        })
    }

    fn log(&mut self, user: &str, exercise: &str, kind: EventKind, snapshot: Option<&str>) -> Result<(), ApiError> {
        let e = ActionEvent {
            user: user.to_string(),
            exercise_id: exercise.to_string(),
            timestamp: Utc::now(),
            kind,
            query_snapshot: snapshot.map(str::to_string),
            seq: 0,
        };
        self.append(e)
    }

    fn append(&mut self, e: ActionEvent) -> Result<(), ApiError> {
        let log = match &mut self.log {
            Some(l) => l,
            None => self.log.insert(EventLog::open(self.store.events_path()).map_err(anyhow::Error::from)?),
        };
        let stored = log.append(e).map_err(anyhow::Error::from)?;
        replay(&mut self.hints_used, &stored);
        Ok(())
    }

    pub fn execute(&mut self, id: &str, req: &QueryRequest) -> Result<ExecuteResponse, ApiError> {
        let ex = self.store.exercise(id)?;
        let tree = parse_query(&req.query_text)?;
        if !tree.is_complete() {
            return Err(ApiError::PartialQuery);
        }
        let schema = self
            .store
            .schema(&ex.bundle.schema)
            .ok_or_else(|| anyhow::anyhow!("schema {} missing", ex.bundle.schema))?;
        let result = execute(&tree, schema).map_err(|e| ApiError::Exec(e.to_string()))?;
        let s = score(&result, &ex.ideal_result, &ex.bundle.evaluation_rule);
        self.log(&req.user, id, EventKind::Execute, Some(&req.query_text))?;
        Ok(ExecuteResponse { result, score: s })
    }

    /// The hint for `query` without recording a request.
    pub fn suggest(&mut self, id: &str, query: &str) -> Result<Hint, ApiError> {
        self.store.exercise(id)?;
        if query.trim().is_empty() {
            return Err(ApiError::EmptySolution);
        }
        let tree = parse_query(query)?;
        let g = self.graph(id)?;
        Ok(generate_hint(&g, &tree)?)
    }

    pub fn hint(&mut self, id: &str, req: &QueryRequest) -> Result<Hint, ApiError> {
        let hint = self.suggest(id, &req.query_text)?;
        self.log(&req.user, id, EventKind::HintRequested, Some(&req.query_text))?;
        Ok(hint)
    }

    /// Grades the query, applies the hint penalty for this session and
    /// stores the attempt with its raw score.
    pub fn submit(&mut self, id: &str, req: &QueryRequest) -> Result<SessionScore, ApiError> {
        let ex = self.store.exercise(id)?;
        let tree = parse_query(&req.query_text)?;
        if !tree.is_complete() {
            return Err(ApiError::PartialQuery);
        }
        let raw = self.store.grade(ex, &req.query_text);
        let penalty = self.config.penalty.per_hint(ex.bundle.difficulty);
        let attempt = AttemptRecord {
            query_text: req.query_text.clone(),
            score: raw,
            user: req.user.clone(),
            schema: ex.bundle.schema.clone(),
            exercise_id: id.to_string(),
            timestamp: Utc::now(),
        };
        let hints = self.hints_used(&req.user, id);
        self.store.append_attempt(attempt)?;
        self.log(&req.user, id, EventKind::Submit, Some(&req.query_text))?;
        Ok(SessionScore {
            raw_score: raw,
            hints_used: hints,
            penalty_per_hint: penalty,
            final_score: final_score(raw, hints, penalty),
        })
    }

    /// Appends client telemetry. The whole batch is checked before any of
    /// it is written. Kinds the server logs itself are refused.
    pub fn record_events(&mut self, batch: Vec<ClientEvent>) -> Result<usize, ApiError> {
        for e in &batch {
            self.store.exercise(&e.exercise_id)?;
            if matches!(e.kind, EventKind::Execute | EventKind::HintRequested | EventKind::Submit) {
                return Err(ApiError::BadRequest(format!("{:?} events are recorded by the server", e.kind)));
            }
            if e.kind.needs_snapshot() && e.query_snapshot.is_none() {
                return Err(ApiError::BadRequest(format!("{:?} event needs a query_snapshot", e.kind)));
            }
        }
        let n = batch.len();
        for e in batch {
            self.append(ActionEvent {
                user: e.user,
                exercise_id: e.exercise_id,
                timestamp: e.timestamp.unwrap_or_else(Utc::now),
                kind: e.kind,
                query_snapshot: e.query_snapshot,
                seq: 0,
            })?;
        }
        Ok(n)
    }

    pub fn graph_dot(&mut self, id: &str) -> Result<String, ApiError> {
        Ok(to_dot(&*self.graph(id)?))
    }
}

fn replay(counts: &mut HashMap<(String, String), usize>, e: &ActionEvent) {
    let key = (e.user.clone(), e.exercise_id.clone());
    match e.kind {
        EventKind::HintEmployed => *counts.entry(key).or_default() += 1,
        EventKind::Submit => {
            counts.remove(&key);
        }
        _ => {}
    }
}
