//! In-memory execution of queries against exercise tables, and grading of
//! a result against the ideal one.

mod engine;
mod schema;
mod score;
mod value;

pub use engine::{execute, ExecError, ResultMatrix};
pub use schema::{ColumnDef, Schema, SchemaError, Table};
pub use score::{score, EvaluationRule, Score, ScoreBreakdown};
pub use value::{ColumnType, Value, ValueKey};
