use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// One historical submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub query_text: String,
    /// Percent, 0 to 100.
    pub score: f64,
    pub user: String,
    pub schema: String,
    pub exercise_id: String,
    pub timestamp: DateTime<Utc>,
}
