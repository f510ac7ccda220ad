use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sqlhint_core::mdp::RewardPolicy;
use sqlhint_core::store::Difficulty;

/// Points taken off the final score per employed hint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyTable {
    pub easy: f64,
    pub moderate: f64,
    pub difficult: f64,
}

impl Default for PenaltyTable {
    fn default() -> Self {
        PenaltyTable {
            easy: 5.0,
            moderate: 3.0,
            difficult: 2.0,
        }
    }
}

impl PenaltyTable {
    pub fn per_hint(&self, d: Difficulty) -> f64 {
        match d {
            Difficulty::Easy => self.easy,
            Difficulty::Moderate => self.moderate,
            Difficulty::Difficult => self.difficult,
        }
    }
}

/// `max(0, raw - hints * penalty)`.
pub fn final_score(raw: f64, hints_used: usize, penalty_per_hint: f64) -> f64 {
    (raw - hints_used as f64 * penalty_per_hint).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub store: PathBuf,
    pub listen: String,
    pub penalty: PenaltyTable,
    pub reward: RewardPolicy,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub cache_size: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store: PathBuf::from("data/demo"),
            listen: "127.0.0.1:8080".into(),
            penalty: PenaltyTable::default(),
            reward: RewardPolicy::default(),
            epsilon: None,
            max_iter: None,
            cache_size: 64,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
