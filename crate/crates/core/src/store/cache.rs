use std::collections::HashMap;
use std::sync::Arc;

use super::{Store, StoreError};
use crate::mdp::{build_mdp, default_limits, run_value_iteration, MdpGraph, RewardPolicy};

struct Entry {
    fingerprint: String,
    graph: Arc<MdpGraph>,
    used: u64,
}

/// Valued graphs per exercise, rebuilt when the store's fingerprint for
/// the exercise changes. Holds at most `capacity` graphs and drops the
/// least recently used one when full.
pub struct MdpCache {
    capacity: usize,
    pub policy: RewardPolicy,
    /// Value iteration limits; `None` takes the graph-size defaults.
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    entries: HashMap<String, Entry>,
    clock: u64,
    builds: u64,
}

impl MdpCache {
    pub fn new(capacity: usize, policy: RewardPolicy) -> Self {
        MdpCache {
            capacity: capacity.max(1),
            policy,
            epsilon: None,
            max_iter: None,
            entries: HashMap::new(),
            clock: 0,
            builds: 0,
        }
    }

    /// Number of graphs built so far.
    pub fn builds(&self) -> u64 {
        self.builds
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fingerprint(&self, exercise: &str) -> Option<&str> {
        self.entries.get(exercise).map(|e| e.fingerprint.as_str())
    }

    pub fn get_mdp(&mut self, store: &Store, exercise: &str) -> Result<Arc<MdpGraph>, StoreError> {
        let fingerprint = store.fingerprint(exercise)?;
        self.clock += 1;
        if let Some(e) = self.entries.get_mut(exercise) {
            if e.fingerprint == fingerprint {
                e.used = self.clock;
                return Ok(Arc::clone(&e.graph));
            }
        }
        let graph = Arc::new(self.build(store, exercise)?);
        if !self.entries.contains_key(exercise) && self.entries.len() >= self.capacity {
            let oldest = self.entries.iter().min_by_key(|(_, e)| e.used).map(|(k, _)| k.clone());
            if let Some(k) = oldest {
                self.entries.remove(&k);
            }
        }
        self.entries.insert(
            exercise.to_string(),
            Entry {
                fingerprint,
                graph: Arc::clone(&graph),
                used: self.clock,
            },
        );
        Ok(graph)
    }

    fn build(&mut self, store: &Store, exercise: &str) -> Result<MdpGraph, StoreError> {
        let ex = store.exercise(exercise)?;
        let attempts: Vec<_> = store.attempts_for(exercise).cloned().collect();
        let mut g = build_mdp(&attempts, &ex.ideals, &self.policy).map_err(|e| StoreError::Build {
            exercise: exercise.to_string(),
            reason: e.to_string(),
        })?;
        let (eps, max_iter) = default_limits(&g);
        run_value_iteration(&mut g, self.epsilon.unwrap_or(eps), self.max_iter.unwrap_or(max_iter));
        self.builds += 1;
        Ok(g)
    }
}
