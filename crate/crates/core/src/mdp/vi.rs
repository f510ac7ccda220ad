use serde::{Deserialize, Serialize};

use super::MdpGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViReport {
    pub iterations: usize,
    pub max_delta: f64,
    pub converged: bool,
}

/// Synchronous value iteration. Finals keep `V = R`; every other state takes
/// the better of its forward action (expected value over destinations) and
/// its backward action. Stops once the largest change drops below
/// `epsilon`, or after `max_iter` sweeps with `converged = false`.
pub fn run_value_iteration(g: &mut MdpGraph, epsilon: f64, max_iter: usize) -> ViReport {
    let n = g.len();
    let mut v: Vec<f64> = g.states.iter().map(|s| if s.is_final { s.reward } else { 0.0 }).collect();
    let mut report = ViReport {
        iterations: 0,
        max_delta: 0.0,
        converged: n == 0,
    };
    while report.iterations < max_iter && !report.converged {
        let mut next = v.clone();
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let st = &g.states[s];
            if st.is_final {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            if !g.forward[s].is_empty() {
                let exp: f64 = g.forward[s].iter().map(|t| t.probability * v[t.to]).sum();
                best = st.reward + g.gamma * exp;
            }
            if let Some(p) = g.backward[s] {
                best = best.max(st.reward + g.gamma * v[p]);
            }
            if best.is_finite() {
                next[s] = best;
            }
            delta = delta.max((next[s] - v[s]).abs());
        }
        v = next;
        report.iterations += 1;
        report.max_delta = delta;
        report.converged = delta < epsilon;
    }
    for (s, val) in v.into_iter().enumerate() {
        g.states[s].value = val;
    }
    g.report = Some(report);
    report
}

/// Defaults: `epsilon = 1e-6`, `max_iter = 10 * |states|`.
pub fn default_limits(g: &MdpGraph) -> (f64, usize) {
    (1e-6, (10 * g.len()).max(1))
}
