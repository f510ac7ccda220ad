use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::engine::ResultMatrix;
use super::value::ValueKey;

/// How an exercise compares a student's result with the ideal one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationRule {
    pub order_matters: bool,
    pub column_names_matter: bool,
    /// Percent a score must exceed to pass.
    pub pass_threshold: f64,
}

impl Default for EvaluationRule {
    fn default() -> Self {
        EvaluationRule {
            order_matters: false,
            column_names_matter: false,
            pass_threshold: 95.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub row_recall: f64,
    pub row_precision: f64,
    pub column_match: f64,
    pub order_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub percent: f64,
    pub breakdown: ScoreBreakdown,
}

impl Score {
    pub fn passes(&self, rule: &EvaluationRule) -> bool {
        self.percent >= rule.pass_threshold
    }
}

/// Grades `student` against `ideal`: the product of row recall, row
/// precision, the share of matched columns and (when order matters) the
/// fraction of matched rows that appear in the ideal order.
pub fn score(student: &ResultMatrix, ideal: &ResultMatrix, rule: &EvaluationRule) -> Score {
    let pairs = match_columns(student, ideal, rule.column_names_matter);
    let width = student.columns.len().max(ideal.columns.len());
    let column_match = if width == 0 { 1.0 } else { pairs.len() as f64 / width as f64 };

    let project = |m: &ResultMatrix, pick: &dyn Fn(&(usize, usize)) -> usize| -> Vec<Vec<ValueKey>> {
        m.rows
            .iter()
            .map(|r| pairs.iter().map(|p| r[pick(p)].key()).collect())
            .collect()
    };
    let (srows, irows) = if pairs.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (project(student, &|p| p.0), project(ideal, &|p| p.1))
    };

    let common = multiset_intersection(&srows, &irows);
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    let (row_recall, row_precision) = if pairs.is_empty() {
        let empty = student.rows.is_empty() && ideal.rows.is_empty();
        (if empty { 1.0 } else { 0.0 }, if empty { 1.0 } else { 0.0 })
    } else {
        (ratio(common, irows.len()), ratio(common, srows.len()))
    };
    let order_factor = if rule.order_matters && common > 0 {
        lcs(&srows, &irows) as f64 / common as f64
    } else {
        1.0
    };

    let breakdown = ScoreBreakdown {
        row_recall,
        row_precision,
        column_match,
        order_factor,
    };
    Score {
        percent: 100.0 * row_recall * row_precision * column_match * order_factor,
        breakdown,
    }
}

/// Pairs of (student column, ideal column).
fn match_columns(student: &ResultMatrix, ideal: &ResultMatrix, by_name: bool) -> Vec<(usize, usize)> {
    if by_name {
        let mut used = vec![false; student.columns.len()];
        let mut pairs = Vec::new();
        for (i, name) in ideal.columns.iter().enumerate() {
            let hit = (0..student.columns.len()).find(|&s| !used[s] && student.columns[s].eq_ignore_ascii_case(name));
            if let Some(s) = hit {
                used[s] = true;
                pairs.push((s, i));
            }
        }
        pairs
    } else {
        let st = student.column_types();
        let it = ideal.column_types();
        (0..st.len().min(it.len()))
            .filter(|&c| match (st[c], it[c]) {
                (Some(a), Some(b)) => a.compatible(b),
                _ => true,
            })
            .map(|c| (c, c))
            .collect()
    }
}

fn multiset_intersection(a: &[Vec<ValueKey>], b: &[Vec<ValueKey>]) -> usize {
    let mut counts: HashMap<&Vec<ValueKey>, usize> = HashMap::new();
    for r in b {
        *counts.entry(r).or_default() += 1;
    }
    let mut n = 0;
    for r in a {
        if let Some(c) = counts.get_mut(r) {
            if *c > 0 {
                *c -= 1;
                n += 1;
            }
        }
    }
    n
}

fn lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}
