//! Evaluation metrics over recorded sessions: distance-to-solution
//! timelines, regression slopes before and after hints, branch counts,
//! Mann-Whitney tests and participant segments.

mod beta;
mod mwu;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::parse;
use crate::hint::match_state;
use crate::mdp::{dist_to_solution, MdpGraph, StateId};
use crate::store::{ActionEvent, EventKind};

pub use beta::{fit_beta, hint_windows, normalize, ols_slope, window_beta, BetaFilter, BetaSet};
pub use mwu::{mann_whitney_u, Alternative, MannWhitney, EXACT_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum AnalysisError {
    #[error("window has {0} points, at least 2 are needed")]
    InsufficientPoints(usize),
    #[error("all points in the window have the same elapsed time")]
    ConstantTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    /// Seconds of focused solving time.
    pub t_elapsed: f64,
    pub dist_sol: u32,
    /// The point records the query right after a hint was employed.
    pub hint_employed: bool,
}

/// Fewest forward or backward moves from `s` to a passing final.
pub fn dist_sol(g: &MdpGraph, s: StateId) -> Option<u32> {
    dist_to_solution(g)[s]
}

/// One user's work on one exercise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub user: String,
    pub exercise_id: String,
    pub t_solving: f64,
    pub hints_employed: usize,
    pub n_branches: u64,
    pub points: Vec<TimelinePoint>,
    pub betas: BetaSet,
    pub submitted: bool,
}

/// Splits a log into sessions: the events of one (user, exercise) pair up
/// to and including a submit. Events after a submit open a new session.
pub fn sessions(events: &[ActionEvent]) -> Vec<Vec<&ActionEvent>> {
    let mut ordered: Vec<&ActionEvent> = events.iter().collect();
    ordered.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.seq.cmp(&b.seq)));
    let mut open: BTreeMap<(&str, &str), Vec<&ActionEvent>> = BTreeMap::new();
    let mut done = Vec::new();
    for e in ordered {
        let key = (e.user.as_str(), e.exercise_id.as_str());
        let s = open.entry(key).or_default();
        s.push(e);
        if e.kind == EventKind::Submit {
            done.push(open.remove(&key).unwrap());
        }
    }
    done.extend(open.into_values());
    done
}

/// Timeline of one session against the exercise graph. The clock starts
/// at the first edit or execute (time before that is spent reading) and
/// stops while the window is out of focus. Snapshots with no selection or
/// no route to a passing final give no point.
pub fn summarize(session: &[&ActionEvent], g: &MdpGraph) -> Option<SessionSummary> {
    let first = session.first()?;
    let dist = dist_to_solution(g);
    let start = session
        .iter()
        .find(|e| matches!(e.kind, EventKind::Edit | EventKind::Execute))
        .map(|e| e.timestamp)?;
    let mut unfocused = 0.0;
    let mut lost_at = None;
    let mut points = Vec::new();
    let mut visited: HashSet<StateId> = HashSet::new();
    let mut t_end = 0.0;
    let mut hints = 0;
    for e in session {
        if e.timestamp < start {
            continue;
        }
        let raw = (e.timestamp - start).num_milliseconds() as f64 / 1000.0;
        match e.kind {
            EventKind::FocusLost => {
                lost_at.get_or_insert(raw);
            }
            EventKind::FocusGained => {
                if let Some(t) = lost_at.take() {
                    unfocused += raw - t;
                }
            }
            _ => {}
        }
        let t = raw - unfocused - lost_at.map_or(0.0, |l| raw - l);
        t_end = t;
        if e.kind == EventKind::HintEmployed {
            hints += 1;
        }
        let Some(text) = &e.query_snapshot else { continue };
        let Ok(tree) = parse(text) else { continue };
        let Ok((s, _)) = match_state(g, &tree) else { continue };
        visited.insert(s);
        if let Some(d) = dist[s] {
            points.push(TimelinePoint {
                t_elapsed: t,
                dist_sol: d,
                hint_employed: e.kind == EventKind::HintEmployed,
            });
        }
    }
    Some(SessionSummary {
        user: first.user.clone(),
        exercise_id: first.exercise_id.clone(),
        t_solving: t_end,
        hints_employed: hints,
        n_branches: branches_touched(g, &visited),
        betas: BetaSet::from_points(&points),
        points,
        submitted: session.last().is_some_and(|e| e.kind == EventKind::Submit),
    })
}

/// Root-to-final forward paths that pass through at least one of `visited`.
pub fn branches_touched(g: &MdpGraph, visited: &HashSet<StateId>) -> u64 {
    let avoiding: u64 = g
        .roots
        .iter()
        .map(|&r| g.paths_from(r, &mut HashMap::new(), &|s| !visited.contains(&s)))
        .sum();
    g.branch_count() - avoiding
}

/// Survey answers for one participant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Self-reported proficiency on the survey scale.
    #[serde(default)]
    pub proficiency: Option<f64>,
    #[serde(default)]
    pub years_experience: Option<f64>,
    /// Whether hints were useful, per exercise.
    #[serde(default)]
    pub hints_useful: BTreeMap<String, bool>,
}

/// A participant is knowledgeable when proficiency is above the scale
/// midpoint or experience reaches `min_years`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentRules {
    pub proficiency_midpoint: f64,
    pub min_years: f64,
    /// Sessions longer than this many seconds are left out.
    pub max_solving_secs: Option<f64>,
}

impl Default for SegmentRules {
    fn default() -> Self {
        SegmentRules {
            proficiency_midpoint: 3.0,
            min_years: 2.0,
            max_solving_secs: None,
        }
    }
}

impl SegmentRules {
    pub fn knowledgeable(&self, p: &Profile) -> bool {
        p.proficiency.is_some_and(|x| x > self.proficiency_midpoint) || p.years_experience.is_some_and(|y| y >= self.min_years)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    I,
    II,
    III,
    IV,
    V,
}

impl Segment {
    pub const ALL: [Segment; 5] = [Segment::I, Segment::II, Segment::III, Segment::IV, Segment::V];

    /// `None` for knowledgeable participants who employed hints and did not
    /// find them useful, a group the segmentation leaves out.
    pub fn of(knowledgeable: bool, hints: usize, useful: Option<bool>) -> Option<Segment> {
        match (knowledgeable, hints > 0, useful.unwrap_or(false)) {
            (true, false, _) => Some(Segment::I),
            (false, false, _) => Some(Segment::II),
            (false, true, false) => Some(Segment::III),
            (true, true, true) => Some(Segment::IV),
            (false, true, true) => Some(Segment::V),
            (true, true, false) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentAggregate {
    pub segment: Segment,
    pub sessions: usize,
    pub mean_t_solving: Option<f64>,
    pub mean_n_branches: Option<f64>,
    pub mean_beta_pre_fh: Option<f64>,
    pub mean_beta_aha: Option<f64>,
    /// Mean over sessions of their own after-hint minus pre-hint slope.
    pub mean_delta_beta: Option<f64>,
    /// One-sided test that after-hint slopes are lower than pre-hint ones.
    pub p_aha_below_pre: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub rows: Vec<SegmentAggregate>,
    /// Users with sessions but no profile.
    pub missing_profile: Vec<String>,
    pub unsegmented: usize,
    pub excluded_outliers: usize,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn segment_report(summaries: &[SessionSummary], profiles: &BTreeMap<String, Profile>, rules: &SegmentRules) -> SegmentReport {
    let mut members: BTreeMap<Segment, Vec<&SessionSummary>> = BTreeMap::new();
    let mut missing = Vec::new();
    let mut unsegmented = 0;
    let mut excluded = 0;
    for s in summaries {
        if rules.max_solving_secs.is_some_and(|m| s.t_solving > m) {
            excluded += 1;
            continue;
        }
        let Some(p) = profiles.get(&s.user) else {
            if !missing.contains(&s.user) {
                missing.push(s.user.clone());
            }
            continue;
        };
        let useful = p.hints_useful.get(&s.exercise_id).copied();
        match Segment::of(rules.knowledgeable(p), s.hints_employed, useful) {
            Some(seg) => members.entry(seg).or_default().push(s),
            None => unsegmented += 1,
        }
    }
    let rows = Segment::ALL
        .iter()
        .filter_map(|&seg| {
            let ms = members.get(&seg)?;
            let col = |f: &dyn Fn(&SessionSummary) -> Option<f64>| -> Vec<f64> { ms.iter().filter_map(|s| f(s)).collect() };
            let hinted = matches!(seg, Segment::III | Segment::IV | Segment::V);
            let pre = col(&|s| s.betas.beta_pre_first_hint);
            let aha = col(&|s| s.betas.beta_after_hint_avg);
            let pick = |xs: &[f64]| if hinted { mean(xs) } else { None };
            Some(SegmentAggregate {
                segment: seg,
                sessions: ms.len(),
                mean_t_solving: mean(&col(&|s| Some(s.t_solving))),
                mean_n_branches: mean(&col(&|s| Some(s.n_branches as f64))),
                mean_beta_pre_fh: pick(&pre),
                mean_beta_aha: pick(&aha),
                mean_delta_beta: pick(&col(&|s| s.betas.delta_beta)),
                p_aha_below_pre: (hinted && !pre.is_empty() && !aha.is_empty())
                    .then(|| mann_whitney_u(&aha, &pre, Alternative::Less).p),
            })
        })
        .collect();
    SegmentReport {
        rows,
        missing_profile: missing,
        unsegmented,
        excluded_outliers: excluded,
    }
}
