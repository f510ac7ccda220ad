//! Hand-built graphs and exercise data shared by the integration tests.
#![allow(dead_code)]

use sqlhint_core::mdp::{build_mdp, default_limits, run_value_iteration, MdpGraph, RewardPolicy, StateId};
use sqlhint_core::record::AttemptRecord;
use sqlhint_core::{parse, render, QueryTree};
use rand::Rng;

use super::gen::{mutate, QueryGen};

pub fn q(sql: &str) -> QueryTree {
    parse(sql).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

pub fn attempt(sql: &str, score: f64) -> AttemptRecord {
    AttemptRecord {
        query_text: sql.to_string(),
        score,
        user: "u1".into(),
        schema: "company".into(),
        exercise_id: "ex".into(),
        timestamp: "2023-03-02T10:00:00Z".parse().unwrap(),
    }
}

pub fn valued(attempts: &[AttemptRecord], ideals: &[&str]) -> MdpGraph {
    let ideals: Vec<QueryTree> = ideals.iter().map(|s| q(s)).collect();
    let mut g = build_mdp(attempts, &ideals, &RewardPolicy::default()).unwrap();
    let (eps, max_iter) = default_limits(&g);
    run_value_iteration(&mut g, eps, max_iter);
    g
}

/// State ids of a small branching graph with hand-checked values.
pub struct Example {
    pub s0: StateId,
    pub s1: StateId,
    pub s2: StateId,
    pub s3: StateId,
    pub s4: StateId,
    pub s5: StateId,
    pub t100: StateId,
    pub t_in: StateId,
    pub t90: StateId,
    pub t55: StateId,
}

/// ```text
/// s0 -> s1 -> s2 (1/4) -> t100 (+100)
///          -> s3 (3/4) -> s4 (2/3) -> t_in (-100)    IN-clause branch
///                      -> s5 (1/3) -> t90 (+90) | t55 (+55), 1/2 each
/// ```
/// with a backward action from every state to its predecessor.
pub fn example_graph() -> (MdpGraph, Example) {
    let mut g = MdpGraph::default();
    let mut add = |sql: &str, is_final: bool, r: f64| g.add_state(q(sql), is_final, r);
    let s0 = add("SELECT COUNT(*)", false, 0.0);
    let s1 = add("SELECT COUNT(*) FROM employee", false, 0.0);
    let s2 = add("SELECT COUNT(*) FROM employee, department", false, 0.0);
    let s3 = add("SELECT COUNT(*) FROM employee WHERE dept_id", false, 0.0);
    let s4 = add("SELECT COUNT(*) FROM employee WHERE dept_id IN (SELECT dept_id)", false, 0.0);
    let s5 = add("SELECT COUNT(*) FROM employee WHERE dept_id = 10", false, 0.0);
    let t100 = add(
        "SELECT COUNT(*) FROM employee, department WHERE employee.dept_id = department.dept_id AND department.name = 'SALES'",
        true,
        100.0,
    );
    let t_in = add(
        "SELECT COUNT(*) FROM employee WHERE dept_id IN (SELECT dept_id FROM department)",
        true,
        -100.0,
    );
    let t90 = add("SELECT COUNT(*) FROM employee WHERE dept_id = 10 AND salary > 0", true, 90.0);
    let t55 = add("SELECT COUNT(*) FROM employee WHERE dept_id = 10 OR dept_id = 20", true, 55.0);
    g.set_forward(s0, &[(s1, 1.0)]);
    g.set_forward(s1, &[(s2, 0.25), (s3, 0.75)]);
    g.set_forward(s2, &[(t100, 1.0)]);
    g.set_forward(s3, &[(s4, 2.0 / 3.0), (s5, 1.0 / 3.0)]);
    g.set_forward(s4, &[(t_in, 1.0)]);
    g.set_forward(s5, &[(t90, 0.5), (t55, 0.5)]);
    for (s, p) in [(s1, s0), (s2, s1), (s3, s1), (s4, s3), (s5, s3), (t100, s2), (t_in, s4), (t90, s5), (t55, s5)] {
        g.backward[s] = Some(p);
    }
    g.roots = vec![s0];
    for s in &mut g.states {
        s.seeded = true;
        s.support = 1;
    }
    (
        g,
        Example {
            s0,
            s1,
            s2,
            s3,
            s4,
            s5,
            t100,
            t_in,
            t90,
            t55,
        },
    )
}

pub const SALES_IDEAL: &str =
    "SELECT COUNT(*) FROM employee, department WHERE employee.dept_ID = department.dept_ID AND department.name = \"SALES\"";
pub const SALES_ALTERNATIVE: &str = "SELECT COUNT(*) FROM department WHERE dept_ID IN (SELECT dept_ID FROM employee)";
pub const SALES_STUDENT: &str = "SELECT * FROM department";
pub const SALES_HINT1: &str = "SELECT COUNT(*) FROM department WHERE dept_ID";
pub const SALES_HINT2: &str = "SELECT COUNT(*) FROM department WHERE dept_ID IN (SELECT dept_ID)";

pub const DALLAS_IDEAL: &str = "SELECT COUNT(*) FROM employee e, department d, location l WHERE e.dept_ID = d.dept_ID \
                              AND d.loc_ID = l.loc_ID AND region = \"DALLAS\" GROUP BY region";
pub const DALLAS_ATTEMPT: &str = "SELECT COUNT(e.emp_ID) FROM employee e, location l, department d WHERE e.dept_ID = d.dept_ID \
                                AND d.loc_ID = l.loc_ID AND l.region = \"DALLAS\"";
pub const DALLAS_STUDENT: &str = "SELECT COUNT(e.emp_ID) FROM employee e, location l WHERE region = \"DALLAS\"";
pub const DALLAS_HINT: &str = "SELECT COUNT(e.emp_ID) FROM employee e, location l, department d";

pub fn sales_graph() -> MdpGraph {
    valued(&[attempt(SALES_ALTERNATIVE, 100.0)], &[SALES_IDEAL])
}

/// With `student_failed`, the student's own query is also on record as a
/// failed submission.
pub fn dallas_graph(student_failed: bool) -> MdpGraph {
    let mut attempts = vec![attempt(DALLAS_ATTEMPT, 100.0)];
    if student_failed {
        attempts.push(attempt(DALLAS_STUDENT, 0.0));
    }
    valued(&attempts, &[DALLAS_IDEAL])
}

/// Same tree modulo alias names.
pub fn same_query(a: &str, b: &str) -> bool {
    use sqlhint_core::canonicalize_aliases;
    canonicalize_aliases(&q(a)).0 == canonicalize_aliases(&q(b)).0
}

/// Attempts for a random exercise: one or two generated ideals, a few
/// mutated copies with random scores and sometimes an unrelated query.
pub fn random_exercise(seed: u64) -> (Vec<AttemptRecord>, Vec<QueryTree>, Vec<QueryTree>) {
    let mut gen = QueryGen::new(seed);
    let n_ideals = gen.rng().gen_range(1..=2);
    let ideals: Vec<String> = (0..n_ideals).map(|_| gen.query()).collect();
    let mut attempts = Vec::new();
    for _ in 0..gen.rng().gen_range(0..=6) {
        let base = ideals[gen.rng().gen_range(0..ideals.len())].clone();
        let mut tree = q(&base);
        for _ in 0..gen.rng().gen_range(0..=2) {
            mutate(&mut tree.root, gen.rng());
        }
        let score = if gen.rng().gen_bool(0.4) { 100.0 } else { gen.rng().gen_range(0.0..95.0) };
        attempts.push(attempt(&render(&tree), score));
    }
    if gen.rng().gen_bool(0.3) {
        let other = gen.query();
        attempts.push(attempt(&other, 0.0));
    }
    let ideals: Vec<QueryTree> = ideals.iter().map(|s| q(s)).collect();
    let students = (0..3).map(|_| q(&gen.query())).collect();
    (attempts, ideals, students)
}

/// Valued graph for [`random_exercise`] plus unrelated student queries.
pub fn random_mdp(seed: u64) -> (MdpGraph, Vec<QueryTree>) {
    let (attempts, ideals, students) = random_exercise(seed);
    let mut g = build_mdp(&attempts, &ideals, &RewardPolicy::default()).unwrap();
    let (eps, max_iter) = default_limits(&g);
    run_value_iteration(&mut g, eps, max_iter);
    (g, students)
}

