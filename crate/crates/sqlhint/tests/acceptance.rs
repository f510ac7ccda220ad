//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod support;
#[path = "../../core/tests/support/mod.rs"]
mod core_support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use core_support::fixtures::*;
use core_support::gen::{permute_unordered, QueryGen};
use core_support::oracles::{all_trees, mapping_distance, ALPHABET};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use sqlhint::engine::{ClientEvent, QueryRequest};
use sqlhint::Engine;
use sqlhint_core::analysis::{fit_beta, mann_whitney_u, Alternative, BetaFilter, TimelinePoint};
use sqlhint_core::hint::{apply_hint, generate_hint};
use sqlhint_core::mdp::{build_mdp, dist_to_solution, escape_incorrect_branch, run_value_iteration, MdpGraph, RewardPolicy};
use sqlhint_core::store::EventKind;
use sqlhint_core::treedist::{query_distance, query_distance_with, DistanceConfig};
use sqlhint_core::{canonicalize_aliases, parse, render, Node, NodeKind, QueryTree};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reference_hints() -> Check {
    let start = Instant::now();
    let g = sales_graph();
    let h1 = generate_hint(&g, &q(SALES_STUDENT)).map_err(|e| e.to_string())?.sql_text;
    ensure(same_query(&h1, SALES_HINT1), || format!("sales first hint {h1}"))?;
    let h2 = generate_hint(&g, &q(&h1)).map_err(|e| e.to_string())?.sql_text;
    ensure(same_query(&h2, SALES_HINT2), || format!("sales second hint {h2}"))?;
    for failed in [false, true] {
        let g = dallas_graph(failed);
        let h = generate_hint(&g, &q(DALLAS_STUDENT)).map_err(|e| e.to_string())?.sql_text;
        ensure(same_query(&h, DALLAS_HINT), || format!("dallas hint {h}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.3}s"))?;
    Ok(format!("3 hints reproduced in {:.0} ms", secs * 1000.0))
}

fn rightmost_depth(n: &Node) -> usize {
    n.children.last().map_or(0, |c| 1 + rightmost_depth(c))
}

fn attach(n: &mut Node, depth: usize, leaf: Node) {
    if depth == 0 {
        n.children.push(leaf);
    } else {
        attach(n.children.last_mut().unwrap(), depth - 1, leaf);
    }
}

/// Grows a tree in preorder: each new node becomes the last child of a
/// node on the rightmost path, which reaches every ordered shape.
fn random_tree(rng: &mut StdRng, size: usize) -> Node {
    let label = |rng: &mut StdRng| Node::leaf(NodeKind::Identifier, *ALPHABET.choose(rng).unwrap());
    let mut t = label(rng);
    for _ in 1..size {
        let d = rng.gen_range(0..=rightmost_depth(&t));
        let l = label(rng);
        attach(&mut t, d, l);
    }
    t
}

fn tree_distance() -> Check {
    let start = Instant::now();
    let cfg = DistanceConfig::default();
    let trees: Vec<Vec<Node>> = (0..=6).map(|k| if k == 0 { Vec::new() } else { all_trees(k, &ALPHABET) }).collect();
    let mut pairs = 0usize;
    for sa in 1..=6 {
        for sb in 1..=(7 - sa) {
            for a in &trees[sa] {
                for b in &trees[sb] {
                    let want = mapping_distance(a, b);
                    let got = query_distance_with(a, b, &cfg);
                    ensure(got == want, || format!("{a:?} vs {b:?}: {got} != {want}"))?;
                    pairs += 1;
                }
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..3000 {
        let (sa, sb) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let a = random_tree(&mut rng, sa);
        let b = random_tree(&mut rng, sb);
        let want = mapping_distance(&a, &b);
        let got = query_distance_with(&a, &b, &cfg);
        ensure(got == want, || format!("{a:?} vs {b:?}: {got} != {want}"))?;
    }
    let mut g = QueryGen::new(11);
    for _ in 0..500 {
        let sql = g.query();
        let (t, _) = canonicalize_aliases(&parse(&sql).unwrap());
        let mut p = t.clone();
        permute_unordered(&mut p.root, g.rng());
        ensure(query_distance(&t, &p) == 0, || format!("permutation changed distance: {sql}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{pairs} exhaustive pairs, 3000 random 6-node pairs, 500 permuted queries, {secs:.1}s"))
}

fn value_iteration() -> Check {
    let (mut g, f) = example_graph();
    run_value_iteration(&mut g, 0.0, 2);
    let v = |g: &MdpGraph, s: usize| g.states[s].value;
    ensure(v(&g, f.s1) == 25.0 && v(&g, f.s5) == 72.5 && v(&g, f.s2) == 100.0, || "second sweep".into())?;
    ensure((v(&g, f.s3) - 72.5 / 3.0).abs() < 1e-12, || "second sweep s3".into())?;
    let r = run_value_iteration(&mut g, 1e-12, 100_000);
    ensure(r.converged, || "did not converge".into())?;
    // Hand solution: finals keep their rewards; with no discount every
    // other state can step back to s1 and take the +100 branch.
    let terminals = [(f.t100, 100.0), (f.t_in, -100.0), (f.t90, 90.0), (f.t55, 55.0)];
    for (s, want) in terminals {
        ensure(v(&g, s) == want, || format!("terminal {s}: {}", v(&g, s)))?;
    }
    for s in [f.s0, f.s1, f.s2, f.s3, f.s4, f.s5] {
        ensure((v(&g, s) - 100.0).abs() < 1e-9, || format!("state {s}: {}", v(&g, s)))?;
    }
    let e = escape_incorrect_branch(&g, f.t_in).map_err(|e| e.to_string())?;
    let two_back = g.backward[g.backward[f.t_in].unwrap()];
    ensure(two_back == Some(e), || format!("escape to {e}, two steps back is {two_back:?}"))?;
    Ok(format!("fixed point within 1e-9 after {} sweeps; IN branch escapes to s{e}", r.iterations))
}

/// Hint applications from `start` until a passing final is held, with the
/// remainder of each walk shared through `memo`.
fn follow(g: &MdpGraph, start: &QueryTree, memo: &mut [Option<Option<usize>>]) -> Option<usize> {
    let mut student = start.clone();
    let mut path: Vec<usize> = Vec::new();
    let found = loop {
        if path.len() > g.len() {
            break None;
        }
        let h = generate_hint(g, &student).ok()?;
        if h.target_state == h.matched_state && g.states[h.target_state].is_passing() {
            break Some(0);
        }
        let t = h.target_state;
        if let Some(known) = memo[t] {
            break known.map(|n| n + 1);
        }
        if path.contains(&t) {
            break None;
        }
        path.push(t);
        student = apply_hint(&student, &h).ok()?;
    };
    for (i, &t) in path.iter().enumerate() {
        memo[t] = Some(found.map(|n| n + path.len() - 1 - i));
    }
    found.map(|n| n + path.len())
}

fn progressivity() -> Check {
    let mut hints = 0usize;
    for seed in 0..1000 {
        let (g, students) = random_mdp(seed);
        let dist = dist_to_solution(&g);
        let mut memo = vec![None; g.len()];
        let mut starts: Vec<QueryTree> = g.states.iter().filter(|s| s.tree.has_selection()).map(|s| s.display.clone()).collect();
        starts.extend(students);
        for start in &starts {
            let h = generate_hint(&g, start).map_err(|e| format!("seed {seed}: {e} for {}", render(start)))?;
            hints += 1;
            if h.target_state == h.matched_state && g.states[h.target_state].is_passing() {
                continue;
            }
            let after = dist[h.target_state].ok_or_else(|| format!("seed {seed}: target unreachable"))?;
            let from = dist[h.escaped_state].ok_or_else(|| format!("seed {seed}: escape unreachable"))?;
            ensure(after < from, || format!("seed {seed}: {from} -> {after}"))?;
            if let Some(before) = h.dist_before {
                ensure(after < before, || format!("seed {seed}: matched {before} -> {after}"))?;
            }
            let steps = follow(&g, start, &mut memo);
            ensure(steps.is_some_and(|n| n <= g.len()), || format!("seed {seed}: no passing final from {}", render(start)))?;
        }
    }
    Ok(format!("{hints} hints over 1000 graphs"))
}

fn parser_round_trip() -> Check {
    let mut g = QueryGen::new(1);
    let mut n = 0;
    for partial in [false, true] {
        for _ in 0..1000 {
            let sql = if partial { g.partial_query() } else { g.query() };
            let t = parse(&sql).map_err(|e| format!("{sql}: {e}"))?;
            let again = parse(&render(&t)).map_err(|e| format!("{}: {e}", render(&t)))?;
            ensure(again == t, || format!("not a fixpoint: {sql}"))?;
            let (once, _) = canonicalize_aliases(&t);
            let (twice, _) = canonicalize_aliases(&once);
            ensure(once == twice, || format!("canonicalization not idempotent: {sql}"))?;
            n += 1;
        }
    }
    Ok(format!("{n} queries (half partial)"))
}

type Key = (QueryTree, bool);

/// Graph contents keyed by state tree instead of id.
fn by_key(g: &MdpGraph) -> BTreeMap<Key, (u32, String, Vec<(Key, String)>)> {
    let key = |s: usize| (g.states[s].tree.clone(), g.states[s].is_final);
    (0..g.len())
        .map(|s| {
            let mut fwd: Vec<(Key, String)> = g.forward[s].iter().map(|t| (key(t.to), format!("{:.12}", t.probability))).collect();
            fwd.sort();
            (key(s), (g.states[s].support, g.states[s].reward.to_string(), fwd))
        })
        .collect()
}

fn stochasticity() -> Check {
    for seed in 0..1000 {
        let (attempts, ideals, _) = random_exercise(seed);
        let g = build_mdp(&attempts, &ideals, &RewardPolicy::default()).map_err(|e| e.to_string())?;
        for (s, ts) in g.forward.iter().enumerate() {
            if g.states[s].is_final {
                continue;
            }
            let total: f64 = ts.iter().map(|t| t.probability).sum();
            ensure((total - 1.0).abs() <= 1e-9, || format!("seed {seed} state {s}: {total}"))?;
        }
        if seed < 300 {
            let again = build_mdp(&attempts, &ideals, &RewardPolicy::default()).map_err(|e| e.to_string())?;
            ensure(again == g, || format!("seed {seed}: rebuild differs"))?;
            let mut shuffled = attempts.clone();
            shuffled.shuffle(&mut StdRng::seed_from_u64(seed));
            let other = build_mdp(&shuffled, &ideals, &RewardPolicy::default()).map_err(|e| e.to_string())?;
            ensure(by_key(&other) == by_key(&g), || format!("seed {seed}: shuffled input changes the graph"))?;
        }
    }
    Ok("1000 graphs stochastic, 300 rebuilt identically and from shuffled input".into())
}

fn closed_form(t: [f64; 3], d: [f64; 3]) -> f64 {
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (nt, nd) = (norm(t), norm(d));
    let x = t.map(|a| a / nt);
    let y = if nd == 0.0 { d } else { d.map(|a| a / nd) };
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = (0..3).map(|i| x[i] * y[i]).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx)
}

/// U and one-sided p-values by listing every split of the pooled values.
fn enumerate_mwu(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let u_of = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .flat_map(|p| y.iter().map(move |q| if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 }))
            .sum()
    };
    let u = u_of(a, b);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << pooled.len()) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let x: Vec<f64> = (0..pooled.len()).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
        let y: Vec<f64> = (0..pooled.len()).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
        let v = u_of(&x, &y);
        total += 1;
        le += (v <= u) as u64;
        ge += (v >= u) as u64;
    }
    (u, le as f64 / total as f64, ge as f64 / total as f64)
}

fn metric_oracles() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..1000 {
        let t0 = rng.gen_range(0.0..50.0);
        let t1 = t0 + rng.gen_range(0.5..50.0);
        let t = [t0, t1, t1 + rng.gen_range(0.5..50.0)];
        let d: [u32; 3] = [rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..8)];
        let points: Vec<TimelinePoint> = (0..3)
            .map(|i| TimelinePoint {
                t_elapsed: t[i],
                dist_sol: d[i],
                hint_employed: false,
            })
            .collect();
        let got = fit_beta(&points, BetaFilter::All).map_err(|e| e.to_string())?;
        let want = closed_form(t, d.map(f64::from));
        ensure((got - want).abs() <= 1e-9, || format!("{t:?} {d:?}: {got} vs {want}"))?;
    }
    let mut cases = 0;
    for n in 1..=5 {
        for m in 1..=5 {
            for _ in 0..20 {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
                let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0..6) as f64).collect();
                let (u, le, ge) = enumerate_mwu(&a, &b);
                let less = mann_whitney_u(&a, &b, Alternative::Less);
                let greater = mann_whitney_u(&a, &b, Alternative::Greater);
                ensure(less.u == u, || format!("{a:?} {b:?}: U {} vs {u}", less.u))?;
                ensure((less.p - le).abs() < 1e-12 && (greater.p - ge).abs() < 1e-12, || format!("{a:?} {b:?}: p"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("1000 three-point fits within 1e-9, {cases} rank tests exact"))
}

fn cold_start() -> Check {
    let (dir, config) = support::scratch();
    std::fs::remove_file(dir.path().join("attempts.jsonl")).map_err(|e| e.to_string())?;
    let mut engine = Engine::open(config).map_err(|e| e.to_string())?;
    let ids: Vec<String> = engine.list_exercises().into_iter().map(|e| e.id).collect();
    let mut chain = 0;
    for id in &ids {
        let g = engine.graph(id).map_err(|e| e.to_string())?;
        let mut student = parse("SELECT name FROM location").unwrap();
        let mut steps = 0;
        loop {
            let h = engine.suggest(id, &render(&student)).map_err(|e| format!("{id}: {e}"))?;
            if h.target_state == h.matched_state && g.states[h.target_state].is_passing() {
                break;
            }
            student = apply_hint(&student, &h).map_err(|e| e.to_string())?;
            steps += 1;
            ensure(steps <= g.len(), || format!("{id}: chain does not end"))?;
        }
        let score = engine.store().grade(engine.store().exercise(id).unwrap(), &render(&student));
        ensure(score == 100.0, || format!("{id}: chain ends at score {score}"))?;
        chain += steps;
    }
    Ok(format!("{} exercises with no attempts, {chain} hints to full solutions", ids.len()))
}

fn penalty() -> Check {
    let (_dir, config) = support::scratch();
    let mut engine = Engine::open(config).map_err(|e| e.to_string())?;
    let hint = |sql: &str| ClientEvent {
        user: "u1".into(),
        exercise_id: "dallas-count".into(),
        kind: EventKind::HintEmployed,
        timestamp: None,
        query_snapshot: Some(sql.into()),
    };
    engine
        .record_events(vec![hint("SELECT COUNT(*)"), hint("SELECT COUNT(*) FROM employee e")])
        .map_err(|e| e.to_string())?;
    let s = engine
        .submit(
            "dallas-count",
            &QueryRequest {
                user: "u1".into(),
                query_text: DALLAS_IDEAL.into(),
            },
        )
        .map_err(|e| e.to_string())?;
    ensure(s.raw_score == 100.0 && s.hints_used == 2 && s.final_score == 94.0, || format!("{s:?}"))?;
    Ok("raw 100, 2 hints, moderate -> 94".into())
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 9] = [
        ("reference hints", reference_hints),
        ("tree distance oracle", tree_distance),
        ("value iteration on the example graph", value_iteration),
        ("hint progressivity", progressivity),
        ("parser round trip", parser_round_trip),
        ("stochasticity and dedup", stochasticity),
        ("metric oracles", metric_oracles),
        ("cold start", cold_start),
        ("penalty arithmetic", penalty),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
