mod support;

use rand::Rng;
use sqlhint_core::steps::{decompose, extension_of};
use sqlhint_core::{canonicalize_aliases, parse, Node, NodeKind, QueryTree};
use support::gen::QueryGen;

fn canonical(sql: &str) -> QueryTree {
    canonicalize_aliases(&parse(sql).unwrap()).0
}

#[test]
fn decomposition_invariants_on_random_queries() {
    let mut g = QueryGen::new(21);
    for _ in 0..500 {
        let sql = g.query();
        let q = canonical(&sql);
        let steps = decompose(&q).unwrap();
        assert_eq!(steps.last().unwrap().tree, q, "{sql}");
        let first = &steps[0].tree.root;
        assert_eq!(first.children.len(), 1);
        assert_eq!(first.children[0].kind, NodeKind::SelectList);
        for (i, s) in steps.iter().enumerate() {
            assert_eq!(s.index, i);
            assert_eq!(s.is_final, i + 1 == steps.len());
        }
        for w in steps.windows(2) {
            assert_ne!(w[0].tree, w[1].tree);
            assert!(w[0].tree.size() <= w[1].tree.size());
            assert!(extension_of(&w[0].tree, &w[1].tree), "{sql}");
        }
        assert_eq!(decompose(&q).unwrap(), steps);
    }
}

fn delete_random_subtree(node: &mut Node, rng: &mut impl Rng) -> bool {
    if node.children.is_empty() {
        return false;
    }
    let i = rng.gen_range(0..node.children.len());
    if rng.gen_bool(0.35) || !delete_random_subtree(&mut node.children[i], rng) {
        node.children.remove(i);
    }
    true
}

#[test]
fn deleting_a_subtree_gives_an_extension() {
    let mut g = QueryGen::new(22);
    for _ in 0..500 {
        let t = canonical(&g.query());
        let mut smaller = t.clone();
        delete_random_subtree(&mut smaller.root, g.rng());
        assert!(extension_of(&smaller, &t));
        assert!(!extension_of(&t, &smaller));
    }
}
