//! Slow reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use sqlhint_core::{Node, NodeKind};

pub const ALPHABET: [&str; 3] = ["a", "b", "c"];

fn labelled(label: &str, children: Vec<Node>) -> Node {
    Node::new(NodeKind::Identifier, label, children)
}

/// Every ordered labelled tree with exactly `n` nodes.
pub fn all_trees(n: usize, alphabet: &[&str]) -> Vec<Node> {
    let mut forests: HashMap<usize, Vec<Vec<Node>>> = HashMap::new();
    let mut trees: HashMap<usize, Vec<Node>> = HashMap::new();
    forests.insert(0, vec![Vec::new()]);
    for k in 1..=n {
        let mut ts = Vec::new();
        for f in &forests[&(k - 1)] {
            for l in alphabet {
                ts.push(labelled(l, f.clone()));
            }
        }
        trees.insert(k, ts);
        let mut fs = Vec::new();
        for first in 1..=k {
            for t in &trees[&first] {
                for rest in &forests[&(k - first)] {
                    let mut f = Vec::with_capacity(rest.len() + 1);
                    f.push(t.clone());
                    f.extend(rest.iter().cloned());
                    fs.push(f);
                }
            }
        }
        forests.insert(k, fs);
    }
    trees.remove(&n).unwrap_or_default()
}

struct Flat {
    token: Vec<(NodeKind, String)>,
    pre: Vec<usize>,
    post: Vec<usize>,
}

fn flatten(root: &Node) -> Flat {
    fn go(n: &Node, f: &mut Flat, post: &mut usize) {
        let id = f.token.len();
        f.token.push((n.kind, n.label.clone()));
        f.pre.push(id);
        f.post.push(0);
        for c in &n.children {
            go(c, f, post);
        }
        f.post[id] = *post;
        *post += 1;
    }
    let mut f = Flat {
        token: Vec::new(),
        pre: Vec::new(),
        post: Vec::new(),
    };
    go(root, &mut f, &mut 0);
    f
}

impl Flat {
    fn ancestor(&self, u: usize, v: usize) -> bool {
        self.pre[u] < self.pre[v] && self.post[u] > self.post[v]
    }

    fn left_of(&self, u: usize, v: usize) -> bool {
        self.pre[u] < self.pre[v] && self.post[u] < self.post[v]
    }
}

/// Minimum-cost edit mapping found by enumerating every valid mapping.
pub fn mapping_distance(a: &Node, b: &Node) -> u32 {
    let fa = flatten(a);
    let fb = flatten(b);
    let mut pairs = Vec::new();
    let mut used = vec![false; fb.token.len()];
    let mut best = u32::MAX;
    enumerate(&fa, &fb, 0, &mut pairs, &mut used, &mut best);
    best
}

fn enumerate(
    fa: &Flat,
    fb: &Flat,
    i: usize,
    pairs: &mut Vec<(usize, usize)>,
    used: &mut Vec<bool>,
    best: &mut u32,
) {
    if i == fa.token.len() {
        let relabels = pairs.iter().filter(|&&(x, y)| fa.token[x] != fb.token[y]).count();
        let cost = relabels + (fa.token.len() - pairs.len()) + (fb.token.len() - pairs.len());
        *best = (*best).min(cost as u32);
        return;
    }
    enumerate(fa, fb, i + 1, pairs, used, best);
    for j in 0..fb.token.len() {
        if used[j] {
            continue;
        }
        let ok = pairs.iter().all(|&(x, y)| {
            fa.ancestor(x, i) == fb.ancestor(y, j)
                && fa.ancestor(i, x) == fb.ancestor(j, y)
                && fa.left_of(x, i) == fb.left_of(y, j)
        });
        if ok {
            used[j] = true;
            pairs.push((i, j));
            enumerate(fa, fb, i + 1, pairs, used, best);
            pairs.pop();
            used[j] = false;
        }
    }
}

/// Length of the shortest unit-cost edit script turning `a` into `b`, by
/// breadth-first search over forests of bounded size.
pub fn script_distance(a: &Node, b: &Node, alphabet: &[&str]) -> u32 {
    let bound = a.size().max(b.size());
    let start = vec![a.clone()];
    let goal = vec![b.clone()];
    if start == goal {
        return 0;
    }
    let mut seen: HashSet<Vec<Node>> = HashSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([(start, 0u32)]);
    while let Some((forest, d)) = queue.pop_front() {
        for next in neighbours(&forest, alphabet, bound) {
            if next == goal {
                return d + 1;
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    unreachable!("edit graph is connected")
}

fn forest_size(f: &[Node]) -> usize {
    f.iter().map(Node::size).sum()
}

/// Applies `op` to the child list addressed by `path` (empty path = top level).
fn with_list(forest: &[Node], path: &[usize], op: &mut dyn FnMut(&mut Vec<Node>)) -> Vec<Node> {
    let mut f = forest.to_vec();
    fn go(list: &mut Vec<Node>, path: &[usize], op: &mut dyn FnMut(&mut Vec<Node>)) {
        match path.split_first() {
            None => op(list),
            Some((&i, rest)) => go(&mut list[i].children, rest, op),
        }
    }
    go(&mut f, path, op);
    f
}

fn list_paths(forest: &[Node]) -> Vec<(Vec<usize>, usize)> {
    fn go(list: &[Node], path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
        out.push((path.clone(), list.len()));
        for (i, n) in list.iter().enumerate() {
            path.push(i);
            go(&n.children, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(forest, &mut Vec::new(), &mut out);
    out
}

fn neighbours(forest: &[Node], alphabet: &[&str], bound: usize) -> Vec<Vec<Node>> {
    let mut out = Vec::new();
    let size = forest_size(forest);
    for (path, len) in list_paths(forest) {
        for i in 0..len {
            // relabel
            for l in alphabet {
                out.push(with_list(forest, &path, &mut |list| list[i].label = (*l).to_string()));
            }
            // delete, splicing children into place
            out.push(with_list(forest, &path, &mut |list| {
                let removed = list.remove(i);
                for (k, c) in removed.children.into_iter().enumerate() {
                    list.insert(i + k, c);
                }
            }));
        }
        // insert a node adopting the range [from, to)
        if size < bound {
            for from in 0..=len {
                for to in from..=len {
                    for l in alphabet {
                        out.push(with_list(forest, &path, &mut |list| {
                            let adopted: Vec<Node> = list.drain(from..to).collect();
                            list.insert(from, labelled(l, adopted));
                        }));
                    }
                }
            }
        }
    }
    out
}
