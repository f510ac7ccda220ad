//! Seeded random generator for queries in the supported subset.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const TABLES: [&str; 5] = ["employee", "department", "location", "project", "orders"];
const COLUMNS: [&str; 7] = ["id", "name", "dept_id", "salary", "region", "loc_id", "hired"];
const ALIASES: [&str; 5] = ["e", "d", "l", "p", "o"];
const AGGS: [&str; 5] = ["COUNT", "SUM", "AVG", "MIN", "MAX"];
const OPS: [&str; 6] = ["=", "<>", "<", "<=", ">", ">="];

pub struct QueryGen {
    rng: StdRng,
}

impl QueryGen {
    pub fn new(seed: u64) -> Self {
        QueryGen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut StdRng {
        &mut self.rng
    }

    pub fn query(&mut self) -> String {
        self.query_at(0)
    }

    /// A random prefix (by whitespace-separated words) of a random query.
    pub fn partial_query(&mut self) -> String {
        let q = self.query();
        let words: Vec<&str> = q.split(' ').collect();
        let keep = self.rng.gen_range(1..=words.len());
        words[..keep].join(" ")
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).unwrap()
    }

    fn column(&mut self, aliases: &[String]) -> String {
        let col = self.pick(&COLUMNS);
        if !aliases.is_empty() && self.rng.gen_bool(0.5) {
            let a = aliases.choose(&mut self.rng).unwrap();
            format!("{a}.{col}")
        } else {
            col.to_string()
        }
    }

    fn literal(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => self.rng.gen_range(-5..100).to_string(),
            1 => format!("'{}'", self.pick(&["SALES", "DALLAS", "x", "it''s"])),
            _ => format!("{}.5", self.rng.gen_range(0..10)),
        }
    }

    fn operand(&mut self, aliases: &[String]) -> String {
        if self.rng.gen_bool(0.6) {
            self.column(aliases)
        } else {
            self.literal()
        }
    }

    fn query_at(&mut self, depth: usize) -> String {
        let mut aliases: Vec<String> = Vec::new();
        let mut from = Vec::new();
        let n_tables = self.rng.gen_range(1..=3);
        let mut used = TABLES.to_vec();
        used.shuffle(&mut self.rng);
        for (i, t) in used.iter().take(n_tables).enumerate() {
            let item = if self.rng.gen_bool(0.5) {
                let a = format!("{}{}", ALIASES[i], depth);
                aliases.push(a.clone());
                format!("{t} {a}")
            } else {
                t.to_string()
            };
            from.push(item);
        }
        let from_sql = if from.len() == 2 && self.rng.gen_bool(0.3) {
            let on = format!("{} = {}", self.column(&aliases), self.column(&aliases));
            format!("{} JOIN {} ON {on}", from[0], from[1])
        } else {
            from.join(", ")
        };

        let mut items = Vec::new();
        for _ in 0..self.rng.gen_range(1..=3) {
            let item = match self.rng.gen_range(0..5) {
                0 => "*".to_string(),
                1 => {
                    let agg = self.pick(&AGGS);
                    if agg == "COUNT" && self.rng.gen_bool(0.4) {
                        "COUNT(*)".to_string()
                    } else {
                        let distinct = if self.rng.gen_bool(0.2) { "DISTINCT " } else { "" };
                        format!("{agg}({distinct}{})", self.column(&aliases))
                    }
                }
                2 => format!("{} AS c{}", self.column(&aliases), self.rng.gen_range(0..9)),
                _ => self.column(&aliases),
            };
            items.push(item);
        }
        let distinct = if self.rng.gen_bool(0.15) { "DISTINCT " } else { "" };
        let mut sql = format!("SELECT {distinct}{} FROM {from_sql}", items.join(", "));

        if self.rng.gen_bool(0.7) {
            let cond = self.condition(&aliases, depth, 0);
            sql.push_str(&format!(" WHERE {cond}"));
        }
        if self.rng.gen_bool(0.3) {
            let n = self.rng.gen_range(1..=2);
            let cols: Vec<String> = (0..n).map(|_| self.column(&aliases)).collect();
            sql.push_str(&format!(" GROUP BY {}", cols.join(", ")));
            if self.rng.gen_bool(0.5) {
                let v = self.rng.gen_range(0..5);
                sql.push_str(&format!(" HAVING COUNT(*) > {v}"));
            }
        }
        if self.rng.gen_bool(0.3) {
            let n = self.rng.gen_range(1..=2);
            let cols: Vec<String> = (0..n)
                .map(|_| {
                    let c = self.column(&aliases);
                    match self.rng.gen_range(0..3) {
                        0 => format!("{c} DESC"),
                        _ => c,
                    }
                })
                .collect();
            sql.push_str(&format!(" ORDER BY {}", cols.join(", ")));
        }
        sql
    }

    fn condition(&mut self, aliases: &[String], depth: usize, level: usize) -> String {
        let n = if level < 2 { self.rng.gen_range(1..=3) } else { 1 };
        let joiner = if self.rng.gen_bool(0.7) { " AND " } else { " OR " };
        let parts: Vec<String> = (0..n)
            .map(|_| {
                if level < 1 && self.rng.gen_bool(0.2) {
                    let inner = self.condition(aliases, depth, level + 1);
                    if self.rng.gen_bool(0.3) {
                        format!("NOT ({inner})")
                    } else {
                        format!("({inner})")
                    }
                } else {
                    self.predicate(aliases, depth)
                }
            })
            .collect();
        parts.join(joiner)
    }

    fn predicate(&mut self, aliases: &[String], depth: usize) -> String {
        let lhs = self.column(aliases);
        match self.rng.gen_range(0..6) {
            0 | 1 => {
                let op = self.pick(&OPS);
                format!("{lhs} {op} {}", self.operand(aliases))
            }
            2 => {
                let not = if self.rng.gen_bool(0.3) { "NOT " } else { "" };
                if depth < 1 && self.rng.gen_bool(0.5) {
                    format!("{lhs} {not}IN ({})", self.query_at(depth + 1))
                } else {
                    let k = self.rng.gen_range(1..=3);
                    let items: Vec<String> = (0..k).map(|_| self.literal()).collect();
                    format!("{lhs} {not}IN ({})", items.join(", "))
                }
            }
            3 => {
                let not = if self.rng.gen_bool(0.3) { "NOT " } else { "" };
                format!("{lhs} {not}LIKE '{}%'", self.pick(&["S", "D", "a_"]))
            }
            4 => {
                let lo = self.rng.gen_range(0..50);
                format!("{lhs} BETWEEN {lo} AND {}", lo + self.rng.gen_range(0..50))
            }
            _ => {
                if depth < 1 && self.rng.gen_bool(0.3) {
                    let op = self.pick(&OPS);
                    format!("{lhs} {op} ({})", self.query_at(depth + 1))
                } else {
                    format!("{lhs} = {}", self.column(aliases))
                }
            }
        }
    }
}

/// Shuffles the children of every set-like node.
pub fn permute_unordered(node: &mut sqlhint_core::Node, rng: &mut StdRng) {
    use sqlhint_core::NodeKind::*;
    if matches!(node.kind, SelectList | FromList | LogicalAnd | LogicalOr | GroupBy) {
        node.children.shuffle(rng);
    }
    for c in &mut node.children {
        permute_unordered(c, rng);
    }
}

/// Applies one small random edit: changes a literal, or drops an item from
/// a select list, FROM list or conjunction that has more than one.
pub fn mutate(node: &mut sqlhint_core::Node, rng: &mut StdRng) -> bool {
    use sqlhint_core::NodeKind::*;
    let mut sites = Vec::new();
    collect_sites(node, &mut Vec::new(), &mut sites);
    let Some(path) = sites.choose(rng).cloned() else {
        return false;
    };
    let mut target = &mut *node;
    for &i in &path {
        target = &mut target.children[i];
    }
    if target.kind == Literal {
        target.label = rng.gen_range(100..120).to_string();
    } else {
        let i = rng.gen_range(0..target.children.len());
        target.children.remove(i);
    }
    true
}

fn collect_sites(node: &sqlhint_core::Node, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    use sqlhint_core::NodeKind::*;
    let list = matches!(node.kind, SelectList | FromList | LogicalAnd) && node.children.len() > 1;
    if list || node.kind == Literal {
        out.push(path.clone());
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        collect_sites(c, path, out);
        path.pop();
    }
}
