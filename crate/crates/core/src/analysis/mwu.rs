use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to be smaller than `b`.
    Less,
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Largest `n * m` for which the null distribution is enumerated.
pub const EXACT_LIMIT: usize = 400;

/// Midranks of the pooled sample, doubled so they are integers.
fn doubled_ranks(pooled: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        // Positions i..=j hold ranks i+1..=j+1; twice their mean is i+j+2.
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be nonempty");
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_ranks(&pooled);
    let r2: u64 = ranks[..n].iter().sum();
    // U = R - n(n+1)/2, all doubled.
    let u2 = r2 - (n * (n + 1)) as u64;
    let u = u2 as f64 / 2.0;

    let (p_less, p_greater, exact) = if n * m <= EXACT_LIMIT {
        let dist = rank_sum_distribution(&ranks, n);
        let total: f64 = dist.iter().sum();
        let le: f64 = dist.iter().take(r2 as usize + 1).sum();
        let ge: f64 = dist.iter().skip(r2 as usize).sum();
        (le / total, ge / total, true)
    } else {
        let big_n = (n + m) as f64;
        let ties: f64 = tie_sizes(&pooled).iter().map(|&t| t * t * t - t).sum();
        let var = n as f64 * m as f64 / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
        let mean = n as f64 * m as f64 / 2.0;
        if var <= 0.0 {
            (1.0, 1.0, false)
        } else {
            let z = Normal::new(0.0, 1.0).unwrap();
            let sd = var.sqrt();
            (z.cdf((u - mean + 0.5) / sd), 1.0 - z.cdf((u - mean - 0.5) / sd), false)
        }
    };
    let p = match alternative {
        Alternative::Less => p_less,
        Alternative::Greater => p_greater,
        Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
    };
    MannWhitney { u, p, exact }
}

fn tie_sizes(pooled: &[f64]) -> Vec<f64> {
    let mut v = pooled.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        out.push((j - i + 1) as f64);
        i = j + 1;
    }
    out
}

/// Number of size-`n` subsets of the pooled ranks with each doubled rank
/// sum, indexed by that sum.
fn rank_sum_distribution(ranks: &[u64], n: usize) -> Vec<f64> {
    let max: usize = ranks.iter().map(|&r| r as usize).sum();
    // ways[k][s]: subsets of size k with doubled sum s.
    let mut ways = vec![vec![0.0f64; max + 1]; n + 1];
    ways[0][0] = 1.0;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let (prev, cur) = (&lo[k - 1], &mut hi[0]);
            for s in (r..=max).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    ways.swap_remove(n)
}
