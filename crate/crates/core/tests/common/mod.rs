//! Independent oracles: per-family scores straight from raw data and
//! exhaustive DAG enumeration.
#![allow(dead_code)]

use std::collections::HashMap;

use exactbn::{build_ct, local_score, ContingencyTable, Dataset, ScoreSpec, VarSet};
use rand::Rng;

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, rows: usize, arities: &[u32]) -> Dataset {
    let arities: Vec<u32> = (0..n)
        .map(|_| arities[rng.random_range(0..arities.len())])
        .collect();
    let mut cells = Vec::with_capacity(n * rows);
    for _ in 0..rows {
        // each column copies an earlier one with some probability, so there
        // is structure to find
        let start = cells.len();
        for (v, &r) in arities.iter().enumerate() {
            let x = if v > 0 && rng.random_bool(0.5) {
                let u = rng.random_range(0..v);
                cells[start + u] % r
            } else {
                rng.random_range(0..r)
            };
            cells.push(x);
        }
    }
    Dataset::new(arities, cells).unwrap()
}

/// Counts `(parent config, child value)` pairs by hashing raw rows.
pub fn direct_family_counts(
    data: &Dataset,
    v: usize,
    parents: VarSet,
) -> HashMap<Vec<u32>, Vec<u32>> {
    let r = data.arities()[v] as usize;
    let mut out: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
    for row in data.rows() {
        let config = parents.iter().map(|p| row[p]).collect();
        out.entry(config).or_insert_with(|| vec![0; r])[row[v] as usize] += 1;
    }
    out
}

/// Local score of `v | parents`, built from a fresh projection of the data.
pub fn family_score(data: &Dataset, spec: &ScoreSpec, v: usize, parents: VarSet) -> f64 {
    let ct: ContingencyTable = build_ct(data, parents.with(v)).unwrap();
    local_score(&ct.to_cft(v).unwrap(), spec)
}

/// `table[v][parent mask]` for every `v` and parent set not containing `v`.
pub fn all_family_scores(data: &Dataset, spec: &ScoreSpec) -> Vec<Vec<f64>> {
    let n = data.n();
    (0..n)
        .map(|v| {
            (0..1u32 << n)
                .map(|m| {
                    if m & (1 << v) != 0 {
                        f64::NAN
                    } else {
                        family_score(data, spec, v, VarSet::from_mask(m))
                    }
                })
                .collect()
        })
        .collect()
}

fn has_cycle(parents: &[u32]) -> bool {
    let mut left: u32 = (1u32 << parents.len()) - 1;
    loop {
        let free: Vec<usize> = (0..parents.len())
            .filter(|&v| left & (1 << v) != 0 && parents[v] & left == 0)
            .collect();
        if free.is_empty() {
            return left != 0;
        }
        for v in free {
            left &= !(1 << v);
        }
    }
}

/// Every DAG on `n` nodes as a parent-mask vector. Parent sets are assigned
/// variable by variable; a partial assignment with a cycle among the
/// assigned variables is abandoned.
pub fn all_dags(n: usize) -> Vec<Vec<u32>> {
    fn extend(n: usize, partial: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let v = partial.len();
        if v == n {
            out.push(partial.clone());
            return;
        }
        for m in 0..1u32 << n {
            if m & (1 << v) != 0 {
                continue;
            }
            partial.push(m);
            // only arcs among assigned variables can close a cycle yet
            let assigned = (1u32 << (v + 1)) - 1;
            let sub: Vec<u32> = partial.iter().map(|p| p & assigned).collect();
            if !has_cycle(&sub) {
                extend(n, partial, out);
            }
            partial.pop();
        }
    }
    let mut out = Vec::new();
    extend(n, &mut Vec::new(), &mut out);
    out.retain(|g| !has_cycle(g));
    out
}

pub fn dag_score(scores: &[Vec<f64>], dag: &[u32]) -> f64 {
    dag.iter()
        .enumerate()
        .map(|(v, &p)| scores[v][p as usize])
        .sum()
}

/// Best score over all DAGs, and how many DAGs attain it within `tol`.
pub fn best_over(dags: &[Vec<u32>], scores: &[Vec<f64>], tol: f64) -> (f64, usize) {
    let best = dags
        .iter()
        .map(|g| dag_score(scores, g))
        .fold(f64::NEG_INFINITY, f64::max);
    let ties = dags
        .iter()
        .filter(|g| (dag_score(scores, g) - best).abs() <= tol * best.abs().max(1.0))
        .count();
    (best, ties)
}

/// DAGs whose every parent precedes its child in `ord`.
pub fn consistent_with<'a>(
    dags: &'a [Vec<u32>],
    ord: &[usize],
) -> impl Iterator<Item = &'a Vec<u32>> + 'a {
    let mut before = vec![0u32; ord.len()];
    let mut seen = 0u32;
    for &v in ord {
        before[v] = seen;
        seen |= 1 << v;
    }
    dags.iter()
        .filter(move |g| g.iter().enumerate().all(|(v, &p)| p & !before[v] == 0))
}

pub fn relative_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Known DAG counts on 1..=5 labelled nodes.
pub const DAG_COUNTS: [usize; 5] = [1, 3, 25, 543, 29281];
