use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::local_scores::LocalScoreStore;
use crate::precision::ScoreValue;
use crate::varset::VarSet;
use crate::MAX_VARS;

/// A permutation of the variables `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 || n > MAX_VARS {
            return Err(Error::InvalidArgument(format!(
                "an ordering needs 1 to {MAX_VARS} variables, got {n}"
            )));
        }
        let mut seen = VarSet::EMPTY;
        for &v in &order {
            if v >= n || seen.contains(v) {
                return Err(Error::InvalidArgument(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
            seen = seen.with(v);
        }
        Ok(Ordering(order))
    }

    pub fn identity(n: usize) -> Self {
        Ordering((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `position[v]` is the place of `v` in the ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.n()];
        for (i, &v) in self.0.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }

    /// Cyclic shift: `k > 0` moves every variable `k` places to the right.
    #[must_use]
    pub fn rotated(&self, k: i64) -> Self {
        let n = self.n() as i64;
        let k = k.rem_euclid(n) as usize;
        let mut out = self.0.clone();
        out.rotate_right(k);
        Ordering(out)
    }

    /// The ordering with the variables at positions `i` and `j` exchanged.
    #[must_use]
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.0.clone();
        out.swap(i, j);
        Ordering(out)
    }

    #[must_use]
    pub fn reversed(&self) -> Self {
        Ordering(self.0.iter().rev().copied().collect())
    }
}

impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let order = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad variable '{t}' in ordering")))
            })
            .collect::<Result<_>>()?;
        Ordering::new(order)
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A DAG given by the parent set of every variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    parents: Vec<VarSet>,
}

impl Network {
    /// Errors on out-of-range parents, self-loops and cycles.
    pub fn new(parents: Vec<VarSet>) -> Result<Self> {
        let n = parents.len();
        if n == 0 || n > MAX_VARS {
            return Err(Error::InvalidArgument(format!(
                "a network needs 1 to {MAX_VARS} variables, got {n}"
            )));
        }
        let all = VarSet::full(n);
        for (v, &p) in parents.iter().enumerate() {
            if p.contains(v) {
                return Err(Error::InvalidArgument(format!(
                    "variable {v} is its own parent"
                )));
            }
            if !p.is_subset(all) {
                return Err(Error::InvalidArgument(format!(
                    "parents {p:?} of {v} are outside 0..{n}"
                )));
            }
        }
        let net = Network { parents };
        if net.topological_order().is_none() {
            return Err(Error::InvalidArgument("parent sets contain a cycle".into()));
        }
        Ok(net)
    }

    pub fn empty(n: usize) -> Self {
        Network {
            parents: vec![VarSet::EMPTY; n],
        }
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, v: usize) -> VarSet {
        self.parents[v]
    }

    pub fn parent_sets(&self) -> &[VarSet] {
        &self.parents
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    /// Arcs `(parent, child)` sorted by child, then parent.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, p)| p.iter().map(move |u| (u, v)))
            .collect()
    }

    /// Kahn's algorithm taking the lowest ready variable first; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut placed = VarSet::EMPTY;
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next =
                (0..n).find(|&v| !placed.contains(v) && self.parents[v].is_subset(placed))?;
            placed = placed.with(next);
            order.push(next);
        }
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// True when every parent precedes its child in `ord`.
    pub fn is_consistent_with(&self, ord: &Ordering) -> bool {
        if ord.n() != self.n() {
            return false;
        }
        let mut before = VarSet::EMPTY;
        for &v in ord.as_slice() {
            if !self.parents[v].is_subset(before) {
                return false;
            }
            before = before.with(v);
        }
        true
    }

    /// Sum of the stored local scores of every family, accumulated in `f64`.
    pub fn score<S: ScoreValue>(&self, store: &LocalScoreStore<S>) -> Result<f64> {
        if store.n() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "network has {} variables, scores have {}",
                self.n(),
                store.n()
            )));
        }
        self.parents
            .iter()
            .enumerate()
            .map(|(v, &p)| store.score(v, p).map(S::to_f64))
            .sum()
    }

    /// The same network after the column permutation of
    /// [`Dataset::permute_columns`](crate::Dataset::permute_columns).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let ord = Ordering::new(perm.to_vec())?;
        if ord.n() != self.n() {
            return Err(Error::InvalidArgument("permutation length differs".into()));
        }
        let new_of_old = ord.positions();
        let parents = perm
            .iter()
            .map(|&old| self.parents[old].iter().map(|p| new_of_old[p]).collect())
            .collect();
        Ok(Network { parents })
    }
}
