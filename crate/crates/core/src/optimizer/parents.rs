use std::path::Path;

use rayon::prelude::*;

use super::{Network, Ordering};
use crate::error::{try_filled, Error, Result};
use crate::local_scores::cache::{self, expect_header, CacheHeader, CacheKind};
use crate::local_scores::{ComputeOptions, LocalScoreStore};
use crate::precision::{Precision, ScoreValue};
use crate::scoring::ScoreSpec;
use crate::varset::{collapse_mask, expand, expand_mask, VarSet};

/// For every variable `v` and candidate set `C ⊆ V \ {v}` (by collapsed
/// index), the best-scoring parent set inside `C` and its score.
#[derive(Clone, Debug, PartialEq)]
pub struct BestParents<S> {
    spec: ScoreSpec,
    arities: Vec<u32>,
    parents: Vec<Vec<u32>>,
    scores: Vec<Vec<S>>,
}

impl<S: ScoreValue> BestParents<S> {
    pub fn compute(store: &LocalScoreStore<S>, opts: &ComputeOptions) -> Result<Self> {
        Self::compute_with_counts(store, opts).map(|(bp, _)| bp)
    }

    /// Also returns, per variable, the number of score comparisons made.
    pub fn compute_with_counts(
        store: &LocalScoreStore<S>,
        opts: &ComputeOptions,
    ) -> Result<(Self, Vec<u64>)> {
        let n = store.n();
        let per_var = opts.install(|| {
            (0..n)
                .into_par_iter()
                .map(|v| best_for_var(store.scores_of(v)))
                .collect::<Result<Vec<_>>>()
        })??;
        let mut parents = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for (p, s, c) in per_var {
            parents.push(p);
            scores.push(s);
            counts.push(c);
        }
        let bp = BestParents {
            spec: *store.spec(),
            arities: store.arities().to_vec(),
            parents,
            scores,
        };
        Ok((bp, counts))
    }

    pub fn n(&self) -> usize {
        self.arities.len()
    }

    pub fn spec(&self) -> &ScoreSpec {
        &self.spec
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    /// Collapsed index of the best parents of `v` inside candidate set `index`.
    #[inline]
    pub fn parents_index(&self, v: usize, index: u32) -> u32 {
        self.parents[v][index as usize]
    }

    #[inline]
    pub fn score_index(&self, v: usize, index: u32) -> S {
        self.scores[v][index as usize]
    }

    /// Best parents of `v` chosen from `candidates`, with their score.
    pub fn best(&self, v: usize, candidates: VarSet) -> Result<(VarSet, S)> {
        if v >= self.n() || !candidates.is_subset(VarSet::full(self.n())) {
            return Err(Error::InvalidArgument(format!(
                "no candidate set {candidates:?} for variable {v}"
            )));
        }
        let idx = crate::varset::collapse(v, candidates)?;
        Ok((
            expand(v, self.parents_index(v, idx)),
            self.score_index(v, idx),
        ))
    }

    /// The best network consistent with `ord` and its score, summed in
    /// ordering order.
    pub fn network_for(&self, ord: &Ordering) -> Result<(Network, S)> {
        if ord.n() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "ordering has {} variables, expected {}",
                ord.n(),
                self.n()
            )));
        }
        let mut preds = 0u32;
        let mut total = S::from_f64(0.0);
        let mut parents = vec![VarSet::EMPTY; self.n()];
        for &v in ord.as_slice() {
            let idx = collapse_mask(v, preds);
            parents[v] = VarSet::from_mask(expand_mask(v, self.parents_index(v, idx)));
            total = total + self.score_index(v, idx);
            preds |= 1 << v;
        }
        Ok((Network::new(parents)?, total))
    }

    /// Score of [`network_for`](Self::network_for) without building the network.
    pub fn score_for(&self, ord: &Ordering) -> Result<S> {
        if ord.n() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "ordering has {} variables, expected {}",
                ord.n(),
                self.n()
            )));
        }
        let mut preds = 0u32;
        let mut total = S::from_f64(0.0);
        for &v in ord.as_slice() {
            total = total + self.score_index(v, collapse_mask(v, preds));
            preds |= 1 << v;
        }
        Ok(total)
    }

    fn header(&self) -> CacheHeader {
        CacheHeader {
            kind: CacheKind::BestParents,
            spec: self.spec,
            precision: Precision::of::<S>(),
            arities: self.arities.clone(),
        }
    }

    /// Serializes the parent indices in the `BNBP` format; scores are not stored.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.header().encode(&mut out);
        for column in &self.parents {
            for idx in column {
                out.extend_from_slice(&idx.to_le_bytes());
            }
        }
        out
    }

    /// Restores saved parent indices, taking their scores from `store`.
    pub fn from_bytes(bytes: &[u8], store: &LocalScoreStore<S>) -> Result<Self> {
        let (header, mut r) = expect_header::<S>(bytes, CacheKind::BestParents)?;
        let expected = LocalScoreStore::header(store, CacheKind::BestParents);
        header.ensure_compatible(&expected)?;
        let per_var = 1usize << (header.n() - 1);
        let mut parents = Vec::with_capacity(header.n());
        let mut scores = Vec::with_capacity(header.n());
        for v in 0..header.n() {
            let column = (0..per_var).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            for (cs, &p) in column.iter().enumerate() {
                if p as usize >= per_var || p & !(cs as u32) != 0 {
                    return Err(Error::Cache(format!(
                        "best parents {p} of variable {v} not inside candidate set {cs}"
                    )));
                }
            }
            scores.push(column.iter().map(|&p| store.get(v, p)).collect());
            parents.push(column);
        }
        r.finish()?;
        Ok(BestParents {
            spec: header.spec,
            arities: header.arities,
            parents,
            scores,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        cache::write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>, store: &LocalScoreStore<S>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, store)
    }
}

/// Candidate sets in ascending index order: start from the set itself, then
/// keep any strictly better best-of-one-smaller-subset.
fn best_for_var<S: ScoreValue>(local: &[S]) -> Result<(Vec<u32>, Vec<S>, u64)> {
    let len = local.len();
    let mut bps = try_filled(len, 0u32, "best parent indices")?;
    let mut bss = try_filled(len, S::default(), "best parent scores")?;
    bss.copy_from_slice(local);
    let mut comparisons = 0u64;
    for cs in 0..len {
        bps[cs] = cs as u32;
        let mut rest = cs;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            let cs1 = cs ^ bit;
            comparisons += 1;
            if bss[cs1] > bss[cs] {
                bss[cs] = bss[cs1];
                bps[cs] = bps[cs1];
            }
        }
    }
    Ok((bps, bss, comparisons))
}
