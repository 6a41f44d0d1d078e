//! Contingency tables and conditional frequency tables.
//!
//! A [`ContingencyTable`] keeps its rows sorted by packed key, i.e. by value
//! vector in lexicographic order. For a variable `v` the rows of one prefix
//! block (equal values on every variable ordered before `v`) are sorted by
//! `(x_v, suffix)`, so grouping the rows by their parent configuration is an
//! r-way merge of the per-value runs of each block. Marginalization and CFT
//! construction both use that merge, need no hashing, and emit groups in
//! sorted order; a table therefore has one canonical row order regardless of
//! whether it was projected from data or marginalized from a larger table.

use std::sync::Arc;

use super::key::{Key64, KeyLayout, PackedKey};
use super::Dataset;
use crate::error::{Error, Result};
use crate::VarSet;

/// Frequencies of the distinct data vectors projected onto `vars`.
#[derive(Clone, Debug)]
pub struct ContingencyTable<K: PackedKey = Key64> {
    layout: Arc<KeyLayout>,
    vars: VarSet,
    keys: Vec<K>,
    counts: Vec<u32>,
}

impl<K: PackedKey> PartialEq for ContingencyTable<K> {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.keys == other.keys && self.counts == other.counts
    }
}

/// Projects `data` onto `vars` and counts the distinct vectors.
pub fn build_ct<K: PackedKey>(data: &Dataset, vars: VarSet) -> Result<ContingencyTable<K>> {
    ContingencyTable::build(data, vars)
}

impl<K: PackedKey> ContingencyTable<K> {
    pub fn build(data: &Dataset, vars: VarSet) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidArgument(
                "contingency table needs at least one variable".into(),
            ));
        }
        if !vars.is_subset(VarSet::full(data.n())) {
            return Err(Error::InvalidArgument(format!(
                "{vars:?} is not a subset of the {} data variables",
                data.n()
            )));
        }
        let layout = data.layout();
        layout.check_key::<K>()?;
        let mut projected: Vec<K> = data.rows().map(|row| layout.encode(row, vars)).collect();
        projected.sort_unstable();

        let mut keys = Vec::new();
        let mut counts: Vec<u32> = Vec::new();
        for key in projected {
            if keys.last() == Some(&key) {
                *counts.last_mut().unwrap() += 1;
            } else {
                keys.push(key);
                counts.push(1);
            }
        }
        Ok(ContingencyTable {
            layout: Arc::clone(layout),
            vars,
            keys,
            counts,
        })
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn layout(&self) -> &Arc<KeyLayout> {
        &self.layout
    }

    /// Number of distinct vectors.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Rows as `(values of vars in ascending variable order, count)`, in
    /// lexicographic order of the value vectors.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<u32>, u32)> + '_ {
        self.keys
            .iter()
            .zip(&self.counts)
            .map(move |(key, &count)| {
                let values = self.vars.iter().map(|v| self.layout.get(key, v)).collect();
                (values, count)
            })
    }

    fn check_member(&self, v: usize) -> Result<()> {
        if !self.vars.contains(v) {
            return Err(Error::InvalidArgument(format!(
                "variable {v} is not in the table over {:?}",
                self.vars
            )));
        }
        Ok(())
    }

    /// Sums out `v`, merging rows that agree on the remaining variables.
    pub fn marginalize(&self, v: usize) -> Result<Self> {
        self.check_member(v)?;
        if self.vars.len() == 1 {
            return Err(Error::InvalidArgument(
                "cannot marginalize the last variable of a table".into(),
            ));
        }
        let mut scratch = GroupScratch::default();
        Ok(self.marginalize_with(v, &mut scratch))
    }

    pub(crate) fn marginalize_with(&self, v: usize, scratch: &mut GroupScratch) -> Self {
        let mut keys = Vec::with_capacity(self.keys.len());
        let mut counts = Vec::with_capacity(self.keys.len());
        self.group_by_parents(v, scratch, |key, _, total| {
            keys.push(key);
            counts.push(total);
        });
        ContingencyTable {
            layout: Arc::clone(&self.layout),
            vars: self.vars.without(v),
            keys,
            counts,
        }
    }

    /// Conditional frequencies of `v` given the other variables of the table.
    pub fn to_cft(&self, v: usize) -> Result<CondFreqTable> {
        self.check_member(v)?;
        let parents = self.vars.without(v);
        let child_arity = self.layout.arities()[v];
        let mut configs = Vec::new();
        let mut counts = Vec::new();
        let mut scratch = GroupScratch::default();
        self.group_by_parents(v, &mut scratch, |key, entries, _| {
            configs.extend(parents.iter().map(|p| self.layout.get(&key, p)));
            let base = counts.len();
            counts.resize(base + child_arity as usize, 0);
            for &(value, count) in entries {
                counts[base + value as usize] = count;
            }
        });
        Ok(CondFreqTable {
            child: v,
            child_arity,
            parents,
            parent_arity_product: parent_arity_product(&self.layout, parents),
            configs,
            counts,
        })
    }

    /// Walks the parent-configuration groups of `v` in key order. Each call
    /// gets the parent key (with `v`'s field cleared), the nonzero
    /// `(value of v, count)` pairs in ascending value order, and their total.
    pub(crate) fn group_by_parents<F>(&self, v: usize, scratch: &mut GroupScratch, mut emit: F)
    where
        F: FnMut(K, &[(u32, u32)], u32),
    {
        let layout = &*self.layout;
        let prefix: K = layout.prefix_mask(v);
        let suffix: K = layout.suffix_mask(v);
        let field: K = layout.field_mask(v);
        let GroupScratch { runs, entries } = scratch;

        let keys = &self.keys;
        let counts = &self.counts;
        let len = keys.len();
        let mut i = 0;
        while i < len {
            let block = keys[i].and(&prefix);
            let mut j = i + 1;
            while j < len && keys[j].and(&prefix) == block {
                j += 1;
            }

            runs.clear();
            let mut k = i;
            while k < j {
                let value = layout.get(&keys[k], v);
                let start = k;
                k += 1;
                while k < j && layout.get(&keys[k], v) == value {
                    k += 1;
                }
                runs.push(Run {
                    head: start,
                    end: k,
                    value,
                });
            }

            if runs.len() == 1 {
                let value = runs[0].value;
                for idx in i..j {
                    emit(
                        keys[idx].and_not(&field),
                        &[(value, counts[idx])],
                        counts[idx],
                    );
                }
            } else {
                loop {
                    let mut next: Option<K> = None;
                    for run in runs.iter().filter(|r| r.head < r.end) {
                        let s = keys[run.head].and(&suffix);
                        if next.is_none_or(|n| s < n) {
                            next = Some(s);
                        }
                    }
                    let Some(s) = next else { break };
                    entries.clear();
                    let mut total = 0u32;
                    for run in runs.iter_mut() {
                        if run.head < run.end && keys[run.head].and(&suffix) == s {
                            entries.push((run.value, counts[run.head]));
                            total += counts[run.head];
                            run.head += 1;
                        }
                    }
                    emit(block.or(&s), entries, total);
                }
            }
            i = j;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Run {
    head: usize,
    end: usize,
    value: u32,
}

/// Reusable buffers for [`ContingencyTable::group_by_parents`].
#[derive(Debug, Default)]
pub(crate) struct GroupScratch {
    runs: Vec<Run>,
    entries: Vec<(u32, u32)>,
}

pub(crate) fn parent_arity_product(layout: &KeyLayout, parents: VarSet) -> f64 {
    parents
        .iter()
        .map(|p| f64::from(layout.arities()[p]))
        .product()
}

/// Counts of each value of `child` for every observed configuration of `parents`.
#[derive(Clone, Debug, PartialEq)]
pub struct CondFreqTable {
    child: usize,
    child_arity: u32,
    parents: VarSet,
    parent_arity_product: f64,
    configs: Vec<u32>,
    counts: Vec<u32>,
}

impl CondFreqTable {
    pub fn child(&self) -> usize {
        self.child
    }

    pub fn child_arity(&self) -> u32 {
        self.child_arity
    }

    pub fn parents(&self) -> VarSet {
        self.parents
    }

    /// Number of possible parent configurations, `q = prod of parent arities`.
    pub fn parent_configurations(&self) -> f64 {
        self.parent_arity_product
    }

    /// Number of observed parent configurations.
    pub fn len(&self) -> usize {
        self.counts.len() / self.child_arity as usize
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Flattened `len() x child_arity()` count matrix.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `(parent values in ascending variable order, counts per child value)`.
    pub fn rows(&self) -> impl Iterator<Item = (&[u32], &[u32])> {
        let width = self.parents.len().max(1);
        let r = self.child_arity as usize;
        let configs: Box<dyn Iterator<Item = &[u32]>> = if self.parents.is_empty() {
            Box::new(std::iter::repeat_n(&[][..], self.len()))
        } else {
            Box::new(self.configs.chunks_exact(width))
        };
        configs.zip(self.counts.chunks_exact(r))
    }
}
