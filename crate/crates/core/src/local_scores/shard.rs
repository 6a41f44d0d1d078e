//! Splitting the local-score walk into independent jobs.
//!
//! A plan cuts the recursion tree at a fixed depth `d`. Every tree node above
//! the cut becomes a score-only job (its table, no recursion); every node at
//! the cut becomes a job owning its whole subtree. A node at depth `k` has
//! removed `k` variables `R`, and may still remove the variables below
//! `min(R)`. Each job projects its root table straight from the data.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{cache, run_job, subsets_per_var, CacheKind, ComputeOptions, LocalScoreStore};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::precision::ScoreValue;
use crate::scoring::ScoreSpec;
use crate::varset::VarSet;

/// One independent unit of the local-score walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShardJob {
    /// Variables of the job's root contingency table.
    pub root: VarSet,
    /// Variables that may be marginalized out of the root.
    pub eligible: VarSet,
}

impl ShardJob {
    /// The whole walk as one job.
    pub fn root(n: usize) -> Self {
        ShardJob {
            root: VarSet::full(n),
            eligible: VarSet::full(n),
        }
    }

    /// Variable sets whose tables this job visits, in walk order.
    pub fn tables(&self) -> Vec<VarSet> {
        fn walk(vars: VarSet, eligible: VarSet, out: &mut Vec<VarSet>) {
            out.push(vars);
            if vars.len() > 1 {
                for v in eligible.iter().filter(|&v| vars.contains(v)) {
                    walk(vars.without(v), VarSet::below(v), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self.root, self.eligible, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardPlan {
    n: usize,
    depth: usize,
    jobs: Vec<ShardJob>,
}

/// Plan cut at `depth` (clamped to `n - 1`).
pub fn plan_shards(n: usize, depth: usize) -> ShardPlan {
    ShardPlan::at_depth(n, depth)
}

impl ShardPlan {
    pub fn at_depth(n: usize, depth: usize) -> Self {
        assert!((1..=crate::MAX_VARS).contains(&n), "n out of range");
        let depth = depth.min(n - 1);
        let full = VarSet::full(n);
        let mut jobs = Vec::new();
        for k in 0..=depth {
            for removed in masks_with_popcount(n, k) {
                let removed = VarSet::from_mask(removed);
                let root = full.difference(removed);
                let eligible = if k < depth {
                    VarSet::EMPTY
                } else {
                    removed.first().map_or(full, VarSet::below)
                };
                jobs.push(ShardJob { root, eligible });
            }
        }
        ShardPlan { n, depth, jobs }
    }

    /// Shallowest plan with at least `min_jobs` jobs.
    pub fn with_min_jobs(n: usize, min_jobs: usize) -> Self {
        let depth = (0..n)
            .find(|&d| Self::job_count(n, d) >= min_jobs as u64)
            .unwrap_or(n - 1);
        Self::at_depth(n, depth)
    }

    /// Plan used when the walk is split into `count` shards.
    pub fn for_shards(n: usize, count: u32) -> Self {
        Self::with_min_jobs(n, count as usize * 4)
    }

    /// Number of jobs of the depth-`depth` plan.
    pub fn job_count(n: usize, depth: usize) -> u64 {
        (0..=depth.min(n - 1))
            .map(|k| binomial(n as u64, k as u64))
            .sum()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn jobs(&self) -> &[ShardJob] {
        &self.jobs
    }

    /// Jobs assigned round-robin to `shard`.
    pub fn jobs_for(&self, shard: ShardSpec) -> impl Iterator<Item = &ShardJob> {
        self.jobs
            .iter()
            .skip(shard.index as usize)
            .step_by(shard.count as usize)
    }
}

/// Gosper's hack over `n`-bit masks.
fn masks_with_popcount(n: usize, k: usize) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let mut next = if k > n { limit } else { (1u64 << k) - 1 };
    std::iter::from_fn(move || {
        if next >= limit {
            return None;
        }
        let cur = next;
        if cur == 0 {
            next = limit;
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            next = (((r ^ cur) >> 2) / c) | r;
        }
        Some(cur as u32)
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Shard `index` of `count`, written `index/count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShardSpec {
    pub index: u32,
    pub count: u32,
}

impl ShardSpec {
    pub fn new(index: u32, count: u32) -> Result<Self> {
        if count == 0 || index >= count {
            return Err(Error::InvalidArgument(format!(
                "shard {index}/{count}: index must be below a positive count"
            )));
        }
        Ok(ShardSpec { index, count })
    }
}

impl FromStr for ShardSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("shard '{s}' is not of the form i/m"));
        let (i, m) = s.split_once('/').ok_or_else(bad)?;
        let i = i.trim().parse().map_err(|_| bad())?;
        let m = m.trim().parse().map_err(|_| bad())?;
        ShardSpec::new(i, m)
    }
}

impl fmt::Display for ShardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.count)
    }
}

/// Scores produced by one shard: `(variable, collapsed parent index, score)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShardScores<S> {
    pub(crate) spec: ScoreSpec,
    pub(crate) arities: Vec<u32>,
    pub(crate) depth: u32,
    pub(crate) shard: ShardSpec,
    pub(crate) entries: Vec<(u32, u32, S)>,
}

impl<S: ScoreValue> ShardScores<S> {
    /// Runs the jobs of `shard` under the plan [`ShardPlan::for_shards`].
    pub fn compute(
        data: &Dataset,
        spec: &ScoreSpec,
        shard: ShardSpec,
        opts: &ComputeOptions,
    ) -> Result<Self> {
        let spec = spec.validated()?;
        let plan = ShardPlan::for_shards(data.n(), shard.count);
        let jobs: Vec<&ShardJob> = plan.jobs_for(shard).collect();
        let per_job = opts.install(|| {
            jobs.par_iter()
                .map(|job| {
                    let mut out = Vec::new();
                    run_job(data, &spec, job, |v, idx, score| {
                        out.push((v as u32, idx, S::from_f64(score)));
                    })?;
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(ShardScores {
            spec,
            arities: data.arities().to_vec(),
            depth: plan.depth() as u32,
            shard,
            entries: per_job.into_iter().flatten().collect(),
        })
    }

    pub fn shard(&self) -> ShardSpec {
        self.shard
    }

    pub fn spec(&self) -> &ScoreSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        cache::encode_shard(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        cache::decode_shard(bytes)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        cache::write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Combines a complete set of shards into one store.
pub fn merge_shards<S: ScoreValue>(shards: &[ShardScores<S>]) -> Result<LocalScoreStore<S>> {
    let Some(first) = shards.first() else {
        return Err(Error::IncompleteShards("no shards given".into()));
    };
    for s in &shards[1..] {
        if s.spec.kind != first.spec.kind || s.spec.ess.to_bits() != first.spec.ess.to_bits() {
            return Err(Error::HeaderMismatch(format!(
                "shard {} scores with {}, shard {} with {}",
                first.shard, first.spec, s.shard, s.spec
            )));
        }
        if s.arities != first.arities {
            return Err(Error::HeaderMismatch(format!(
                "shards {} and {} were computed from different variables",
                first.shard, s.shard
            )));
        }
        if s.shard.count != first.shard.count || s.depth != first.depth {
            return Err(Error::HeaderMismatch(format!(
                "shards {} and {} belong to different plans",
                first.shard, s.shard
            )));
        }
    }
    let count = first.shard.count as usize;
    let mut seen = vec![false; count];
    for s in shards {
        if std::mem::replace(&mut seen[s.shard.index as usize], true) {
            return Err(Error::IncompleteShards(format!(
                "shard {} given twice",
                s.shard
            )));
        }
    }
    if let Some(missing) = seen.iter().position(|&b| !b) {
        return Err(Error::IncompleteShards(format!(
            "shard {missing}/{count} missing"
        )));
    }

    let n = first.arities.len();
    let per_var = subsets_per_var(n);
    let mut store =
        LocalScoreStore::filled(first.spec, first.arities.clone(), S::from_f64(f64::NAN))?;
    let mut written = vec![false; n * per_var];
    for s in shards {
        for &(v, idx, score) in &s.entries {
            let (v, idx) = (v as usize, idx as usize);
            if v >= n || idx >= per_var {
                return Err(Error::Cache(format!("entry ({v}, {idx}) out of range")));
            }
            if std::mem::replace(&mut written[v * per_var + idx], true) {
                return Err(Error::Cache(format!("entry ({v}, {idx}) written twice")));
            }
            store.set(v, idx as u32, score);
        }
    }
    if let Some(pos) = written.iter().position(|&b| !b) {
        return Err(Error::IncompleteShards(format!(
            "no score for variable {} parent index {}",
            pos / per_var,
            pos % per_var
        )));
    }
    Ok(store)
}

impl<S: ScoreValue> ShardScores<S> {
    pub(crate) fn header(&self) -> cache::CacheHeader {
        cache::CacheHeader {
            kind: CacheKind::Shard,
            spec: self.spec,
            precision: crate::precision::Precision::of::<S>(),
            arities: self.arities.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn covered_pairs(plan: &ShardPlan) -> Vec<(usize, VarSet)> {
        let mut out = Vec::new();
        for job in plan.jobs() {
            for vars in job.tables() {
                for v in vars {
                    out.push((v, vars.without(v)));
                }
            }
        }
        out
    }

    #[test]
    fn depth_zero_is_one_job() {
        let plan = plan_shards(6, 0);
        assert_eq!(plan.jobs(), &[ShardJob::root(6)]);
    }

    #[test]
    fn exact_cover_exhaustive() {
        for n in 1..=7 {
            for depth in 0..n {
                let plan = plan_shards(n, depth);
                assert_eq!(plan.jobs().len() as u64, ShardPlan::job_count(n, depth));
                let pairs = covered_pairs(&plan);
                let unique: HashSet<_> = pairs.iter().copied().collect();
                assert_eq!(pairs.len(), unique.len(), "duplicate pair n={n} d={depth}");
                assert_eq!(pairs.len(), n << (n - 1), "n={n} d={depth}");
            }
        }
    }

    #[test]
    fn n5_pairs() {
        for depth in 0..5 {
            assert_eq!(covered_pairs(&plan_shards(5, depth)).len(), 80);
        }
    }

    #[test]
    fn large_plan_over_1025_jobs() {
        let plan = ShardPlan::with_min_jobs(29, 1025);
        assert!(plan.jobs().len() >= 1025);
        // subtree of (W, E) holds 2^|E| tables, minus the empty set when E = W
        let tables: u64 = plan
            .jobs()
            .iter()
            .map(|j| (1u64 << j.eligible.len()) - u64::from(j.eligible == j.root))
            .sum();
        assert_eq!(tables, (1u64 << 29) - 1);
        let roots: HashSet<_> = plan.jobs().iter().map(|j| j.root).collect();
        assert_eq!(roots.len(), plan.jobs().len());
    }

    #[test]
    fn popcount_enumeration() {
        let masks: Vec<u32> = masks_with_popcount(5, 2).collect();
        assert_eq!(masks.len(), 10);
        assert!(masks.iter().all(|m| m.count_ones() == 2 && *m < 32));
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(masks_with_popcount(4, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(
            masks_with_popcount(32, 32).collect::<Vec<_>>(),
            vec![u32::MAX]
        );
    }

    #[test]
    fn round_robin_assignment_partitions_jobs() {
        let plan = plan_shards(8, 2);
        let total: usize = (0..3)
            .map(|i| plan.jobs_for(ShardSpec::new(i, 3).unwrap()).count())
            .sum();
        assert_eq!(total, plan.jobs().len());
    }

    #[test]
    fn shard_spec_parsing() {
        assert_eq!(
            "2/4".parse::<ShardSpec>().unwrap(),
            ShardSpec { index: 2, count: 4 }
        );
        assert!("4/4".parse::<ShardSpec>().is_err());
        assert!("0/0".parse::<ShardSpec>().is_err());
        assert!("1-4".parse::<ShardSpec>().is_err());
    }
}
