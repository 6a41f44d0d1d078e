//! Local scores for every (variable, parent set) pair.
//!
//! Scores come from a depth-first walk over contingency tables: starting from
//! the table of a root variable set, each table is scored for every one of its
//! variables and then marginalized by each still-eligible variable `v`, the
//! child walk only being allowed to remove variables below `v`. Every subset of
//! the root is thus visited exactly once while at most one table per level is
//! alive.

pub(crate) mod cache;
mod shard;

use std::sync::Mutex;

use rayon::prelude::*;

pub use cache::{read_cache_header, CacheHeader, CacheKind};
pub use shard::{merge_shards, plan_shards, ShardJob, ShardPlan, ShardScores, ShardSpec};

use crate::dataset::{ContingencyTable, Dataset, GroupScratch, PackedKey};
use crate::error::{Error, Result};
use crate::precision::{Precision, ScoreValue};
use crate::scoring::{LnGammaCache, ScoreSpec};
use crate::varset::{collapse_mask, VarSet};

/// Memoized ln-gamma entries allowed per worker (8 bytes each).
const LN_GAMMA_BUDGET: usize = 1 << 22;
/// Buffered scores per worker before they are copied into a shared store.
const FLUSH_LEN: usize = 1 << 16;

/// Local scores `scores[v][collapse(v, S)]` for all `v` and `S ⊆ V \ {v}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScoreStore<S> {
    spec: ScoreSpec,
    arities: Vec<u32>,
    scores: Vec<Vec<S>>,
}

impl<S: ScoreValue> LocalScoreStore<S> {
    /// Wraps precomputed per-variable score arrays.
    pub fn from_raw(spec: ScoreSpec, arities: Vec<u32>, scores: Vec<Vec<S>>) -> Result<Self> {
        let n = arities.len();
        if n == 0 || n > crate::MAX_VARS {
            return Err(Error::TooManyVariables(n));
        }
        if scores.len() != n || scores.iter().any(|s| s.len() != subsets_per_var(n)) {
            return Err(Error::InvalidArgument(format!(
                "expected {n} score arrays of {} entries",
                subsets_per_var(n)
            )));
        }
        Ok(LocalScoreStore {
            spec,
            arities,
            scores,
        })
    }

    pub(crate) fn filled(spec: ScoreSpec, arities: Vec<u32>, value: S) -> Result<Self> {
        let n = arities.len();
        let per_var = subsets_per_var(n);
        let scores = (0..n)
            .map(|_| crate::error::try_filled(per_var, value, "local scores"))
            .collect::<Result<_>>()?;
        Ok(LocalScoreStore {
            spec,
            arities,
            scores,
        })
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

    pub fn precision(&self) -> Precision {
        Precision::of::<S>()
    }

    /// Total number of stored scores, `n * 2^(n-1)`.
    pub fn entry_count(&self) -> usize {
        self.n() * subsets_per_var(self.n())
    }

    /// Scores of `v` indexed by collapsed parent set.
    pub fn scores_of(&self, v: usize) -> &[S] {
        &self.scores[v]
    }

    #[inline]
    pub fn get(&self, v: usize, index: u32) -> S {
        self.scores[v][index as usize]
    }

    pub fn score(&self, v: usize, parents: VarSet) -> Result<S> {
        let idx = crate::varset::collapse(v, parents)?;
        self.scores
            .get(v)
            .and_then(|s| s.get(idx as usize))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no score for {v} | {parents:?}")))
    }

    #[inline]
    pub(crate) fn set(&mut self, v: usize, index: u32, score: S) {
        self.scores[v][index as usize] = score;
    }

    pub(crate) fn header(&self, kind: CacheKind) -> CacheHeader {
        CacheHeader {
            kind,
            spec: self.spec,
            precision: self.precision(),
            arities: self.arities.clone(),
        }
    }

    /// Serializes to the `BNLS` cache format.
    pub fn to_bytes(&self) -> Vec<u8> {
        cache::encode_store(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        cache::decode_store(bytes)
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

/// A store of either precision, as read from a cache file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyStore {
    Single(LocalScoreStore<f32>),
    Double(LocalScoreStore<f64>),
}

impl AnyStore {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let header = cache::decode_header(&bytes)?.0;
        match header.precision {
            Precision::Single => LocalScoreStore::from_bytes(&bytes).map(AnyStore::Single),
            Precision::Double => LocalScoreStore::from_bytes(&bytes).map(AnyStore::Double),
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        match self {
            AnyStore::Single(s) => s.save(path),
            AnyStore::Double(s) => s.save(path),
        }
    }

    pub fn spec(&self) -> &ScoreSpec {
        match self {
            AnyStore::Single(s) => s.spec(),
            AnyStore::Double(s) => s.spec(),
        }
    }

    pub fn arities(&self) -> &[u32] {
        match self {
            AnyStore::Single(s) => s.arities(),
            AnyStore::Double(s) => s.arities(),
        }
    }
}

pub(crate) fn subsets_per_var(n: usize) -> usize {
    1usize << (n - 1)
}

/// Worker-thread settings for the parallel steps.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComputeOptions {
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
}

impl ComputeOptions {
    pub fn single_threaded() -> Self {
        ComputeOptions { jobs: Some(1) }
    }

    pub fn threads(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads())
            .build()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Counters from a contingency-table walk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalStats {
    /// Contingency tables materialized (projected or marginalized).
    pub tables: u64,
    /// Local scores produced.
    pub scores: u64,
    /// Most tables alive at once along the recursion path.
    pub max_live_tables: usize,
}

impl TraversalStats {
    fn absorb(&mut self, other: TraversalStats) {
        self.tables += other.tables;
        self.scores += other.scores;
        self.max_live_tables = self.max_live_tables.max(other.max_live_tables);
    }
}

/// Computes every local score of `data`.
pub fn compute_all<S: ScoreValue>(
    data: &Dataset,
    spec: &ScoreSpec,
    opts: &ComputeOptions,
) -> Result<LocalScoreStore<S>> {
    compute_all_with_stats(data, spec, opts).map(|(store, _)| store)
}

pub fn compute_all_with_stats<S: ScoreValue>(
    data: &Dataset,
    spec: &ScoreSpec,
    opts: &ComputeOptions,
) -> Result<(LocalScoreStore<S>, TraversalStats)> {
    let spec = spec.validated()?;
    let n = data.n();
    let mut store = LocalScoreStore::filled(spec, data.arities().to_vec(), S::from_f64(f64::NAN))?;
    let threads = opts.threads();

    if threads == 1 {
        let stats = run_job(data, &spec, &ShardJob::root(n), |v, idx, score| {
            store.set(v, idx, S::from_f64(score));
        })?;
        return Ok((store, stats));
    }

    let plan = ShardPlan::with_min_jobs(n, threads * 8);
    let shared = Mutex::new(store);
    let stats = opts.install(|| {
        plan.jobs()
            .par_iter()
            .map(|job| {
                let mut buf: Vec<(usize, u32, S)> = Vec::with_capacity(FLUSH_LEN);
                let flush = |buf: &mut Vec<(usize, u32, S)>| {
                    let mut store = shared.lock().unwrap();
                    for (v, idx, s) in buf.drain(..) {
                        store.set(v, idx, s);
                    }
                };
                let stats = run_job(data, &spec, job, |v, idx, score| {
                    buf.push((v, idx, S::from_f64(score)));
                    if buf.len() == FLUSH_LEN {
                        flush(&mut buf);
                    }
                })?;
                flush(&mut buf);
                Ok(stats)
            })
            .try_reduce(TraversalStats::default, |mut a, b| {
                a.absorb(b);
                Ok(a)
            })
    })??;
    Ok((shared.into_inner().unwrap(), stats))
}

/// Runs one job of a shard plan, passing `(v, collapsed parent index, score)`
/// for every pair the job covers.
pub fn run_job<F>(
    data: &Dataset,
    spec: &ScoreSpec,
    job: &ShardJob,
    sink: F,
) -> Result<TraversalStats>
where
    F: FnMut(usize, u32, f64),
{
    match data.layout().words() {
        1 => run_job_keyed::<[u64; 1], F>(data, spec, job, sink),
        2 => run_job_keyed::<[u64; 2], F>(data, spec, job, sink),
        3..=4 => run_job_keyed::<[u64; 4], F>(data, spec, job, sink),
        5..=8 => run_job_keyed::<[u64; 8], F>(data, spec, job, sink),
        _ => run_job_keyed::<[u64; 16], F>(data, spec, job, sink),
    }
}

fn run_job_keyed<K: PackedKey, F>(
    data: &Dataset,
    spec: &ScoreSpec,
    job: &ShardJob,
    sink: F,
) -> Result<TraversalStats>
where
    F: FnMut(usize, u32, f64),
{
    let root: ContingencyTable<K> = ContingencyTable::build(data, job.root)?;
    let mut walk = Walk {
        spec: *spec,
        data_rows: data.len() as u64,
        lgamma: LnGammaCache::new(data.len() as u64, LN_GAMMA_BUDGET),
        scratch: GroupScratch::default(),
        live: 1,
        stats: TraversalStats {
            tables: 1,
            scores: 0,
            max_live_tables: 1,
        },
        sink,
    };
    walk.visit(&root, job.eligible);
    Ok(walk.stats)
}

struct Walk<F> {
    spec: ScoreSpec,
    data_rows: u64,
    lgamma: LnGammaCache,
    scratch: GroupScratch,
    live: usize,
    stats: TraversalStats,
    sink: F,
}

impl<F: FnMut(usize, u32, f64)> Walk<F> {
    fn visit<K: PackedKey>(&mut self, ct: &ContingencyTable<K>, eligible: VarSet) {
        let vars = ct.vars();
        for v in vars {
            let score = self.score(ct, v);
            (self.sink)(v, collapse_mask(v, vars.without(v).mask()), score);
            self.stats.scores += 1;
        }
        if vars.len() > 1 {
            for v in eligible.iter().filter(|&v| vars.contains(v)) {
                let child = ct.marginalize_with(v, &mut self.scratch);
                self.live += 1;
                self.stats.tables += 1;
                self.stats.max_live_tables = self.stats.max_live_tables.max(self.live);
                self.visit(&child, VarSet::below(v));
                self.live -= 1;
            }
        }
    }

    fn score<K: PackedKey>(&mut self, ct: &ContingencyTable<K>, v: usize) -> f64 {
        let layout = ct.layout();
        let parents = ct.vars().without(v);
        let mut scorer = self.spec.scorer(
            layout.arities()[v],
            crate::dataset::parent_arity_product(layout, parents),
            self.data_rows,
            &mut self.lgamma,
        );
        ct.group_by_parents(v, &mut self.scratch, |_, entries, total| {
            scorer.add_row(total, entries.iter().map(|&(_, c)| c));
        });
        scorer.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_ct;
    use crate::scoring::local_score;
    use crate::varset::expand;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, rows: usize, arity: u32, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..n * rows).map(|_| rng.random_range(0..arity)).collect();
        Dataset::new(vec![arity; n], cells).unwrap()
    }

    #[test]
    fn single_variable() {
        let d = Dataset::parse("0\n1\n1\n").unwrap();
        let spec = ScoreSpec::bic();
        let store: LocalScoreStore<f64> =
            compute_all(&d, &spec, &ComputeOptions::single_threaded()).unwrap();
        assert_eq!(store.entry_count(), 1);
        let ct: ContingencyTable = build_ct(&d, VarSet::singleton(0)).unwrap();
        assert_eq!(store.get(0, 0), local_score(&ct.to_cft(0).unwrap(), &spec));
    }

    #[test]
    fn every_entry_matches_direct_recomputation() {
        for (seed, spec) in [
            (1, ScoreSpec::bde(1.0).unwrap()),
            (2, ScoreSpec::bic()),
            (3, ScoreSpec::aic()),
            (4, ScoreSpec::bde(0.1).unwrap()),
        ] {
            let d = random_data(3 + seed as usize % 3, 40, 3, seed);
            let n = d.n();
            let (store, stats) =
                compute_all_with_stats::<f64>(&d, &spec, &ComputeOptions::single_threaded())
                    .unwrap();
            assert_eq!(stats.scores as usize, n << (n - 1));
            assert_eq!(stats.tables, (1u64 << n) - 1);
            assert!(stats.max_live_tables <= n + 1);
            for v in 0..n {
                for idx in 0..(1u32 << (n - 1)) {
                    let parents = expand(v, idx);
                    let ct: ContingencyTable = build_ct(&d, parents.with(v)).unwrap();
                    let direct = local_score(&ct.to_cft(v).unwrap(), &spec);
                    assert_eq!(
                        store.get(v, idx).to_bits(),
                        direct.to_bits(),
                        "v={v} S={parents:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn parallel_equals_serial() {
        let d = random_data(7, 200, 2, 9);
        let spec = ScoreSpec::bde(1.0).unwrap();
        let serial: LocalScoreStore<f32> =
            compute_all(&d, &spec, &ComputeOptions::single_threaded()).unwrap();
        let parallel: LocalScoreStore<f32> =
            compute_all(&d, &spec, &ComputeOptions { jobs: Some(3) }).unwrap();
        assert_eq!(serial.to_bytes(), parallel.to_bytes());
    }

    #[test]
    fn entry_count_n5() {
        let d = random_data(5, 30, 2, 5);
        let store: LocalScoreStore<f32> =
            compute_all(&d, &ScoreSpec::bic(), &ComputeOptions::default()).unwrap();
        assert_eq!(store.entry_count(), 80);
        assert!((0..5).all(|v| store.scores_of(v).iter().all(|s| s.is_finite())));
    }

    #[test]
    fn store_lookup_by_set() {
        let d = random_data(3, 30, 2, 6);
        let store: LocalScoreStore<f64> =
            compute_all(&d, &ScoreSpec::bic(), &ComputeOptions::default()).unwrap();
        let s: VarSet = [0, 2].into_iter().collect();
        assert_eq!(store.score(1, s).unwrap(), store.get(1, 3));
        assert!(store.score(1, s.with(1)).is_err());
    }

    #[test]
    fn from_raw_checks_shape() {
        let spec = ScoreSpec::bic();
        assert!(LocalScoreStore::from_raw(spec, vec![2, 2], vec![vec![0.0f32; 2]; 2]).is_ok());
        assert!(LocalScoreStore::from_raw(spec, vec![2, 2], vec![vec![0.0f32; 3]; 2]).is_err());
        assert!(LocalScoreStore::<f32>::from_raw(spec, vec![], vec![]).is_err());
    }

    #[test]
    fn bic_penalty_grows_with_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<u32>> = (0..1000)
            .map(|_| vec![rng.random_range(0..2), rng.random_range(0..2)])
            .collect();
        let d = Dataset::from_rows(&rows).unwrap();
        let store: LocalScoreStore<f64> =
            compute_all(&d, &ScoreSpec::bic(), &ComputeOptions::default()).unwrap();
        // independent columns: empty parent set wins
        assert!(store.get(0, 0) > store.get(0, 1));
    }
}
