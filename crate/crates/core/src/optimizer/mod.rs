//! Steps 2 to 5: best parents, best sinks, the optimal ordering and network.

mod network;
mod parents;
mod sinks;

pub use network::{Network, Ordering};
pub use parents::BestParents;
pub use sinks::{load_sinks, ordering_from_sinks, sinks_from_bytes, SinkTables, NO_SINK};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::local_scores::{compute_all, ComputeOptions, LocalScoreStore};
use crate::precision::ScoreValue;
use crate::scoring::ScoreSpec;

/// An optimal network with the ordering it was read from.
#[derive(Clone, Debug, PartialEq)]
pub struct Learned<S> {
    pub network: Network,
    pub ordering: Ordering,
    /// Network score, equal to the sink table's score of the full set.
    pub total_score: S,
}

pub fn best_sinks<S: ScoreValue>(bp: &BestParents<S>) -> Result<SinkTables<S>> {
    SinkTables::compute(bp)
}

pub fn sinks_to_ord<S: ScoreValue>(tables: &SinkTables<S>) -> Result<Ordering> {
    tables.ordering()
}

pub fn ord_to_net<S: ScoreValue>(ord: &Ordering, bp: &BestParents<S>) -> Result<Network> {
    bp.network_for(ord).map(|(net, _)| net)
}

/// Runs all five steps on `data`.
pub fn learn<S: ScoreValue>(
    data: &Dataset,
    spec: &ScoreSpec,
    opts: &ComputeOptions,
) -> Result<Learned<S>> {
    let store = compute_all::<S>(data, spec, opts)?;
    learn_from_scores(&store, opts)
}

/// Runs steps 2 to 5 on precomputed local scores.
pub fn learn_from_scores<S: ScoreValue>(
    store: &LocalScoreStore<S>,
    opts: &ComputeOptions,
) -> Result<Learned<S>> {
    let bp = BestParents::compute(store, opts)?;
    learn_from_parents(&bp)
}

pub fn learn_from_parents<S: ScoreValue>(bp: &BestParents<S>) -> Result<Learned<S>> {
    let tables = SinkTables::compute(bp)?;
    let ordering = tables.ordering()?;
    let (network, total_score) = bp.network_for(&ordering)?;
    debug_assert_eq!(
        total_score.to_f64().to_bits(),
        tables.total().to_f64().to_bits()
    );
    Ok(Learned {
        network,
        ordering,
        total_score,
    })
}
