//! Globally optimal Bayesian network structures for complete discrete data.
//!
//! Learning runs in five steps over the `2^n` subsets of the variables:
//!
//! 1. [`local_scores::compute_all`] scores every (variable, parent set) pair.
//! 2. [`optimizer::BestParents`] finds the best parents inside every candidate set.
//! 3. [`optimizer::SinkTables`] finds the best sink of every variable set.
//! 4. [`optimizer::SinkTables::ordering`] recovers an optimal variable ordering.
//! 5. [`optimizer::BestParents::network_for`] builds the optimal network for it.
//!
//! [`optimizer::learn`] runs them all.
//!
//! ```
//! use exactbn::{learn, ComputeOptions, Dataset, ScoreSpec};
//!
//! let data = Dataset::parse("0 0 1\n1 1 0\n1 1 1\n0 0 0\n1 1 1\n").unwrap();
//! let best = learn::<f64>(&data, &ScoreSpec::bde(1.0).unwrap(), &ComputeOptions::default()).unwrap();
//! assert_eq!(best.network.n(), 3);
//! assert!(best.network.is_consistent_with(&best.ordering));
//! ```

pub mod dataset;
pub mod error;
pub mod explore;
pub mod local_scores;
pub mod optimizer;
pub mod output;
pub mod precision;
pub mod scoring;
pub mod varset;

/// Largest supported number of variables.
pub const MAX_VARS: usize = 32;

pub use dataset::{build_ct, CondFreqTable, ContingencyTable, Dataset};
pub use error::{Error, Result};
pub use local_scores::{compute_all, AnyStore, ComputeOptions, LocalScoreStore, ShardSpec};
pub use optimizer::{
    learn, learn_from_scores, BestParents, Learned, Network, Ordering, SinkTables,
};
pub use precision::{Precision, ScoreValue};
pub use scoring::{local_score, ScoreKind, ScoreSpec};
pub use varset::{collapse, expand, VarSet};
