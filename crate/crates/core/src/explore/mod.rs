//! Queries over orderings, equivalent-sample-size sweeps and predictive
//! simulation.

mod params;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use params::{fit_expected, predict_logp, sample, ParamNetwork, Prediction, SAMPLER_RNG};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::local_scores::ComputeOptions;
use crate::optimizer::{learn, BestParents, Ordering};
use crate::precision::ScoreValue;
use crate::scoring::ScoreSpec;

/// Score of the best network consistent with `ord`.
pub fn score_for_ordering<S: ScoreValue>(ord: &Ordering, bp: &BestParents<S>) -> Result<S> {
    bp.score_for(ord)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// Cyclic shift to the right by `k` places (left for negative `k`).
    Rotation(i64),
    /// Exchange of the variables at positions `i < j`.
    Swap(usize, usize),
}

impl Transform {
    pub fn apply(self, ord: &Ordering) -> Ordering {
        match self {
            Transform::Rotation(k) => ord.rotated(k),
            Transform::Swap(i, j) => ord.swapped(i, j),
        }
    }
}

/// Best-network scores of transformed copies of a base ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingScan<S> {
    pub base: Ordering,
    pub base_score: S,
    pub entries: Vec<(Transform, S)>,
}

impl<S: ScoreValue> OrderingScan<S> {
    fn scan(base: &Ordering, bp: &BestParents<S>, transforms: Vec<Transform>) -> Result<Self> {
        let base_score = bp.score_for(base)?;
        let entries = transforms
            .into_par_iter()
            .map(|t| bp.score_for(&t.apply(base)).map(|s| (t, s)))
            .collect::<Result<_>>()?;
        Ok(OrderingScan {
            base: base.clone(),
            base_score,
            entries,
        })
    }

    /// Symmetric `n x n` matrix of swap scores with the base score on the
    /// diagonal; entries without a swap row hold the base score.
    pub fn swap_matrix(&self) -> Vec<Vec<S>> {
        let n = self.base.n();
        let mut m = vec![vec![self.base_score; n]; n];
        for &(t, s) in &self.entries {
            if let Transform::Swap(i, j) = t {
                m[i][j] = s;
                m[j][i] = s;
            }
        }
        m
    }
}

/// Scores every rotation by `k` with `|k| <= min(max_shift, n / 2)`.
pub fn rotations<S: ScoreValue>(
    ord: &Ordering,
    bp: &BestParents<S>,
    max_shift: Option<usize>,
) -> Result<OrderingScan<S>> {
    let half = ord.n() / 2;
    let m = max_shift.map_or(half, |m| m.min(half)) as i64;
    OrderingScan::scan(ord, bp, (-m..=m).map(Transform::Rotation).collect())
}

/// Scores every swap of two positions `i < j`.
pub fn swaps<S: ScoreValue>(ord: &Ordering, bp: &BestParents<S>) -> Result<OrderingScan<S>> {
    let n = ord.n();
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| Transform::Swap(i, j)))
        .collect();
    OrderingScan::scan(ord, bp, pairs)
}

/// Equivalent sample sizes to learn with: an explicit list or a log-spaced range.
#[derive(Clone, Debug, PartialEq)]
pub struct EssGrid(Vec<f64>);

impl EssGrid {
    pub const DEFAULT: &'static str = "log:2e-20:34000:50";

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty ESS grid".into()));
        }
        if let Some(bad) = values.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "ESS values must be positive and finite, got {bad}"
            )));
        }
        Ok(EssGrid(values))
    }

    /// `count` values from `start` to `end`, evenly spaced in log scale.
    pub fn log_spaced(start: f64, end: f64, count: usize) -> Result<Self> {
        if count == 0 || !(start > 0.0 && end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad log range {start}..{end} with {count} points"
            )));
        }
        if count == 1 {
            return EssGrid::new(vec![start]);
        }
        let (a, b) = (start.ln(), end.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
        values[0] = start;
        values[count - 1] = end;
        EssGrid::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for EssGrid {
    fn default() -> Self {
        EssGrid::DEFAULT.parse().expect("default grid parses")
    }
}

impl FromStr for EssGrid {
    type Err = Error;

    /// `log:start:end:count` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad ESS value '{t}'")))
        };
        if let Some(range) = s.strip_prefix("log:") {
            let parts: Vec<&str> = range.split(':').collect();
            let [start, end, count] = parts[..] else {
                return Err(Error::InvalidArgument(format!(
                    "'{s}' is not of the form log:start:end:count"
                )));
            };
            let count = count
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad point count '{count}'")))?;
            return EssGrid::log_spaced(num(start)?, num(end)?, count);
        }
        EssGrid::new(s.split(',').map(num).collect::<Result<_>>()?)
    }
}

impl fmt::Display for EssGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub ess: f64,
    pub arcs: usize,
    pub score: f64,
}

/// Learns an optimal BDe network at every grid point.
pub fn ess_sweep<S: ScoreValue>(
    data: &Dataset,
    grid: &EssGrid,
    opts: &ComputeOptions,
) -> Result<Vec<SweepRow>> {
    grid.values()
        .iter()
        .map(|&ess| {
            let best = learn::<S>(data, &ScoreSpec::bde(ess)?, opts)?;
            Ok(SweepRow {
                ess,
                arcs: best.network.arc_count(),
                score: best.total_score.to_f64(),
            })
        })
        .collect()
}
