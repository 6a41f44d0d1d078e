use std::path::Path;

use super::{BestParents, Ordering};
use crate::error::{try_filled, Error, Result};
use crate::local_scores::cache::{self, decode_header, CacheHeader, CacheKind};
use crate::precision::{Precision, ScoreValue};
use crate::scoring::ScoreSpec;
use crate::varset::collapse_mask;

/// Marks the empty set, which has no sink.
pub const NO_SINK: u8 = 0xFF;

/// Best network score and sink of every variable set, indexed by mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SinkTables<S> {
    spec: ScoreSpec,
    arities: Vec<u32>,
    scores: Vec<S>,
    sinks: Vec<u8>,
}

impl<S: ScoreValue> SinkTables<S> {
    /// Visits sets in ascending mask order so every `W \ {s}` is final before
    /// `W`; the lowest sink wins ties.
    pub fn compute(bp: &BestParents<S>) -> Result<Self> {
        let n = bp.n();
        let len = 1usize << n;
        let mut scores = try_filled(len, S::from_f64(0.0), "sink scores")?;
        let mut sinks = try_filled(len, NO_SINK, "sinks")?;
        for w in 1..len {
            let w32 = w as u32;
            let mut best = S::default();
            let mut best_sink = NO_SINK;
            let mut rest = w32;
            while rest != 0 {
                let s = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let up = w32 & !(1 << s);
                let skore = scores[up as usize] + bp.score_index(s, collapse_mask(s, up));
                if best_sink == NO_SINK || skore > best {
                    best = skore;
                    best_sink = s as u8;
                }
            }
            scores[w] = best;
            sinks[w] = best_sink;
        }
        Ok(SinkTables {
            spec: *bp.spec(),
            arities: bp.arities().to_vec(),
            scores,
            sinks,
        })
    }

    pub fn n(&self) -> usize {
        self.arities.len()
    }

    pub fn score(&self, mask: u32) -> S {
        self.scores[mask as usize]
    }

    pub fn sink(&self, mask: u32) -> Option<usize> {
        let s = self.sinks[mask as usize];
        (s != NO_SINK).then_some(s as usize)
    }

    /// Score of the best network over all variables.
    pub fn total(&self) -> S {
        self.scores[self.scores.len() - 1]
    }

    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    pub fn sinks(&self) -> &[u8] {
        &self.sinks
    }

    /// Bytes held by the score table.
    pub fn score_table_bytes(&self) -> usize {
        self.scores.len() * S::BYTES as usize
    }

    /// Peels sinks off the full set, filling the ordering from the back.
    pub fn ordering(&self) -> Result<Ordering> {
        ordering_from_sinks(self.n(), &self.sinks)
    }

    /// Serializes the sinks in the `BNSK` format; scores are not stored.
    pub fn sinks_to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.sinks.len());
        CacheHeader {
            kind: CacheKind::Sinks,
            spec: self.spec,
            precision: Precision::of::<S>(),
            arities: self.arities.clone(),
        }
        .encode(&mut out);
        out.extend_from_slice(&self.sinks);
        out
    }

    pub fn save_sinks(&self, path: impl AsRef<Path>) -> Result<()> {
        cache::write_file(path.as_ref(), &self.sinks_to_bytes())
    }
}

/// Reads a `BNSK` file.
pub fn load_sinks(path: impl AsRef<Path>) -> Result<(CacheHeader, Vec<u8>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    sinks_from_bytes(&bytes)
}

pub fn sinks_from_bytes(bytes: &[u8]) -> Result<(CacheHeader, Vec<u8>)> {
    let (header, mut r) = decode_header(bytes)?;
    if header.kind != CacheKind::Sinks {
        return Err(Error::HeaderMismatch(format!(
            "expected a Sinks file, found {:?}",
            header.kind
        )));
    }
    let sinks = r.take(1usize << header.n())?.to_vec();
    r.finish()?;
    Ok((header, sinks))
}

pub fn ordering_from_sinks(n: usize, sinks: &[u8]) -> Result<Ordering> {
    if n == 0 || n > crate::MAX_VARS || sinks.len() != 1usize << n {
        return Err(Error::InvalidArgument(format!(
            "sink table of {} entries does not fit {n} variables",
            sinks.len()
        )));
    }
    let mut w = (sinks.len() - 1) as u32;
    let mut ord = vec![0; n];
    for slot in ord.iter_mut().rev() {
        let s = sinks[w as usize] as usize;
        if s >= n || w & (1 << s) == 0 {
            return Err(Error::Cache(format!(
                "sink {s} of set {w:#x} is not a member"
            )));
        }
        *slot = s;
        w &= !(1 << s);
    }
    Ordering::new(ord)
}
