//! Binary cache files.
//!
//! All integers are little-endian. Every file starts with the same header:
//!
//! ```text
//! magic       4 bytes   "BNLS" scores, "BNSH" shard, "BNSK" sinks, "BNBP" best parents
//! version     u32       1
//! n           u32
//! score kind  u8        0 = BDe, 1 = BIC, 2 = AIC
//! precision   u8        4 or 8 (bytes per stored score)
//! ess         f64
//! arities     n x u32
//! ```
//!
//! Payloads:
//!
//! * `BNLS`: for `v = 0..n`, `2^(n-1)` scores in ascending collapsed-index order.
//! * `BNSH`: plan depth u32, shard index u32, shard count u32, entry count u64,
//!   then entries `(v u32, collapsed index u32, score)`.
//! * `BNSK`: `2^n` sink bytes indexed by variable-set mask, `0xFF` for none.
//! * `BNBP`: for `v = 0..n`, `2^(n-1)` collapsed best-parent indices as u32.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{subsets_per_var, LocalScoreStore, ShardScores, ShardSpec};
use crate::error::{Error, Result};
use crate::precision::{Precision, ScoreValue};
use crate::scoring::{ScoreKind, ScoreSpec};

pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CacheKind {
    Scores,
    Shard,
    Sinks,
    BestParents,
}

impl CacheKind {
    fn magic(self) -> &'static [u8; 4] {
        match self {
            CacheKind::Scores => b"BNLS",
            CacheKind::Shard => b"BNSH",
            CacheKind::Sinks => b"BNSK",
            CacheKind::BestParents => b"BNBP",
        }
    }

    fn from_magic(magic: &[u8]) -> Option<Self> {
        [
            CacheKind::Scores,
            CacheKind::Shard,
            CacheKind::Sinks,
            CacheKind::BestParents,
        ]
        .into_iter()
        .find(|k| k.magic() == magic)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheHeader {
    pub kind: CacheKind,
    pub spec: ScoreSpec,
    pub precision: Precision,
    pub arities: Vec<u32>,
}

impl CacheHeader {
    pub fn n(&self) -> usize {
        self.arities.len()
    }

    /// Errors unless `other` describes the same scores of the same variables.
    pub fn ensure_compatible(&self, other: &CacheHeader) -> Result<()> {
        if self.spec.kind != other.spec.kind || self.spec.ess.to_bits() != other.spec.ess.to_bits()
        {
            return Err(Error::HeaderMismatch(format!(
                "score {} vs {}",
                self.spec, other.spec
            )));
        }
        if self.precision != other.precision {
            return Err(Error::HeaderMismatch(format!(
                "precision {} vs {} bytes",
                self.precision.bytes(),
                other.precision.bytes()
            )));
        }
        if self.arities != other.arities {
            return Err(Error::HeaderMismatch(format!(
                "arities {:?} vs {:?}",
                self.arities, other.arities
            )));
        }
        Ok(())
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.kind.magic());
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.arities.len() as u32).to_le_bytes());
        out.push(self.spec.kind.code());
        out.push(self.precision.bytes());
        out.extend_from_slice(&self.spec.ess.to_le_bytes());
        for a in &self.arities {
            out.extend_from_slice(&a.to_le_bytes());
        }
    }
}

/// Reads only the header of a cache file.
pub fn read_cache_header(path: impl AsRef<Path>) -> Result<CacheHeader> {
    use std::io::Read;
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    // header is at most 26 + 32 * 4 bytes
    Read::by_ref(&mut file)
        .take(26 + 4 * crate::MAX_VARS as u64)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode_header(&bytes).map(|(h, _)| h)
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Cache("file truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Cache(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn decode_header(bytes: &[u8]) -> Result<(CacheHeader, Reader<'_>)> {
    let mut r = Reader::new(bytes);
    let magic = r
        .take(4)
        .map_err(|_| Error::HeaderMismatch("not a cache file".into()))?;
    let kind = CacheKind::from_magic(magic)
        .ok_or_else(|| Error::HeaderMismatch(format!("bad magic {magic:?}")))?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::HeaderMismatch(format!(
            "format version {version}, expected {VERSION}"
        )));
    }
    let n = r.u32()? as usize;
    if n == 0 || n > crate::MAX_VARS {
        return Err(Error::Cache(format!("bad variable count {n}")));
    }
    let code = r.u8()?;
    let score_kind =
        ScoreKind::from_code(code).ok_or_else(|| Error::Cache(format!("bad score kind {code}")))?;
    let bytes_per = r.u8()?;
    let precision = Precision::from_bytes(bytes_per)
        .ok_or_else(|| Error::Cache(format!("bad precision {bytes_per}")))?;
    let ess = r.f64()?;
    let arities = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let header = CacheHeader {
        kind,
        spec: ScoreSpec {
            kind: score_kind,
            ess,
        },
        precision,
        arities,
    };
    Ok((header, r))
}

/// Decodes a header and checks its kind and precision.
pub(crate) fn expect_header<S: ScoreValue>(
    bytes: &[u8],
    kind: CacheKind,
) -> Result<(CacheHeader, Reader<'_>)> {
    let (header, r) = decode_header(bytes)?;
    if header.kind != kind {
        return Err(Error::HeaderMismatch(format!(
            "expected a {:?} file, found {:?}",
            kind, header.kind
        )));
    }
    if header.precision != Precision::of::<S>() {
        return Err(Error::HeaderMismatch(format!(
            "file stores {}-byte scores, expected {}",
            header.precision.bytes(),
            S::BYTES
        )));
    }
    Ok((header, r))
}

pub(crate) fn encode_store<S: ScoreValue>(store: &LocalScoreStore<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + store.entry_count() * S::BYTES as usize);
    store.header(CacheKind::Scores).encode(&mut out);
    for v in 0..store.n() {
        for &s in store.scores_of(v) {
            s.write_le(&mut out);
        }
    }
    out
}

pub(crate) fn decode_store<S: ScoreValue>(bytes: &[u8]) -> Result<LocalScoreStore<S>> {
    let (header, mut r) = expect_header::<S>(bytes, CacheKind::Scores)?;
    let n = header.n();
    let per_var = subsets_per_var(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = r.take(per_var * S::BYTES as usize)?;
        scores.push(
            raw.chunks_exact(S::BYTES as usize)
                .map(S::read_le)
                .collect(),
        );
    }
    r.finish()?;
    LocalScoreStore::from_raw(header.spec, header.arities, scores)
}

pub(crate) fn encode_shard<S: ScoreValue>(shard: &ShardScores<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + shard.entries.len() * (8 + S::BYTES as usize));
    shard.header().encode(&mut out);
    out.extend_from_slice(&shard.depth.to_le_bytes());
    out.extend_from_slice(&shard.shard.index.to_le_bytes());
    out.extend_from_slice(&shard.shard.count.to_le_bytes());
    out.extend_from_slice(&(shard.entries.len() as u64).to_le_bytes());
    for &(v, idx, s) in &shard.entries {
        out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(&idx.to_le_bytes());
        s.write_le(&mut out);
    }
    out
}

pub(crate) fn decode_shard<S: ScoreValue>(bytes: &[u8]) -> Result<ShardScores<S>> {
    let (header, mut r) = expect_header::<S>(bytes, CacheKind::Shard)?;
    let depth = r.u32()?;
    let index = r.u32()?;
    let count = r.u32()?;
    let shard = ShardSpec::new(index, count).map_err(|e| Error::Cache(e.to_string()))?;
    let len = r.u64()? as usize;
    let entry_bytes = 8 + S::BYTES as usize;
    let raw = r.take(
        len.checked_mul(entry_bytes)
            .ok_or_else(|| Error::Cache("entry count overflows".into()))?,
    )?;
    r.finish()?;
    let entries = raw
        .chunks_exact(entry_bytes)
        .map(|e| {
            (
                u32::from_le_bytes(e[0..4].try_into().unwrap()),
                u32::from_le_bytes(e[4..8].try_into().unwrap()),
                S::read_le(&e[8..]),
            )
        })
        .collect();
    Ok(ShardScores {
        spec: header.spec,
        arities: header.arities,
        depth,
        shard,
        entries,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
