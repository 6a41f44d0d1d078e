//! Fixed-width packed encodings of data vectors.
//!
//! Every variable owns a bit field of `ceil(log2(arity))` bits. Fields are
//! packed from the most significant bit of word 0 downwards and never straddle
//! a word boundary, so comparing keys word by word orders them exactly like
//! the value vectors `(x_0, x_1, ..)` in lexicographic order. Variables outside
//! a table's variable set always hold zero in their field.

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Key storage: a fixed number of 64-bit words.
pub trait PackedKey: Copy + Ord + Hash + Debug + Send + Sync + 'static {
    const WORDS: usize;

    fn zero() -> Self;
    fn words(&self) -> &[u64];
    fn words_mut(&mut self) -> &mut [u64];

    #[inline]
    fn and(mut self, mask: &Self) -> Self {
        for (w, m) in self.words_mut().iter_mut().zip(mask.words()) {
            *w &= m;
        }
        self
    }

    #[inline]
    fn and_not(mut self, mask: &Self) -> Self {
        for (w, m) in self.words_mut().iter_mut().zip(mask.words()) {
            *w &= !m;
        }
        self
    }

    #[inline]
    fn or(mut self, other: &Self) -> Self {
        for (w, m) in self.words_mut().iter_mut().zip(other.words()) {
            *w |= m;
        }
        self
    }
}

impl<const W: usize> PackedKey for [u64; W] {
    const WORDS: usize = W;

    #[inline]
    fn zero() -> Self {
        [0; W]
    }

    #[inline]
    fn words(&self) -> &[u64] {
        self
    }

    #[inline]
    fn words_mut(&mut self) -> &mut [u64] {
        self
    }
}

/// One-word keys; enough for e.g. 64 binary or 32 ternary variables.
pub type Key64 = [u64; 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Field {
    word: u8,
    shift: u8,
    width: u8,
}

impl Field {
    #[inline]
    fn bits(self) -> u64 {
        if self.width == 0 {
            0
        } else {
            (u64::MAX >> (64 - self.width)) << self.shift
        }
    }
}

/// Bit positions of every variable of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyLayout {
    arities: Vec<u32>,
    fields: Vec<Field>,
    words: usize,
}

impl KeyLayout {
    pub fn new(arities: &[u32]) -> Self {
        let mut fields = Vec::with_capacity(arities.len());
        let mut word = 0usize;
        let mut used = 0u32;
        for &arity in arities {
            let width = bit_width(arity.saturating_sub(1));
            if used + width > 64 {
                word += 1;
                used = 0;
            }
            used += width;
            fields.push(Field {
                word: word as u8,
                shift: (64 - used) as u8,
                width: width as u8,
            });
        }
        KeyLayout {
            arities: arities.to_vec(),
            fields,
            words: word + 1,
        }
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    pub fn n(&self) -> usize {
        self.arities.len()
    }

    /// Number of 64-bit words a key needs.
    pub fn words(&self) -> usize {
        self.words
    }

    pub(crate) fn check_key<K: PackedKey>(&self) -> Result<()> {
        if self.words > K::WORDS {
            return Err(Error::InvalidArgument(format!(
                "data needs {}-word keys, table type holds {}",
                self.words,
                K::WORDS
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn get<K: PackedKey>(&self, key: &K, v: usize) -> u32 {
        let f = self.fields[v];
        if f.width == 0 {
            return 0;
        }
        ((key.words()[f.word as usize] >> f.shift) & (u64::MAX >> (64 - f.width))) as u32
    }

    #[inline]
    pub fn set<K: PackedKey>(&self, key: &mut K, v: usize, value: u32) {
        let f = self.fields[v];
        let w = &mut key.words_mut()[f.word as usize];
        *w = (*w & !f.bits()) | ((u64::from(value) << f.shift) & f.bits());
    }

    /// Bits of variable `v`.
    pub fn field_mask<K: PackedKey>(&self, v: usize) -> K {
        let f = self.fields[v];
        let mut k = K::zero();
        k.words_mut()[f.word as usize] = f.bits();
        k
    }

    /// Bits of all variables ordered before `v`.
    pub fn prefix_mask<K: PackedKey>(&self, v: usize) -> K {
        let f = self.fields[v];
        let mut k = K::zero();
        let words = k.words_mut();
        for w in words.iter_mut().take(f.word as usize) {
            *w = u64::MAX;
        }
        let top = u32::from(f.shift) + u32::from(f.width);
        if top < 64 {
            words[f.word as usize] = u64::MAX << top;
        }
        k
    }

    /// Bits of all variables ordered after `v`.
    pub fn suffix_mask<K: PackedKey>(&self, v: usize) -> K {
        let f = self.fields[v];
        let mut k = K::zero();
        let words = k.words_mut();
        for w in words.iter_mut().skip(f.word as usize + 1) {
            *w = u64::MAX;
        }
        if f.shift > 0 {
            words[f.word as usize] = u64::MAX >> (64 - f.shift);
        }
        k
    }

    /// Encodes the members of `vars` from a full data vector.
    #[inline]
    pub fn encode<K: PackedKey>(&self, row: &[u32], vars: crate::VarSet) -> K {
        let mut k = K::zero();
        for v in vars {
            let f = self.fields[v];
            if f.width > 0 {
                k.words_mut()[f.word as usize] |= u64::from(row[v]) << f.shift;
            }
        }
        k
    }
}

fn bit_width(max_value: u32) -> u32 {
    32 - max_value.leading_zeros()
}
