//! Variable subsets encoded as bitmasks.
//!
//! Bit `i` of the mask is set when variable `i` is a member. Ascending mask
//! order is the lexicographic subset order used throughout the optimizer: a
//! proper subset always has a smaller mask than any of its supersets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset of the variables `{0, .., n-1}` with `n <= 32`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarSet(u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub const fn from_mask(mask: u32) -> Self {
        VarSet(mask)
    }

    /// The set `{0, .., n-1}`.
    pub const fn full(n: usize) -> Self {
        if n >= 32 {
            VarSet(u32::MAX)
        } else {
            VarSet((1u32 << n) - 1)
        }
    }

    pub const fn singleton(v: usize) -> Self {
        VarSet(1u32 << v)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn contains(self, v: usize) -> bool {
        v < 32 && self.0 & (1u32 << v) != 0
    }

    #[must_use]
    pub const fn with(self, v: usize) -> Self {
        VarSet(self.0 | (1u32 << v))
    }

    #[must_use]
    pub const fn without(self, v: usize) -> Self {
        VarSet(self.0 & !(1u32 << v))
    }

    pub const fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[must_use]
    pub const fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    #[must_use]
    pub const fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in ascending order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    /// Every variable strictly below `v`.
    pub const fn below(v: usize) -> Self {
        VarSet::full(v)
    }
}

impl FromIterator<usize> for VarSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VarSet(iter.into_iter().fold(0, |m, v| m | (1u32 << v)))
    }
}

impl IntoIterator for VarSet {
    type Item = usize;
    type IntoIter = Members;

    fn into_iter(self) -> Members {
        self.iter()
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug)]
pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Members {}

/// Index of `set` among the subsets of `V \ {v}`: bits above `v` shift down by one.
///
/// The caller guarantees `v` is not a member.
#[inline]
pub(crate) fn collapse_mask(v: usize, set: u32) -> u32 {
    let low = (1u32 << v) - 1;
    (set & low) | ((set >> 1) & !low)
}

#[inline]
pub(crate) fn expand_mask(v: usize, index: u32) -> u32 {
    let low = (1u32 << v) - 1;
    (index & low) | ((index & !low) << 1)
}

/// Collapsed index of the parent set `set` of variable `v`.
pub fn collapse(v: usize, set: VarSet) -> Result<u32> {
    if v >= crate::MAX_VARS || set.contains(v) {
        return Err(Error::InvalidArgument(format!(
            "variable {v} cannot be collapsed out of {set:?}"
        )));
    }
    Ok(collapse_mask(v, set.mask()))
}

/// Inverse of [`collapse`].
pub fn expand(v: usize, index: u32) -> VarSet {
    VarSet(expand_mask(v, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_collapses_to_zero() {
        for v in 0..32 {
            assert_eq!(collapse(v, VarSet::EMPTY).unwrap(), 0);
        }
    }

    #[test]
    fn collapse_shifts_bits_above_v() {
        let s: VarSet = [0, 2].into_iter().collect();
        assert_eq!(collapse(1, s).unwrap(), 3);
    }

    #[test]
    fn collapse_rejects_member() {
        assert!(collapse(2, VarSet::singleton(2)).is_err());
    }

    #[test]
    fn round_trip_exhaustive_n6() {
        let n = 6;
        for v in 0..n {
            let mut seen = vec![false; 1 << (n - 1)];
            for idx in 0..(1u32 << (n - 1)) {
                let s = expand(v, idx);
                assert!(!s.contains(v));
                assert!(s.is_subset(VarSet::full(n)));
                let back = collapse(v, s).unwrap();
                assert_eq!(back, idx);
                seen[back as usize] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn collapse_at_top_variable() {
        let s = VarSet::full(31);
        assert_eq!(collapse(31, s).unwrap(), u32::MAX >> 1);
        assert_eq!(expand(31, u32::MAX >> 1), s);
        let s = VarSet::full(32).without(0);
        assert_eq!(collapse(0, s).unwrap(), u32::MAX >> 1);
    }

    #[test]
    fn subset_masks_are_smaller() {
        let t: VarSet = [1, 3, 4].into_iter().collect();
        for sub in 0..t.mask() {
            let s = VarSet::from_mask(sub);
            if s.is_subset(t) {
                assert!(s.mask() < t.mask());
            }
        }
    }

    #[test]
    fn members_ascending() {
        let s: VarSet = [5, 1, 31].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 5, 31]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.first(), Some(1));
    }
}
