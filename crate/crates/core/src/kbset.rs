//! Compact bitset over the KB library.

use serde::{Deserialize, Serialize};

/// Largest KB library a [`KbSet`] can index.
pub const MAX_KBS: usize = 64;

/// A set of KB indices `0..K` with `K <= 64`, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KbSet(u64);

impl KbSet {
    pub const EMPTY: KbSet = KbSet(0);

    pub fn from_bits(bits: u64) -> Self {
        KbSet(bits)
    }

    /// The set `{0, .., k-1}`.
    pub fn full(k: usize) -> Self {
        assert!(k <= MAX_KBS, "at most {MAX_KBS} KBs are supported");
        if k == MAX_KBS {
            KbSet(u64::MAX)
        } else {
            KbSet((1u64 << k) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut set = KbSet::EMPTY;
        for k in indices {
            set.insert(k);
        }
        set
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, k: usize) -> bool {
        k < MAX_KBS && self.0 & (1 << k) != 0
    }

    pub fn insert(&mut self, k: usize) {
        debug_assert!(k < MAX_KBS);
        self.0 |= 1 << k;
    }

    pub fn remove(&mut self, k: usize) {
        debug_assert!(k < MAX_KBS);
        self.0 &= !(1 << k);
    }

    pub fn toggled(self, k: usize) -> Self {
        KbSet(self.0 ^ (1 << k))
    }

    pub fn intersection(self, other: KbSet) -> KbSet {
        KbSet(self.0 & other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn hamming(self, other: KbSet) -> usize {
        (self.0 ^ other.0).count_ones() as usize
    }

    /// Indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(k)
            }
        })
    }

    /// Sum of `values[k]` over members.
    pub fn sum_of(self, values: &[f64]) -> f64 {
        self.iter().map(|k| values[k]).sum()
    }

    /// Total storage of members.
    pub fn storage(self, sizes: &[u32]) -> u64 {
        self.iter().map(|k| u64::from(sizes[k])).sum()
    }
}

impl FromIterator<usize> for KbSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        KbSet::from_indices(iter)
    }
}
