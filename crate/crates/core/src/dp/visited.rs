//! Visited-node sets packed into 64-bit words.

use std::cmp::Ordering;

use smallvec::SmallVec;

#[inline]
pub fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

#[inline]
pub fn contains(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub fn insert(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

#[inline]
pub fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Orders bitmasks as unsigned integers (most significant word first).
#[inline]
pub fn cmp_words(a: &[u64], b: &[u64]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Owned visited set; bits above `n` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisitedSet {
    words: SmallVec<[u64; 2]>,
}

impl VisitedSet {
    pub fn empty(n: usize) -> Self {
        VisitedSet {
            words: SmallVec::from_elem(0, words_for(n)),
        }
    }

    pub fn from_words(words: &[u64]) -> Self {
        VisitedSet {
            words: SmallVec::from_slice(words),
        }
    }

    pub fn with(mut self, i: usize) -> Self {
        insert(&mut self.words, i);
        self
    }

    pub fn contains(&self, i: usize) -> bool {
        contains(&self.words, i)
    }

    pub fn insert(&mut self, i: usize) {
        insert(&mut self.words, i)
    }

    pub fn len(&self) -> usize {
        popcount(&self.words)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing() {
        let mut v = VisitedSet::empty(130);
        assert_eq!(v.words().len(), 3);
        for i in [0, 63, 64, 129] {
            v.insert(i);
        }
        assert_eq!(v.len(), 4);
        assert!(v.contains(64) && !v.contains(65));
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(v.words()[2], 0b10);
    }

    #[test]
    fn numeric_order() {
        let lo = VisitedSet::empty(100).with(63);
        let hi = VisitedSet::empty(100).with(64);
        assert_eq!(cmp_words(lo.words(), hi.words()), Ordering::Less);
        assert_eq!(cmp_words(hi.words(), hi.words()), Ordering::Equal);
    }
}
