//! Candidate expansions, their total order, and streaming top-B selection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// One expansion of a beam entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub parent: u32,
    pub action: u32,
    /// Current node after the move.
    pub node: u32,
    pub cost: f64,
    /// Remaining capacity (VRP) or time (TSPTW).
    pub resource: f64,
    pub heat: f64,
    pub potential: f64,
    pub score: f64,
}

/// Global ranking: score descending, then cost, current node, parent slot
/// and action ascending. `Less` means "ranks first".
#[inline]
pub fn rank_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.cost.total_cmp(&b.cost))
        .then_with(|| a.node.cmp(&b.node))
        .then_with(|| a.parent.cmp(&b.parent))
        .then_with(|| a.action.cmp(&b.action))
}

/// Receives dominance-pruned candidates.
pub trait CandidateSink {
    /// False when a candidate with this score can no longer be selected.
    fn admits(&self, score: f64) -> bool;
    fn push(&mut self, cand: Candidate);
}

impl CandidateSink for Vec<Candidate> {
    fn admits(&self, _score: f64) -> bool {
        true
    }

    fn push(&mut self, cand: Candidate) {
        Vec::push(self, cand)
    }
}

struct Ranked(Candidate);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        rank_cmp(&self.0, &other.0) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    // worst candidate on top of the max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        rank_cmp(&self.0, &other.0)
    }
}

/// Keeps the `B` best candidates seen so far.
pub struct TopB {
    capacity: usize,
    heap: BinaryHeap<Ranked>,
    pushed: usize,
}

impl TopB {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "beam size must be at least 1");
        TopB {
            capacity,
            heap: BinaryHeap::with_capacity(capacity.min(1 << 12)),
            pushed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Number of candidates offered so far.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// Score of the current `B`-th best, once `B` candidates are held.
    pub fn bound(&self) -> Option<f64> {
        (self.heap.len() == self.capacity).then(|| self.heap.peek().expect("non-empty").0.score)
    }

    /// Selected candidates, best first.
    pub fn into_sorted(self) -> Vec<Candidate> {
        self.heap.into_sorted_vec().into_iter().map(|r| r.0).collect()
    }
}

impl CandidateSink for TopB {
    #[inline]
    fn admits(&self, score: f64) -> bool {
        match self.bound() {
            Some(bound) => score >= bound,
            None => true,
        }
    }

    #[inline]
    fn push(&mut self, cand: Candidate) {
        self.pushed += 1;
        if self.heap.len() < self.capacity {
            self.heap.push(Ranked(cand));
        } else {
            let mut worst = self.heap.peek_mut().expect("non-empty");
            if rank_cmp(&cand, &worst.0) == Ordering::Less {
                *worst = Ranked(cand);
            }
        }
    }
}

/// The `B` best candidates under [`rank_cmp`], best first.
pub fn select_top_b(candidates: impl IntoIterator<Item = Candidate>, beam_size: usize) -> Vec<Candidate> {
    let mut top = TopB::new(beam_size);
    for c in candidates {
        top.push(c);
    }
    top.into_sorted()
}
