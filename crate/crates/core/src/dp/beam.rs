//! The beam: retained partial solutions stored column-wise.

use crate::instance::{Instance, ProblemKind, DEPOT};
use crate::policy::PolicyTables;

use super::select::Candidate;
use super::visited::{self, cmp_words, words_for};

/// Column storage for up to `B` partial solutions of the same step.
///
/// `resource` is the remaining capacity for VRP and the current time for
/// TSPTW. Per-node potential vectors are only kept when the policy has a
/// nonzero potential.
#[derive(Debug, Clone)]
pub struct Beam {
    n: usize,
    words: usize,
    track_potential: bool,
    pub(crate) cost: Vec<f64>,
    pub(crate) current: Vec<u32>,
    pub(crate) resource: Vec<f64>,
    pub(crate) heat: Vec<f64>,
    pub(crate) potential: Vec<f64>,
    pub(crate) score: Vec<f64>,
    pub(crate) parent: Vec<u32>,
    pub(crate) visited: Vec<u64>,
    pub(crate) incoming: Vec<f64>,
    pub(crate) outgoing: Vec<f64>,
}

/// Read-only view of one beam entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEntry<'a> {
    pub cost: f64,
    pub current: usize,
    pub visited: &'a [u64],
    pub resource: f64,
    pub heat: f64,
    pub potential: f64,
    pub score: f64,
    pub parent_slot: usize,
}

impl Beam {
    pub fn new(n: usize, track_potential: bool) -> Self {
        Beam {
            n,
            words: words_for(n),
            track_potential,
            cost: Vec::new(),
            current: Vec::new(),
            resource: Vec::new(),
            heat: Vec::new(),
            potential: Vec::new(),
            score: Vec::new(),
            parent: Vec::new(),
            visited: Vec::new(),
            incoming: Vec::new(),
            outgoing: Vec::new(),
        }
    }

    fn reserve(&mut self, extra: usize) {
        self.cost.reserve(extra);
        self.current.reserve(extra);
        self.resource.reserve(extra);
        self.heat.reserve(extra);
        self.potential.reserve(extra);
        self.score.reserve(extra);
        self.parent.reserve(extra);
        self.visited.reserve(extra * self.words);
        if self.track_potential {
            self.incoming.reserve(extra * self.n);
            self.outgoing.reserve(extra * self.n);
        }
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn tracks_potential(&self) -> bool {
        self.track_potential
    }

    #[inline]
    pub fn visited(&self, slot: usize) -> &[u64] {
        &self.visited[slot * self.words..(slot + 1) * self.words]
    }

    #[inline]
    pub(crate) fn incoming(&self, slot: usize) -> &[f64] {
        &self.incoming[slot * self.n..(slot + 1) * self.n]
    }

    #[inline]
    pub(crate) fn outgoing(&self, slot: usize) -> &[f64] {
        &self.outgoing[slot * self.n..(slot + 1) * self.n]
    }

    pub fn entry(&self, slot: usize) -> BeamEntry<'_> {
        BeamEntry {
            cost: self.cost[slot],
            current: self.current[slot] as usize,
            visited: self.visited(slot),
            resource: self.resource[slot],
            heat: self.heat[slot],
            potential: self.potential[slot],
            score: self.score[slot],
            parent_slot: self.parent[slot] as usize,
        }
    }

    /// Appends an entry whose potential vectors are recomputed from its
    /// visited set. Used to seed beams; the solver itself grows beams with
    /// [`Beam::from_candidates`].
    #[allow(clippy::too_many_arguments)]
    pub fn push_entry(
        &mut self,
        tables: &PolicyTables,
        visited_words: &[u64],
        current: usize,
        cost: f64,
        resource: f64,
        heat: f64,
        parent_slot: usize,
    ) {
        assert_eq!(visited_words.len(), self.words);
        let n = self.n;
        let mut p = vec![0.0; n];
        let mut s = vec![0.0; n];
        let potential = tables.fill_potential(|i| visited::contains(visited_words, i), &mut p, &mut s);
        let potential = if self.track_potential { potential } else { 0.0 };
        self.cost.push(cost);
        self.current.push(current as u32);
        self.resource.push(resource);
        self.heat.push(heat);
        self.potential.push(potential);
        self.score.push(tables.score(cost, heat, potential));
        self.parent.push(parent_slot as u32);
        self.visited.extend_from_slice(visited_words);
        if self.track_potential {
            self.incoming.extend_from_slice(&p);
            self.outgoing.extend_from_slice(&s);
        }
    }

    /// Builds the next beam from selected candidates, in the given order.
    pub fn from_candidates(prev: &Beam, tables: &PolicyTables, selected: &[Candidate]) -> Beam {
        let mut next = Beam::new(prev.n, prev.track_potential);
        next.reserve(selected.len());
        for c in selected {
            let parent = c.parent as usize;
            let node = c.node as usize;
            next.cost.push(c.cost);
            next.current.push(c.node);
            next.resource.push(c.resource);
            next.heat.push(c.heat);
            next.potential.push(c.potential);
            next.score.push(c.score);
            next.parent.push(c.parent);
            let start = next.visited.len();
            next.visited.extend_from_slice(prev.visited(parent));
            visited::insert(&mut next.visited[start..], node);
            if prev.track_potential {
                let start = next.incoming.len();
                next.incoming.extend_from_slice(prev.incoming(parent));
                next.outgoing.extend_from_slice(prev.outgoing(parent));
                let end = next.incoming.len();
                tables.apply_visit(
                    &mut next.incoming[start..end],
                    &mut next.outgoing[start..end],
                    node,
                );
            }
        }
        next
    }
}

/// Whether a policy needs per-node potential vectors.
pub(crate) fn needs_potential(tables: &PolicyTables) -> bool {
    !tables.ranks_by_cost() && tables.weights().iter().any(|&w| w > 0.0)
}

/// The single initial entry: at the start node with nothing but the start
/// visited (TSP/TSPTW), or at the depot with nothing visited and a full
/// vehicle (VRP). TSPTW time starts at 0.
pub fn init_beam(instance: &Instance, tables: &PolicyTables) -> Beam {
    let n = instance.len();
    let mut beam = Beam::new(n, needs_potential(tables));
    let mut words = vec![0u64; words_for(n)];
    let resource = match instance.kind() {
        ProblemKind::Tsp | ProblemKind::Tsptw => {
            visited::insert(&mut words, DEPOT);
            0.0
        }
        ProblemKind::Vrp => instance.capacity(),
    };
    beam.push_entry(tables, &words, DEPOT, 0.0, resource, 0.0, 0);
    beam
}

/// A permutation of beam slots with equal visited sets made contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub order: Vec<u32>,
    /// `bounds[g]..bounds[g + 1]` indexes `order` for group `g`.
    pub bounds: Vec<usize>,
}

impl Grouping {
    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, g: usize) -> &[u32] {
        &self.order[self.bounds[g]..self.bounds[g + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.len()).map(|g| self.group(g))
    }
}

/// Stable lexicographic sort of the packed visited sets.
pub fn group_by_visited(beam: &Beam) -> Grouping {
    let mut order: Vec<u32> = (0..beam.len() as u32).collect();
    order.sort_by(|&a, &b| cmp_words(beam.visited(a as usize), beam.visited(b as usize)));
    let mut bounds = vec![0];
    for k in 1..order.len() {
        if beam.visited(order[k - 1] as usize) != beam.visited(order[k] as usize) {
            bounds.push(k);
        }
    }
    if !order.is_empty() {
        bounds.push(order.len());
    }
    Grouping { order, bounds }
}
