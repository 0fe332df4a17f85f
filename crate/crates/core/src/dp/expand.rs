//! Expansion of a grouped beam into dominance-pruned candidates.
//!
//! All parents of a group share their visited set, so every DP state
//! `(visited + j, j)` produced by a group is produced by that group only.
//! Dominance is therefore checked group by group, per target node.

use std::cmp::Ordering;

use crate::heatmap::SparseGraph;
use crate::instance::{CostMatrix, Instance, ProblemKind, DEPOT};
use crate::policy::PolicyTables;

use super::beam::{Beam, Grouping};
use super::select::{rank_cmp, Candidate, CandidateSink};
use super::visited::{self, popcount};

/// Immutable inputs shared by every expansion step of a solve.
#[derive(Clone, Copy)]
pub struct ExpandContext<'a> {
    pub instance: &'a Instance,
    pub costs: &'a CostMatrix,
    pub graph: &'a SparseGraph,
    pub tables: &'a PolicyTables,
    /// Prune dominated candidates; off gives plain beam search.
    pub dominance: bool,
    /// Drop candidates scoring below the sink's bound before pruning.
    pub prefilter: bool,
}

/// Expansion routines plus reusable per-group scratch space.
pub struct Expander<'a> {
    ctx: ExpandContext<'a>,
    n: usize,
    potential: Vec<f64>,
    unvisited: Vec<usize>,
    best: Vec<Option<Candidate>>,
    lists: Vec<Vec<Candidate>>,
    touched: Vec<usize>,
}

impl<'a> Expander<'a> {
    pub fn new(ctx: ExpandContext<'a>) -> Self {
        let n = ctx.instance.len();
        Expander {
            ctx,
            n,
            potential: vec![0.0; n],
            unvisited: Vec::with_capacity(n),
            best: vec![None; n],
            lists: vec![Vec::new(); n],
            touched: Vec::with_capacity(n),
        }
    }

    pub fn context(&self) -> &ExpandContext<'a> {
        &self.ctx
    }

    pub fn expand(&mut self, beam: &Beam, groups: &Grouping, sink: &mut impl CandidateSink) {
        match self.ctx.instance.kind() {
            ProblemKind::Tsp => self.expand_tsp(beam, groups, sink),
            ProblemKind::Vrp => self.expand_vrp(beam, groups, sink),
            ProblemKind::Tsptw => self.expand_tsptw(beam, groups, sink),
        }
    }

    /// Caches the unvisited nodes of the group and the potential each child
    /// state would have, taken from the group's first entry.
    fn prepare_group(&mut self, beam: &Beam, rep: usize) {
        let vis = beam.visited(rep);
        self.unvisited.clear();
        self.unvisited
            .extend((0..self.n).filter(|&j| !visited::contains(vis, j)));
        if beam.tracks_potential() {
            let (p, s) = (beam.incoming(rep), beam.outgoing(rep));
            let total = beam.potential[rep];
            for &j in &self.unvisited {
                self.potential[j] = self.ctx.tables.total_after_visit(total, p[j], s[j], j);
            }
        }
    }

    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn candidate(
        &self,
        beam: &Beam,
        parent: usize,
        action: usize,
        node: usize,
        cost: f64,
        resource: f64,
        heat_gain: f64,
    ) -> Candidate {
        let heat = beam.heat[parent] + heat_gain;
        let potential = if beam.tracks_potential() {
            self.potential[node]
        } else {
            0.0
        };
        Candidate {
            parent: parent as u32,
            action: action as u32,
            node: node as u32,
            cost,
            resource,
            heat,
            potential,
            score: self.ctx.tables.score(cost, heat, potential),
        }
    }

    /// TSP: one minimum-cost survivor per DP state, ties to the
    /// first-ranked candidate.
    pub fn expand_tsp(&mut self, beam: &Beam, groups: &Grouping, sink: &mut impl CandidateSink) {
        let ExpandContext {
            costs,
            graph,
            tables,
            dominance,
            prefilter,
            ..
        } = self.ctx;
        for group in groups.iter() {
            self.prepare_group(beam, group[0] as usize);
            let vis = beam.visited(group[0] as usize);
            for &p in group {
                let p = p as usize;
                let cur = beam.current[p] as usize;
                let crow = costs.row(cur);
                for &j in graph.out_edges(cur) {
                    let j = j as usize;
                    if visited::contains(vis, j) {
                        continue;
                    }
                    let cost = beam.cost[p] + crow[j];
                    let cand = self.candidate(beam, p, j, j, cost, 0.0, tables.heat(cur, j));
                    if prefilter && !sink.admits(cand.score) {
                        continue;
                    }
                    if !dominance {
                        sink.push(cand);
                        continue;
                    }
                    match &mut self.best[j] {
                        slot @ None => {
                            *slot = Some(cand);
                            self.touched.push(j);
                        }
                        Some(best) => {
                            if cand.cost < best.cost
                                || (cand.cost == best.cost && rank_cmp(&cand, best) == Ordering::Less)
                            {
                                *best = cand;
                            }
                        }
                    }
                }
            }
            self.flush_best(sink);
        }
    }

    fn flush_best(&mut self, sink: &mut impl CandidateSink) {
        self.touched.sort_unstable();
        for &j in &self.touched {
            if let Some(c) = self.best[j].take() {
                sink.push(c);
            }
        }
        self.touched.clear();
    }

    fn flush_lists(&mut self, sink: &mut impl CandidateSink, maximize: bool) {
        self.touched.sort_unstable();
        for &j in &self.touched {
            pareto_front(&mut self.lists[j], maximize, |c| sink.push(c));
        }
        self.touched.clear();
    }

    fn push_listed(&mut self, j: usize, cand: Candidate) {
        if self.lists[j].is_empty() {
            self.touched.push(j);
        }
        self.lists[j].push(cand);
    }

    /// TSPTW: moves must arrive before the window closes and leave every
    /// other unvisited node reachable directly in time. Survivors per state
    /// form the (cost, time) Pareto front.
    pub fn expand_tsptw(&mut self, beam: &Beam, groups: &Grouping, sink: &mut impl CandidateSink) {
        let ExpandContext {
            instance,
            costs,
            graph,
            tables,
            dominance,
            prefilter,
            ..
        } = self.ctx;
        let windows = instance.windows();
        for group in groups.iter() {
            self.prepare_group(beam, group[0] as usize);
            let vis = beam.visited(group[0] as usize);
            for &p in group {
                let p = p as usize;
                let cur = beam.current[p] as usize;
                let crow = costs.row(cur);
                for &j in graph.out_edges(cur) {
                    let j = j as usize;
                    if visited::contains(vis, j) {
                        continue;
                    }
                    let arrival = beam.resource[p] + crow[j];
                    if arrival > windows[j].latest {
                        continue;
                    }
                    let time = arrival.max(windows[j].earliest);
                    let jrow = costs.row(j);
                    if self
                        .unvisited
                        .iter()
                        .any(|&k| k != j && time + jrow[k] > windows[k].latest)
                    {
                        continue;
                    }
                    let cost = beam.cost[p] + crow[j];
                    let cand = self.candidate(beam, p, j, j, cost, time, tables.heat(cur, j));
                    if prefilter && !sink.admits(cand.score) {
                        continue;
                    }
                    if dominance {
                        self.push_listed(j, cand);
                    } else {
                        sink.push(cand);
                    }
                }
            }
            self.flush_lists(sink, false);
        }
    }

    /// VRP with direct actions `j` and via-depot actions `n + j`.
    ///
    /// Via-depot moves into one state all leave the same remaining capacity,
    /// so only the cheapest can survive: it comes from the parent with the
    /// lowest cost to return to the depot. Direct moves it dominates are
    /// dropped, and the rest are pruned by a running maximum of remaining
    /// capacity in order of increasing cost.
    pub fn expand_vrp(&mut self, beam: &Beam, groups: &Grouping, sink: &mut impl CandidateSink) {
        let ExpandContext {
            instance,
            costs,
            graph,
            tables,
            dominance,
            prefilter,
            ..
        } = self.ctx;
        let n = self.n;
        let demands = instance.demands();
        let capacity = instance.capacity();
        let depot_row = costs.row(DEPOT);
        let max_depot_leg = depot_row.iter().copied().fold(0.0, f64::max);
        let mut ties: Vec<(usize, f64)> = Vec::new();
        let mut via: Vec<Option<Candidate>> = vec![None; n];

        for group in groups.iter() {
            let rep = group[0] as usize;
            self.prepare_group(beam, rep);
            let vis = beam.visited(rep);
            let first_step = popcount(vis) == 0;

            // Stage 1: the best via-depot expansion per target.
            let returnable = |p: usize| {
                let cur = beam.current[p] as usize;
                cur == DEPOT || graph.has_edge(cur, DEPOT)
            };
            let base = |p: usize| beam.cost[p] + costs[(beam.current[p] as usize, DEPOT)];
            ties.clear();
            if dominance {
                let min_base = group
                    .iter()
                    .map(|&p| p as usize)
                    .filter(|&p| returnable(p))
                    .map(base)
                    .fold(f64::INFINITY, f64::min);
                // parents whose via cost could round to the minimum
                let margin = 4.0 * f64::EPSILON * (min_base.abs() + max_depot_leg);
                ties.extend(
                    group
                        .iter()
                        .map(|&p| p as usize)
                        .filter(|&p| returnable(p))
                        .map(|p| (p, base(p)))
                        .filter(|&(_, b)| b <= min_base + margin),
                );
            } else {
                ties.extend(
                    group
                        .iter()
                        .map(|&p| p as usize)
                        .filter(|&p| returnable(p))
                        .map(|p| (p, base(p))),
                );
            }
            for ui in 0..self.unvisited.len() {
                let j = self.unvisited[ui];
                if j == DEPOT || !graph.has_edge(DEPOT, j) {
                    continue;
                }
                let resource = capacity - demands[j];
                for &(p, b) in &ties {
                    let cur = beam.current[p] as usize;
                    let cand = self.candidate(
                        beam,
                        p,
                        n + j,
                        j,
                        b + depot_row[j],
                        resource,
                        tables.via_depot_heat(cur, j),
                    );
                    if prefilter && !sink.admits(cand.score) {
                        continue;
                    }
                    if !dominance {
                        sink.push(cand);
                        continue;
                    }
                    match &mut via[j] {
                        slot @ None => *slot = Some(cand),
                        Some(best) => {
                            if cand.cost < best.cost
                                || (cand.cost == best.cost && rank_cmp(&cand, best) == Ordering::Less)
                            {
                                *best = cand;
                            }
                        }
                    }
                }
            }

            // Stage 2: direct expansions.
            if !first_step {
                for &p in group {
                    let p = p as usize;
                    let cur = beam.current[p] as usize;
                    let remaining = beam.resource[p];
                    let crow = costs.row(cur);
                    for &j in graph.out_edges(cur) {
                        let j = j as usize;
                        if j == DEPOT || visited::contains(vis, j) || demands[j] > remaining {
                            continue;
                        }
                        let cost = beam.cost[p] + crow[j];
                        let cand =
                            self.candidate(beam, p, j, j, cost, remaining - demands[j], tables.heat(cur, j));
                        if prefilter && !sink.admits(cand.score) {
                            continue;
                        }
                        if !dominance {
                            sink.push(cand);
                            continue;
                        }
                        if let Some(v) = &via[j] {
                            if dominates_max(v, &cand) {
                                continue;
                            }
                        }
                        self.push_listed(j, cand);
                    }
                }
            }

            if dominance {
                for (j, slot) in via.iter_mut().enumerate() {
                    if let Some(v) = slot.take() {
                        self.push_listed(j, v);
                    }
                }
                self.flush_lists(sink, true);
            }
        }
    }

    /// Best completed solution from a beam whose entries have visited every
    /// node: `(slot, total cost)`, lowest cost first, ties to the lower slot.
    pub fn complete(&self, beam: &Beam) -> Option<(usize, f64)> {
        let ExpandContext {
            instance,
            costs,
            graph,
            ..
        } = self.ctx;
        let latest = match instance.kind() {
            ProblemKind::Tsptw => instance.windows()[DEPOT].latest,
            _ => f64::INFINITY,
        };
        let mut best: Option<(usize, f64)> = None;
        for slot in 0..beam.len() {
            let cur = beam.current[slot] as usize;
            if !graph.has_edge(cur, DEPOT) {
                continue;
            }
            let leg = costs[(cur, DEPOT)];
            if instance.kind() == ProblemKind::Tsptw && beam.resource[slot] + leg > latest {
                continue;
            }
            let total = beam.cost[slot] + leg;
            if best.is_none_or(|(_, c)| total < c) {
                best = Some((slot, total));
            }
        }
        best
    }
}

/// `a` dominates `b` on (cost down, resource up); exact ties go to the
/// first-ranked candidate.
#[inline]
fn dominates_max(a: &Candidate, b: &Candidate) -> bool {
    if a.cost == b.cost && a.resource == b.resource {
        return rank_cmp(a, b) == Ordering::Less;
    }
    a.cost <= b.cost && a.resource >= b.resource
}

/// Emits the Pareto front of one DP state: sorted by increasing cost, a
/// candidate survives iff its resource is strictly better than that of every
/// cheaper candidate. `maximize` selects remaining capacity (true) or time
/// (false). Drains `list`.
pub fn pareto_front(list: &mut Vec<Candidate>, maximize: bool, mut emit: impl FnMut(Candidate)) {
    let key = |c: &Candidate| if maximize { c.resource } else { -c.resource };
    list.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then_with(|| key(b).total_cmp(&key(a)))
            .then_with(|| rank_cmp(a, b))
    });
    let mut running = f64::NEG_INFINITY;
    for c in list.drain(..) {
        let k = key(&c);
        if k > running {
            running = k;
            emit(c);
        }
    }
}
