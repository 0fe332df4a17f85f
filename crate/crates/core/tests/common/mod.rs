//! Shared test helpers: random beams, a naive pairwise dominance oracle and
//! a from-scratch score evaluator.

#![allow(dead_code)]

use std::cmp::Ordering;

use dpdp::dp::{group_by_visited, init_beam, rank_cmp, Beam, Candidate, ExpandContext, Expander};
use dpdp::heatmap::{Heatmap, SparseGraph};
use dpdp::instance::{CostMatrix, Instance, ProblemKind, TimeWindow, DEPOT};
use dpdp::policy::{PolicyKind, PolicyTables};
use rand::seq::SliceRandom;
use rand::Rng;

/// Everything needed to expand one random beam.
pub struct Case {
    pub instance: Instance,
    pub costs: CostMatrix,
    pub tables: PolicyTables,
    pub graph: SparseGraph,
    pub beam: Beam,
}

impl Case {
    pub fn context(&self, dominance: bool) -> ExpandContext<'_> {
        ExpandContext {
            instance: &self.instance,
            costs: &self.costs,
            graph: &self.graph,
            tables: &self.tables,
            dominance,
            prefilter: false,
        }
    }
}

/// Instance on a coarse integer grid so that equal costs are common.
pub fn grid_instance(kind: ProblemKind, n: usize, rng: &mut impl Rng) -> Instance {
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64])
        .collect();
    match kind {
        ProblemKind::Tsp => Instance::tsp(coords).unwrap(),
        ProblemKind::Vrp => {
            let capacity = 10.0;
            let demands = (0..n)
                .map(|i| if i == 0 { 0.0 } else { rng.gen_range(1..=5) as f64 })
                .collect();
            Instance::vrp(coords, demands, capacity).unwrap()
        }
        ProblemKind::Tsptw => {
            let windows = (0..n)
                .map(|i| {
                    if i == 0 {
                        TimeWindow::new(0.0, 1000.0)
                    } else {
                        let a = rng.gen_range(0..40) as f64;
                        TimeWindow::new(a, a + rng.gen_range(0..60) as f64)
                    }
                })
                .collect();
            Instance::tsptw(coords, windows).unwrap()
        }
    }
}

/// A random beam at one step for `kind`: a handful of visited-set groups,
/// integer costs and resources, at most `max_entries` entries.
pub fn random_case(kind: ProblemKind, rng: &mut impl Rng, max_entries: usize) -> Case {
    let n = rng.gen_range(5..=12);
    let instance = grid_instance(kind, n, rng);
    let costs = instance.costs();
    let policy = if rng.gen_bool(0.5) {
        PolicyKind::Cost
    } else {
        PolicyKind::CostHeat
    };
    let tables = PolicyTables::for_policy(&instance, &costs, None, policy, rng.gen_bool(0.5)).unwrap();
    let density = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.4..0.9) };
    let mut graph = SparseGraph::from_fn(n, |i, j| i != j && rng.gen_bool(density));
    if kind == ProblemKind::Vrp {
        graph = graph.with_depot_edges();
    }

    // VRP visits customers only; TSP/TSPTW always have the start visited.
    let (lo, hi) = match kind {
        ProblemKind::Vrp => (0, n - 2),
        _ => (1, n - 1),
    };
    let size = rng.gen_range(lo..=hi);
    let entries = rng.gen_range(1..=max_entries);
    let groups = rng.gen_range(1..=6);
    let sets: Vec<Vec<usize>> = (0..groups)
        .map(|_| {
            let mut customers: Vec<usize> = (1..n).collect();
            customers.shuffle(rng);
            let mut set: Vec<usize> = customers.into_iter().take(size - (kind != ProblemKind::Vrp) as usize).collect();
            if kind != ProblemKind::Vrp {
                set.push(DEPOT);
            }
            set
        })
        .collect();

    let words = n.div_ceil(64);
    let mut beam = Beam::new(n, false);
    for slot in 0..entries {
        let set = &sets[rng.gen_range(0..sets.len())];
        let mut w = vec![0u64; words];
        for &v in set {
            w[v / 64] |= 1 << (v % 64);
        }
        let current = match kind {
            ProblemKind::Vrp if set.is_empty() => DEPOT,
            ProblemKind::Vrp => set[rng.gen_range(0..set.len())],
            _ if set.len() == 1 => DEPOT,
            _ => {
                let others: Vec<usize> = set.iter().copied().filter(|&v| v != DEPOT).collect();
                others[rng.gen_range(0..others.len())]
            }
        };
        let cost = rng.gen_range(0..30) as f64;
        let resource = match kind {
            ProblemKind::Tsp => 0.0,
            ProblemKind::Vrp if set.is_empty() => instance.capacity(),
            ProblemKind::Vrp => rng.gen_range(0..=10) as f64,
            ProblemKind::Tsptw => {
                let l = instance.windows()[current].earliest;
                l + rng.gen_range(0..20) as f64
            }
        };
        let heat = rng.gen_range(0..4) as f64 * 0.25;
        beam.push_entry(&tables, &w, current, cost, resource, heat, slot);
    }
    Case {
        instance,
        costs,
        tables,
        graph,
        beam,
    }
}

/// Identity of a surviving candidate, exact to the bit.
pub type Key = (u32, u32, u64, u64);

pub fn key(c: &Candidate) -> Key {
    (c.parent, c.action, c.cost.to_bits(), c.resource.to_bits())
}

/// The solver's own pruned expansions, as sorted keys.
pub fn fast_survivors(case: &Case) -> Vec<Key> {
    let mut out: Vec<Candidate> = Vec::new();
    let groups = group_by_visited(&case.beam);
    Expander::new(case.context(true)).expand(&case.beam, &groups, &mut out);
    let mut keys: Vec<Key> = out.iter().map(key).collect();
    keys.sort_unstable();
    keys
}

fn is_visited(words: &[u64], v: usize) -> bool {
    words[v / 64] >> (v % 64) & 1 == 1
}

/// Every feasible expansion of every entry, generated without any pruning.
/// The second tuple element is the child's visited set.
pub fn naive_expansions(case: &Case) -> Vec<(Candidate, Vec<u64>)> {
    let inst = &case.instance;
    let n = inst.len();
    let c = &case.costs;
    let h = case.tables.heatmap();
    let beam = &case.beam;
    let rank_by_cost = case.tables.ranks_by_cost();
    let mk = |parent: usize, action: usize, node: usize, cost: f64, resource: f64, heat: f64| {
        let score = if rank_by_cost { -cost } else { heat };
        Candidate {
            parent: parent as u32,
            action: action as u32,
            node: node as u32,
            cost,
            resource,
            heat,
            potential: 0.0,
            score,
        }
    };
    let mut out = Vec::new();
    for p in 0..beam.len() {
        let e = beam.entry(p);
        let unvisited: Vec<usize> = (0..n).filter(|&v| !is_visited(e.visited, v)).collect();
        let mut child = |cand: Candidate| {
            let mut w = e.visited.to_vec();
            let v = cand.node as usize;
            w[v / 64] |= 1 << (v % 64);
            out.push((cand, w));
        };
        match inst.kind() {
            ProblemKind::Tsp => {
                for &j in &unvisited {
                    if case.graph.has_edge(e.current, j) {
                        child(mk(p, j, j, e.cost + c[(e.current, j)], 0.0, e.heat + h.get(e.current, j)));
                    }
                }
            }
            ProblemKind::Tsptw => {
                let win = inst.windows();
                for &j in &unvisited {
                    if !case.graph.has_edge(e.current, j) {
                        continue;
                    }
                    let arrival = e.resource + c[(e.current, j)];
                    if arrival > win[j].latest {
                        continue;
                    }
                    let time = arrival.max(win[j].earliest);
                    if unvisited.iter().any(|&k| k != j && time + c[(j, k)] > win[k].latest) {
                        continue;
                    }
                    child(mk(p, j, j, e.cost + c[(e.current, j)], time, e.heat + h.get(e.current, j)));
                }
            }
            ProblemKind::Vrp => {
                let first = unvisited.len() == n;
                let back = e.current == DEPOT || case.graph.has_edge(e.current, DEPOT);
                for &j in unvisited.iter().filter(|&&j| j != DEPOT) {
                    if back && case.graph.has_edge(DEPOT, j) {
                        let cost = e.cost + c[(e.current, DEPOT)] + c[(DEPOT, j)];
                        let heat = e.heat + h.get(e.current, DEPOT) * h.get(DEPOT, j) * 0.1;
                        child(mk(p, n + j, j, cost, inst.capacity() - inst.demands()[j], heat));
                    }
                    let d = inst.demands()[j];
                    if !first && case.graph.has_edge(e.current, j) && d <= e.resource {
                        let cost = e.cost + c[(e.current, j)];
                        child(mk(p, j, j, cost, e.resource - d, e.heat + h.get(e.current, j)));
                    }
                }
            }
        }
    }
    out
}

/// `a` beats `b` within one DP state: better or equal on both criteria with
/// one strict, or identical on both and ranked first.
fn beats(kind: ProblemKind, a: &Candidate, b: &Candidate) -> bool {
    let (ar, br) = match kind {
        ProblemKind::Tsp => (0.0, 0.0),
        ProblemKind::Vrp => (a.resource, b.resource),
        ProblemKind::Tsptw => (-a.resource, -b.resource),
    };
    if a.cost == b.cost && ar == br {
        return rank_cmp(a, b) == Ordering::Less;
    }
    a.cost <= b.cost && ar >= br
}

/// Naive O(m^2) pruning: a candidate survives iff nothing in its DP state
/// beats it.
pub fn naive_survivors(case: &Case) -> Vec<Key> {
    let all = naive_expansions(case);
    let kind = case.instance.kind();
    let mut keys: Vec<Key> = all
        .iter()
        .filter(|(c, vis)| {
            !all.iter()
                .any(|(d, dvis)| d.node == c.node && dvis == vis && !std::ptr::eq(c, d) && beats(kind, d, c))
        })
        .map(|(c, _)| key(c))
        .collect();
    keys.sort_unstable();
    keys
}

/// Asserts no surviving pair within a DP state dominates the other on
/// (cost, resource), ties included.
pub fn assert_pareto_clean(kind: ProblemKind, beam: &Beam) {
    for a in 0..beam.len() {
        for b in 0..beam.len() {
            let (ea, eb) = (beam.entry(a), beam.entry(b));
            if a == b || ea.current != eb.current || ea.visited != eb.visited {
                continue;
            }
            let (ra, rb) = match kind {
                ProblemKind::Tsp => (0.0, 0.0),
                ProblemKind::Vrp => (ea.resource, eb.resource),
                ProblemKind::Tsptw => (-ea.resource, -eb.resource),
            };
            assert!(
                !(ea.cost <= eb.cost && ra >= rb),
                "entry {a} dominates entry {b} in the same state"
            );
        }
    }
}

/// From-scratch heat-to-go of a visited set, computed straight from the
/// heatmap and costs.
pub fn potential_from_scratch(heat: &Heatmap, costs: &CostMatrix, visited: &[bool]) -> f64 {
    let n = heat.len();
    let max_to_start = (0..n).map(|j| costs[(j, DEPOT)]).fold(0.0, f64::max);
    let mut total = 0.0;
    for i in 0..n {
        let counted = !visited[i] || i == DEPOT;
        if !counted {
            continue;
        }
        let z: f64 = (0..n).map(|k| heat.get(k, i)).sum();
        if z == 0.0 {
            continue;
        }
        let max_in = (0..n).map(|j| heat.get(j, i)).fold(0.0, f64::max);
        let rel = if max_to_start > 0.0 {
            costs[(i, DEPOT)] / max_to_start
        } else {
            0.0
        };
        let w = max_in * (1.0 - 0.1 * (rel - 0.5));
        let remaining: f64 = (0..n).filter(|&j| !visited[j]).map(|j| heat.get(j, i)).sum();
        total += w * remaining / z;
    }
    total
}

/// Heat of an action sequence, recomputed edge by edge.
pub fn heat_from_scratch(kind: ProblemKind, heat: &Heatmap, actions: &[usize]) -> f64 {
    let n = heat.len();
    let mut cur = DEPOT;
    let mut total = 0.0;
    for &a in actions {
        let (j, gain) = if kind == ProblemKind::Vrp && a >= n {
            let j = a - n;
            (j, heat.get(cur, DEPOT) * heat.get(DEPOT, j) * 0.1)
        } else {
            (a, heat.get(cur, a))
        };
        total += gain;
        cur = j;
    }
    total
}

/// One random expansion chain: starting from the initial entry, repeatedly
/// takes a random unpruned expansion. Calls `visit` with the single-entry
/// beam and the actions so far after every step.
pub fn random_chain(
    instance: &Instance,
    tables: &PolicyTables,
    graph: &SparseGraph,
    rng: &mut impl Rng,
    mut visit: impl FnMut(&Beam, &[usize]),
) {
    let costs = instance.costs();
    let ctx = ExpandContext {
        instance,
        costs: &costs,
        graph,
        tables,
        dominance: false,
        prefilter: false,
    };
    let mut expander = Expander::new(ctx);
    let mut beam = init_beam(instance, tables);
    let mut actions = Vec::new();
    visit(&beam, &actions);
    for _ in 1..instance.len() {
        let groups = group_by_visited(&beam);
        let mut cands: Vec<Candidate> = Vec::new();
        expander.expand(&beam, &groups, &mut cands);
        let Some(&pick) = cands.choose(rng) else {
            return;
        };
        actions.push(pick.action as usize);
        beam = Beam::from_candidates(&beam, tables, &[pick]);
        visit(&beam, &actions);
    }
}

/// A random heatmap with values in (0, 1), symmetric unless `directed`.
pub fn random_heatmap(n: usize, directed: bool, rng: &mut impl Rng) -> Heatmap {
    let raw = Heatmap::from_fn(n, true, |_, _| rng.gen_range(0.0..1.0)).unwrap();
    if directed {
        raw
    } else {
        raw.symmetrize()
    }
}

/// Independent re-simulation of decoded routes: every customer exactly once,
/// depot at both ends, capacity, time windows with waiting, and (when given)
/// graph edges. Returns the recomputed cost.
pub fn resimulate(instance: &Instance, graph: Option<&SparseGraph>, routes: &[Vec<usize>]) -> Result<f64, String> {
    let n = instance.len();
    let coords = instance.coords();
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (coords[a][0] - coords[b][0], coords[a][1] - coords[b][1]);
        dx.hypot(dy)
    };
    if instance.kind() != ProblemKind::Vrp && routes.len() != 1 {
        return Err(format!("{} routes for a single-tour problem", routes.len()));
    }
    let mut count = vec![0usize; n];
    let mut total = 0.0;
    for route in routes {
        if route.first() != Some(&DEPOT) || route.last() != Some(&DEPOT) || route.len() < 3 {
            return Err(format!("bad route {route:?}"));
        }
        let (mut load, mut time) = (0.0, 0.0);
        for w in route.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b >= n {
                return Err(format!("node {b} out of range"));
            }
            if let Some(g) = graph {
                if !g.has_edge(a, b) {
                    return Err(format!("edge {a}->{b} not in graph"));
                }
            }
            total += dist(a, b);
            if b != DEPOT {
                count[b] += 1;
            }
            match instance.kind() {
                ProblemKind::Tsp => {}
                ProblemKind::Vrp => load += instance.demands()[b],
                ProblemKind::Tsptw => {
                    let tw = instance.windows()[b];
                    time += dist(a, b);
                    if time > tw.latest {
                        return Err(format!("late at {b}: {time} > {}", tw.latest));
                    }
                    time = time.max(tw.earliest);
                }
            }
        }
        if instance.kind() == ProblemKind::Vrp && load > instance.capacity() + 1e-9 {
            return Err(format!("load {load} over capacity"));
        }
        if route[1..route.len() - 1].contains(&DEPOT) {
            return Err("depot inside a route".into());
        }
    }
    if let Some(v) = (1..n).find(|&v| count[v] != 1) {
        return Err(format!("node {v} visited {} times", count[v]));
    }
    Ok(total)
}
