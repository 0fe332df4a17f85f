//! Exact reference solvers for small instances: exhaustive enumeration and
//! full-state-space dynamic programming. Neither shares code with the beam
//! solver.

use crate::error::{Error, Result};
use crate::instance::{CostMatrix, Instance, ProblemKind, DEPOT};

/// Size caps. The defaults keep a single solve well under a minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Max nodes (depot included) for TSP/TSPTW enumeration.
    pub brute_force_tour_nodes: usize,
    /// Max customers for VRP enumeration.
    pub brute_force_vrp_customers: usize,
    pub dp_tsp_nodes: usize,
    /// Max nodes (depot included) for VRP/TSPTW label-setting DP.
    pub dp_label_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            brute_force_tour_nodes: 11,
            brute_force_vrp_customers: 8,
            dp_tsp_nodes: 16,
            dp_label_nodes: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `None` when no feasible solution exists.
    pub optimal_cost: Option<f64>,
    pub routes: Option<Vec<Vec<usize>>>,
    /// Permutations, partitions or labels examined.
    pub searched: u64,
}

impl OracleResult {
    fn infeasible(searched: u64) -> Self {
        OracleResult {
            optimal_cost: None,
            routes: None,
            searched,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.optimal_cost.is_some()
    }
}

fn too_big(what: &str, n: usize, cap: usize) -> Error {
    Error::SizeLimit(format!("{what} supports at most {cap}, got {n}"))
}

/// Next permutation in lexicographic order; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn tour_cost(costs: &CostMatrix, order: &[usize]) -> f64 {
    let mut cost = 0.0;
    let mut prev = DEPOT;
    for &v in order {
        cost += costs[(prev, v)];
        prev = v;
    }
    cost + costs[(prev, DEPOT)]
}

fn tour_respects_windows(instance: &Instance, costs: &CostMatrix, order: &[usize]) -> bool {
    let w = instance.windows();
    let mut time = 0.0;
    let mut prev = DEPOT;
    for &v in order.iter().chain(std::iter::once(&DEPOT)) {
        let arrival = time + costs[(prev, v)];
        if arrival > w[v].latest {
            return false;
        }
        time = arrival.max(w[v].earliest);
        prev = v;
    }
    true
}

pub fn brute_force(instance: &Instance) -> Result<OracleResult> {
    brute_force_limited(instance, &Limits::default())
}

/// Exhaustive enumeration. Tours are enumerated in lexicographic order and
/// only strictly cheaper ones replace the incumbent.
pub fn brute_force_limited(instance: &Instance, limits: &Limits) -> Result<OracleResult> {
    let n = instance.len();
    let costs = instance.costs();
    match instance.kind() {
        ProblemKind::Tsp | ProblemKind::Tsptw => {
            if n > limits.brute_force_tour_nodes {
                return Err(too_big("brute force", n, limits.brute_force_tour_nodes));
            }
            let check_windows = instance.kind() == ProblemKind::Tsptw;
            let mut order: Vec<usize> = (1..n).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut searched = 0;
            loop {
                searched += 1;
                if !check_windows || tour_respects_windows(instance, &costs, &order) {
                    let cost = tour_cost(&costs, &order);
                    if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                        best = Some((cost, order.clone()));
                    }
                }
                if !next_permutation(&mut order) {
                    break;
                }
            }
            Ok(match best {
                Some((cost, order)) => {
                    let mut route = vec![DEPOT];
                    route.extend(order);
                    route.push(DEPOT);
                    OracleResult {
                        optimal_cost: Some(cost),
                        routes: Some(vec![route]),
                        searched,
                    }
                }
                None => OracleResult::infeasible(searched),
            })
        }
        ProblemKind::Vrp => {
            let m = n - 1;
            if m > limits.brute_force_vrp_customers {
                return Err(too_big("VRP brute force (customers)", m, limits.brute_force_vrp_customers));
            }
            brute_force_vrp(instance, &costs)
        }
    }
}

/// Set partitions of the customers into capacity-feasible routes, each
/// route ordered optimally by enumeration.
fn brute_force_vrp(instance: &Instance, costs: &CostMatrix) -> Result<OracleResult> {
    let m = instance.len() - 1;
    let full = (1usize << m) - 1;
    let demands = instance.demands();
    let mut searched = 0u64;

    // best ordering for every feasible customer subset
    let mut route_of: Vec<Option<(f64, Vec<usize>)>> = vec![None; full + 1];
    for (mask, slot) in route_of.iter_mut().enumerate().skip(1) {
        let members: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        let load: f64 = members.iter().map(|&v| demands[v]).sum();
        if load > instance.capacity() {
            continue;
        }
        let mut order = members;
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            searched += 1;
            let cost = tour_cost(costs, &order);
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, order.clone()));
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        *slot = best;
    }

    struct Search<'a> {
        route_of: &'a [Option<(f64, Vec<usize>)>],
        best: Option<(f64, Vec<usize>)>,
        chosen: Vec<usize>,
        searched: u64,
    }

    impl Search<'_> {
        fn go(&mut self, remaining: usize, cost: f64) {
            if remaining == 0 {
                self.searched += 1;
                if self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    self.best = Some((cost, self.chosen.clone()));
                }
                return;
            }
            let lowest = remaining & remaining.wrapping_neg();
            let rest = remaining ^ lowest;
            // every subset of `rest`, joined with the lowest customer
            let mut sub = rest;
            loop {
                let mask = sub | lowest;
                if let Some((c, _)) = &self.route_of[mask] {
                    self.chosen.push(mask);
                    self.go(remaining ^ mask, cost + c);
                    self.chosen.pop();
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }

    let mut search = Search {
        route_of: &route_of,
        best: None,
        chosen: Vec::new(),
        searched,
    };
    search.go(full, 0.0);
    let searched = search.searched;
    Ok(match search.best {
        Some((cost, masks)) => {
            let routes = masks
                .iter()
                .map(|&mask| {
                    let order = &route_of[mask].as_ref().expect("feasible").1;
                    let mut r = vec![DEPOT];
                    r.extend(order);
                    r.push(DEPOT);
                    r
                })
                .collect();
            OracleResult {
                optimal_cost: Some(cost),
                routes: Some(routes),
                searched,
            }
        }
        None => OracleResult::infeasible(searched),
    })
}

pub fn exact_dp(instance: &Instance) -> Result<OracleResult> {
    exact_dp_limited(instance, &Limits::default())
}

/// Full dynamic programming over (visited customers, last customer): a single
/// value per state for TSP, Pareto label sets for VRP and TSPTW.
pub fn exact_dp_limited(instance: &Instance, limits: &Limits) -> Result<OracleResult> {
    let n = instance.len();
    let costs = instance.costs();
    match instance.kind() {
        ProblemKind::Tsp => {
            if n > limits.dp_tsp_nodes {
                return Err(too_big("exact TSP DP", n, limits.dp_tsp_nodes));
            }
            Ok(held_karp(&costs))
        }
        ProblemKind::Vrp | ProblemKind::Tsptw => {
            if n > limits.dp_label_nodes {
                return Err(too_big("exact label DP", n, limits.dp_label_nodes));
            }
            Ok(label_dp(instance, &costs))
        }
    }
}

fn held_karp(costs: &CostMatrix) -> OracleResult {
    let n = costs.len();
    let m = n - 1;
    let states = 1usize << m;
    let mut best = vec![f64::INFINITY; states * m];
    let mut prev = vec![u8::MAX; states * m];
    for j in 0..m {
        best[(1 << j) * m + j] = costs[(DEPOT, j + 1)];
    }
    for mask in 1..states {
        for j in 0..m {
            let here = best[mask * m + j];
            if mask >> j & 1 == 0 || here.is_infinite() {
                continue;
            }
            for k in 0..m {
                if mask >> k & 1 == 1 {
                    continue;
                }
                let next = mask | 1 << k;
                let cost = here + costs[(j + 1, k + 1)];
                if cost < best[next * m + k] {
                    best[next * m + k] = cost;
                    prev[next * m + k] = j as u8;
                }
            }
        }
    }
    let full = states - 1;
    let (mut last, total) = (0..m)
        .map(|j| (j, best[full * m + j] + costs[(j + 1, DEPOT)]))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let mut order = Vec::with_capacity(m);
    let mut mask = full;
    loop {
        order.push(last + 1);
        let p = prev[mask * m + last];
        mask ^= 1 << last;
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    order.reverse();
    let mut route = vec![DEPOT];
    route.extend(order);
    route.push(DEPOT);
    OracleResult {
        optimal_cost: Some(total),
        routes: Some(vec![route]),
        searched: (states * m) as u64,
    }
}

#[derive(Clone, Copy)]
struct Label {
    cost: f64,
    /// Remaining capacity (VRP) or time (TSPTW).
    resource: f64,
    node: u8,
    via_depot: bool,
    prev: u32,
}

const NO_LABEL: u32 = u32::MAX;

/// Label-setting DP. States are processed in increasing mask order, so all
/// labels of a state exist before it is expanded; each state keeps only its
/// Pareto-efficient labels.
fn label_dp(instance: &Instance, costs: &CostMatrix) -> OracleResult {
    let n = instance.len();
    let m = n - 1;
    let states = 1usize << m;
    let vrp = instance.kind() == ProblemKind::Vrp;
    let capacity = instance.capacity();
    let demands = instance.demands();
    let windows = instance.windows();

    let mut labels: Vec<Label> = Vec::new();
    let mut at: Vec<Vec<u32>> = vec![Vec::new(); states * m];

    let extend = |from: Option<(usize, &Label)>, to: usize, via_depot: bool| -> Option<Label> {
        let (prev_node, cost, resource, prev) = match from {
            Some((idx, l)) => (l.node as usize, l.cost, l.resource, idx as u32),
            None => (DEPOT, 0.0, if vrp { capacity } else { 0.0 }, NO_LABEL),
        };
        if vrp {
            if via_depot || from.is_none() {
                let cost = if from.is_none() {
                    costs[(DEPOT, to)]
                } else {
                    cost + costs[(prev_node, DEPOT)] + costs[(DEPOT, to)]
                };
                Some(Label {
                    cost,
                    resource: capacity - demands[to],
                    node: to as u8,
                    via_depot: true,
                    prev,
                })
            } else if demands[to] <= resource {
                Some(Label {
                    cost: cost + costs[(prev_node, to)],
                    resource: resource - demands[to],
                    node: to as u8,
                    via_depot: false,
                    prev,
                })
            } else {
                None
            }
        } else {
            let arrival = resource + costs[(prev_node, to)];
            if arrival > windows[to].latest {
                return None;
            }
            Some(Label {
                cost: cost + costs[(prev_node, to)],
                resource: arrival.max(windows[to].earliest),
                node: to as u8,
                via_depot: false,
                prev,
            })
        }
    };

    for j in 0..m {
        if let Some(l) = extend(None, j + 1, true) {
            at[(1 << j) * m + j].push(labels.len() as u32);
            labels.push(l);
        }
    }

    let better = |a: &Label, b: &Label| -> bool {
        // a at least as good as b in the resource
        if vrp {
            a.resource >= b.resource
        } else {
            a.resource <= b.resource
        }
    };

    for mask in 1..states {
        for j in 0..m {
            let idx = mask * m + j;
            if at[idx].is_empty() {
                continue;
            }
            // Pareto filter: by cost, keep labels strictly better in resource
            let mut ids = std::mem::take(&mut at[idx]);
            ids.sort_by(|&a, &b| {
                let (la, lb) = (&labels[a as usize], &labels[b as usize]);
                la.cost.total_cmp(&lb.cost).then_with(|| {
                    if better(la, lb) && better(lb, la) {
                        std::cmp::Ordering::Equal
                    } else if better(la, lb) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                })
            });
            let mut kept: Vec<u32> = Vec::with_capacity(ids.len());
            for id in ids {
                let l = &labels[id as usize];
                if kept.last().is_none_or(|&k| !better(&labels[k as usize], l)) {
                    kept.push(id);
                }
            }
            at[idx] = kept;

            for k in 0..m {
                if mask >> k & 1 == 1 {
                    continue;
                }
                let next = (mask | 1 << k) * m + k;
                for li in 0..at[idx].len() {
                    let id = at[idx][li] as usize;
                    let from = labels[id];
                    for via in if vrp { &[false, true][..] } else { &[false][..] } {
                        if let Some(l) = extend(Some((id, &from)), k + 1, *via) {
                            at[next].push(labels.len() as u32);
                            labels.push(l);
                        }
                    }
                }
            }
        }
    }

    let full = states - 1;
    let mut best: Option<(f64, u32)> = None;
    for j in 0..m {
        for &id in &at[full * m + j] {
            let l = &labels[id as usize];
            let leg = costs[(j + 1, DEPOT)];
            if !vrp && l.resource + leg > windows[DEPOT].latest {
                continue;
            }
            let total = l.cost + leg;
            if best.is_none_or(|(c, _)| total < c) {
                best = Some((total, id));
            }
        }
    }
    let searched = labels.len() as u64;
    let Some((cost, mut id)) = best else {
        return OracleResult::infeasible(searched);
    };

    let mut chain = Vec::with_capacity(m);
    while id != NO_LABEL {
        let l = labels[id as usize];
        chain.push(l);
        id = l.prev;
    }
    chain.reverse();
    let mut routes: Vec<Vec<usize>> = Vec::new();
    for l in chain {
        if l.via_depot || routes.is_empty() {
            if let Some(r) = routes.last_mut() {
                r.push(DEPOT);
            }
            routes.push(vec![DEPOT]);
        }
        routes.last_mut().expect("route").push(l.node as usize);
    }
    routes.last_mut().expect("route").push(DEPOT);
    if !vrp {
        debug_assert_eq!(routes.len(), 1);
    }
    OracleResult {
        optimal_cost: Some(cost),
        routes: Some(routes),
        searched,
    }
}
