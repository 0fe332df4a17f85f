//! The heat + potential scoring policy.
//!
//! A partial solution's score is the heat of its chosen edges plus a
//! "heat-to-go" potential: every node that still matters (the start node and
//! the unvisited nodes) contributes `p_i = w_i * sum_{j unvisited} h_ji / Z_i`,
//! with `Z_i = sum_k h_ki`. The potential only depends on the visited set, so
//! it is maintained incrementally through two per-node vectors:
//! `p_i` (remaining incoming heat of `i`) and `s_v` (remaining outgoing heat
//! of `v`, both weighted by `w_i / Z_i`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heatmap::{cost_heatmap, Heatmap};
use crate::instance::{CostMatrix, Instance, ProblemKind, DEPOT};

/// Penalty factor on the heat of a via-depot move.
pub const VIA_DEPOT_PENALTY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Heatmap heat plus potential.
    HeatPotential,
    /// Heatmap heat only.
    Heat,
    /// Cost-derived heat plus potential.
    CostHeatPotential,
    /// Cost-derived heat only.
    CostHeat,
    /// Rank by lowest cost (classic restricted DP).
    Cost,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::HeatPotential,
        PolicyKind::Heat,
        PolicyKind::CostHeatPotential,
        PolicyKind::CostHeat,
        PolicyKind::Cost,
    ];

    pub fn uses_cost_heat(self) -> bool {
        matches!(self, PolicyKind::CostHeatPotential | PolicyKind::CostHeat)
    }

    pub fn uses_potential(self) -> bool {
        matches!(self, PolicyKind::HeatPotential | PolicyKind::CostHeatPotential)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::HeatPotential => "heat-potential",
            PolicyKind::Heat => "heat",
            PolicyKind::CostHeatPotential => "cost-heat-potential",
            PolicyKind::CostHeat => "cost-heat",
            PolicyKind::Cost => "cost",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy '{s}'")))
    }
}

/// Immutable per-instance tables shared by every beam entry.
#[derive(Debug, Clone)]
pub struct PolicyTables {
    n: usize,
    kind: ProblemKind,
    rank_by_cost: bool,
    heat: Heatmap,
    weights: Vec<f64>,
    incoming_norm: Vec<f64>,
    /// `q[j * n + i] = w_i * h_ji / Z_i`.
    q: Vec<f64>,
    via_depot_heat: Vec<f64>,
}

impl PolicyTables {
    /// Tables for the heat + potential policy on `heat`.
    pub fn new(heat: Heatmap, costs: &CostMatrix, kind: ProblemKind) -> Self {
        assert_eq!(heat.len(), costs.len(), "heatmap and cost matrix sizes differ");
        let n = heat.len();

        let max_to_start = (0..n).map(|j| costs[(j, DEPOT)]).fold(0.0, f64::max);
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let max_in = (0..n).map(|j| heat.get(j, i)).fold(0.0, f64::max);
                let rel = if max_to_start > 0.0 {
                    costs[(i, DEPOT)] / max_to_start
                } else {
                    0.0
                };
                max_in * (1.0 - 0.1 * (rel - 0.5))
            })
            .collect();
        let incoming_norm: Vec<f64> = (0..n).map(|i| (0..n).map(|k| heat.get(k, i)).sum()).collect();

        let mut tables = PolicyTables {
            n,
            kind,
            rank_by_cost: false,
            heat,
            weights,
            incoming_norm,
            q: Vec::new(),
            via_depot_heat: Vec::new(),
        };
        tables.rebuild_derived();
        tables
    }

    fn rebuild_derived(&mut self) {
        let n = self.n;
        let mut q = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                if self.incoming_norm[i] > 0.0 {
                    q[j * n + i] = self.weights[i] * self.heat.get(j, i) / self.incoming_norm[i];
                }
            }
        }
        self.q = q;
        self.via_depot_heat = if self.kind == ProblemKind::Vrp {
            (0..n * n)
                .map(|ij| {
                    let (i, j) = (ij / n, ij % n);
                    self.heat.get(i, DEPOT) * self.heat.get(DEPOT, j) * VIA_DEPOT_PENALTY
                })
                .collect()
        } else {
            Vec::new()
        };
    }

    /// Same heat, potential weights forced to zero.
    pub fn without_potential(mut self) -> Self {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.rebuild_derived();
        self
    }

    /// Tables for `policy` on `instance`. `heatmap` is the externally
    /// provided heatmap; without one, or for the cost-heat policies, the
    /// cost heuristic is used. TSP and VRP heatmaps are symmetrized.
    pub fn for_policy(
        instance: &Instance,
        costs: &CostMatrix,
        heatmap: Option<&Heatmap>,
        policy: PolicyKind,
        invert_cost_heat: bool,
    ) -> Result<Self> {
        let n = instance.len();
        let raw = match heatmap {
            Some(h) if !policy.uses_cost_heat() => {
                if h.len() != n {
                    return Err(Error::InvalidHeatmap(format!(
                        "heatmap has {} nodes, instance has {n}",
                        h.len()
                    )));
                }
                h.clone()
            }
            _ => cost_heatmap(costs, invert_cost_heat)?,
        };
        let heat = match instance.kind() {
            ProblemKind::Tsptw => raw,
            _ => raw.symmetrize(),
        };
        let tables = PolicyTables::new(heat, costs, instance.kind());
        Ok(match policy {
            PolicyKind::HeatPotential | PolicyKind::CostHeatPotential => tables,
            PolicyKind::Heat | PolicyKind::CostHeat => tables.without_potential(),
            PolicyKind::Cost => PolicyTables {
                rank_by_cost: true,
                ..tables.without_potential()
            },
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn problem(&self) -> ProblemKind {
        self.kind
    }

    pub fn heatmap(&self) -> &Heatmap {
        &self.heat
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn incoming_norm(&self) -> &[f64] {
        &self.incoming_norm
    }

    #[inline]
    pub fn heat(&self, i: usize, j: usize) -> f64 {
        self.heat.get(i, j)
    }

    /// `h_i,dep * h_dep,j * 0.1`; zero outside VRP.
    #[inline]
    pub fn via_depot_heat(&self, i: usize, j: usize) -> f64 {
        if self.via_depot_heat.is_empty() {
            0.0
        } else {
            self.via_depot_heat[i * self.n + j]
        }
    }

    /// Whether the start node counts as visited from the outset.
    #[inline]
    pub fn start_visited(&self) -> bool {
        self.kind != ProblemKind::Vrp
    }

    #[inline]
    pub fn q_row(&self, j: usize) -> &[f64] {
        &self.q[j * self.n..(j + 1) * self.n]
    }

    /// Total potential once `v` is visited, from the current total and the
    /// current `p_v` and `s_v`.
    #[inline]
    pub fn total_after_visit(&self, total: f64, p_v: f64, s_v: f64, v: usize) -> f64 {
        let start_term = if self.start_visited() {
            self.q[v * self.n + DEPOT]
        } else {
            0.0
        };
        (total - p_v - s_v - start_term).max(0.0)
    }

    /// Fills `p` and `s` for a visited set given as a predicate, returning the
    /// total potential.
    pub fn fill_potential(
        &self,
        visited: impl Fn(usize) -> bool,
        p: &mut [f64],
        s: &mut [f64],
    ) -> f64 {
        let n = self.n;
        let unvisited: Vec<usize> = (0..n).filter(|&j| !visited(j)).collect();
        for i in 0..n {
            p[i] = unvisited.iter().map(|&j| self.q[j * n + i]).sum();
            let row = self.q_row(i);
            s[i] = unvisited.iter().map(|&j| row[j]).sum();
        }
        (0..n)
            .filter(|&i| i == DEPOT || !visited(i))
            .map(|i| p[i])
            .sum()
    }

    /// Applies the visit of `v` to the per-node vectors.
    #[inline]
    pub fn apply_visit(&self, p: &mut [f64], s: &mut [f64], v: usize) {
        let row = self.q_row(v);
        for (pi, qi) in p.iter_mut().zip(row) {
            *pi -= qi;
        }
        let n = self.n;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk -= self.q[k * n + v];
        }
    }

    /// Ranking score. The cost policy ranks by `-cost`.
    #[inline]
    pub fn score(&self, cost: f64, heat: f64, potential: f64) -> f64 {
        if self.rank_by_cost {
            -cost
        } else {
            score(heat, potential)
        }
    }

    pub fn ranks_by_cost(&self) -> bool {
        self.rank_by_cost
    }

    pub fn initial_potential(&self) -> PotentialState {
        let visited: Vec<bool> = (0..self.n)
            .map(|i| i == DEPOT && self.start_visited())
            .collect();
        PotentialState::from_visited(self, visited)
    }
}

/// `heat + potential`.
#[inline]
pub fn score(heat: f64, potential: f64) -> f64 {
    heat + potential
}

/// Potential bookkeeping of one partial solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialState {
    visited: Vec<bool>,
    incoming: Vec<f64>,
    outgoing: Vec<f64>,
    total: f64,
}

impl PotentialState {
    pub fn from_visited(tables: &PolicyTables, visited: Vec<bool>) -> Self {
        let n = tables.len();
        let mut incoming = vec![0.0; n];
        let mut outgoing = vec![0.0; n];
        let total = tables.fill_potential(|i| visited[i], &mut incoming, &mut outgoing);
        PotentialState {
            visited,
            incoming,
            outgoing,
            total,
        }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `p_i`, zero for visited nodes other than the start.
    pub fn node(&self, i: usize) -> f64 {
        if i == DEPOT || !self.visited[i] {
            self.incoming[i]
        } else {
            0.0
        }
    }

    pub fn is_visited(&self, i: usize) -> bool {
        self.visited[i]
    }

    pub fn visit(&self, tables: &PolicyTables, v: usize) -> PotentialState {
        assert!(!self.visited[v], "node {v} already visited");
        let mut next = self.clone();
        next.total = tables.total_after_visit(self.total, self.incoming[v], self.outgoing[v], v);
        tables.apply_visit(&mut next.incoming, &mut next.outgoing, v);
        next.visited[v] = true;
        next
    }
}

/// Copy-on-expand: returns the state after visiting `v`.
pub fn visit_update(state: &PotentialState, tables: &PolicyTables, v: usize) -> PotentialState {
    state.visit(tables, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{euclidean_cost_matrix, generate_tsp, generate_vrp};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the potential definition.
    fn potential_oracle(tables: &PolicyTables, visited: &[bool]) -> f64 {
        let n = tables.len();
        let h = tables.heatmap();
        (0..n)
            .filter(|&i| i == DEPOT || !visited[i])
            .map(|i| {
                let z: f64 = (0..n).map(|k| h.get(k, i)).sum();
                if z == 0.0 {
                    return 0.0;
                }
                let remaining: f64 = (0..n).filter(|&j| !visited[j]).map(|j| h.get(j, i)).sum();
                tables.weights()[i] * remaining / z
            })
            .sum()
    }

    fn uniform(n: usize, v: f64) -> Heatmap {
        Heatmap::from_fn(n, false, |i, j| if i == j { 0.0 } else { v }).unwrap()
    }

    #[test]
    fn weight_endpoints() {
        // node 2 is farthest from the start, node 0 is the start.
        let coords = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let costs = euclidean_cost_matrix(&coords);
        let h = Heatmap::from_fn(3, false, |i, j| if i == j { 0.0 } else { 0.8 }).unwrap();
        let t = PolicyTables::new(h, &costs, ProblemKind::Tsp);
        assert!((t.weights()[2] - 0.8 * 0.95).abs() < 1e-12);
        assert!((t.weights()[0] - 0.8 * 1.05).abs() < 1e-12);
        assert!((t.weights()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn via_depot_heat_product() {
        let costs = euclidean_cost_matrix(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let h = Heatmap::from_fn(3, false, |i, j| match (i.min(j), i.max(j)) {
            (0, 1) => 0.5,
            (0, 2) => 0.4,
            (1, 2) => 0.3,
            _ => 0.0,
        })
        .unwrap();
        let t = PolicyTables::new(h, &costs, ProblemKind::Vrp);
        assert!((t.via_depot_heat(1, 2) - 0.02).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                assert!((0.0..0.1).contains(&t.via_depot_heat(i, j)));
            }
        }
    }

    #[test]
    fn initial_potentials() {
        // uniform heat, n = 5, start visited: p_i = w_i * 3/4
        let inst = generate_tsp(5, 1).unwrap();
        let t = PolicyTables::new(uniform(5, 0.5), &inst.costs(), ProblemKind::Tsp);
        let st = t.initial_potential();
        for i in 1..5 {
            assert!((st.node(i) - t.weights()[i] * 0.75).abs() < 1e-12);
        }
        assert!((st.node(0) - t.weights()[0]).abs() < 1e-12);

        let inst = generate_vrp(6, 1).unwrap();
        let t = PolicyTables::new(uniform(7, 0.3), &inst.costs(), ProblemKind::Vrp);
        let st = t.initial_potential();
        for i in 0..7 {
            assert!((st.node(i) - t.weights()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_node_has_no_potential() {
        let inst = generate_tsp(4, 2).unwrap();
        let h = Heatmap::from_fn(4, false, |i, j| if i == j || i == 3 || j == 3 { 0.0 } else { 0.4 }).unwrap();
        let t = PolicyTables::new(h, &inst.costs(), ProblemKind::Tsp);
        assert_eq!(t.incoming_norm()[3], 0.0);
        assert_eq!(t.initial_potential().node(3), 0.0);
    }

    #[test]
    fn zero_heat_visit_leaves_others_unchanged() {
        let inst = generate_tsp(5, 3).unwrap();
        let h = Heatmap::from_fn(5, false, |i, j| if i == j || i == 4 || j == 4 { 0.0 } else { 0.3 }).unwrap();
        let t = PolicyTables::new(h, &inst.costs(), ProblemKind::Tsp);
        let st = t.initial_potential();
        let next = st.visit(&t, 4);
        for i in 0..4 {
            assert_eq!(next.node(i), st.node(i));
        }
    }

    #[test]
    fn potential_exhausted_after_all_neighbours_visited() {
        let inst = generate_tsp(6, 4).unwrap();
        let t = PolicyTables::new(uniform(6, 0.6), &inst.costs(), ProblemKind::Tsp);
        let mut st = t.initial_potential();
        for v in 2..6 {
            st = st.visit(&t, v);
        }
        // node 1: every in-neighbour (0, 2..6) visited
        assert!(st.node(1).abs() < 1e-12);
    }

    #[test]
    fn incremental_matches_from_scratch() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (trial, kind) in [ProblemKind::Tsp, ProblemKind::Vrp, ProblemKind::Tsptw]
            .into_iter()
            .cycle()
            .take(30)
            .enumerate()
        {
            let n = 12;
            let inst = generate_tsp(n, trial as u64).unwrap();
            let h = Heatmap::from_fn(n, true, |i, j| {
                if i == j { 0.0 } else { rng.gen::<f64>() }
            })
            .unwrap();
            let h = if kind == ProblemKind::Tsptw { h } else { h.symmetrize() };
            let t = PolicyTables::new(h, &inst.costs(), kind);
            let mut st = t.initial_potential();
            let mut order: Vec<usize> = (1..n).collect();
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
            for &v in &order[..10] {
                let prev = st.total();
                st = visit_update(&st, &t, v);
                assert!(st.total() <= prev + 1e-12);
                let visited: Vec<bool> = (0..n).map(|i| st.is_visited(i)).collect();
                assert!((st.total() - potential_oracle(&t, &visited)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn policy_variants() {
        let inst = generate_tsp(8, 5).unwrap();
        let costs = inst.costs();
        let heat = PolicyTables::for_policy(&inst, &costs, None, PolicyKind::CostHeat, false).unwrap();
        assert!(heat.weights().iter().all(|&w| w == 0.0));
        assert_eq!(heat.initial_potential().total(), 0.0);
        let hp = PolicyTables::for_policy(&inst, &costs, None, PolicyKind::CostHeatPotential, false).unwrap();
        assert_eq!(hp.heatmap(), heat.heatmap());
        assert!(!hp.heatmap().is_directed());
        let cost = PolicyTables::for_policy(&inst, &costs, None, PolicyKind::Cost, false).unwrap();
        assert_eq!(cost.score(3.0, 1.0, 1.0), -3.0);
        assert_eq!(hp.score(3.0, 2.5, 0.0), 2.5);
        assert!(hp.score(0.0, 2.0, 1.0) > hp.score(0.0, 1.0, 1.0));
        for p in PolicyKind::ALL {
            assert_eq!(p.as_str().parse::<PolicyKind>().unwrap(), p);
        }
    }
}
