//! Decoded solutions and their independent re-simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::SparseGraph;
use crate::instance::{CostMatrix, Instance, ProblemKind, DEPOT};

/// Absolute tolerance for cost agreement and resource checks.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Actions as produced by the solver. For VRP, `a >= n` means "to node
    /// `a - n` via the depot" and the trailing `0` returns to the depot.
    pub actions: Vec<usize>,
    /// Node sequences, each starting and ending at the depot.
    pub routes: Vec<Vec<usize>>,
    pub cost: f64,
    pub feasible: bool,
}

impl Solution {
    pub fn from_actions(instance: &Instance, actions: Vec<usize>, cost: f64) -> Result<Self> {
        let routes = decode_actions(instance.kind(), instance.len(), &actions)?;
        Ok(Solution {
            actions,
            routes,
            cost,
            feasible: false,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serializes")
    }
}

/// Turns an action sequence into depot-to-depot routes.
pub fn decode_actions(kind: ProblemKind, n: usize, actions: &[usize]) -> Result<Vec<Vec<usize>>> {
    let bad = |msg: String| Err(Error::Internal(format!("cannot decode actions: {msg}")));
    match actions.last() {
        Some(&DEPOT) => {}
        _ => return bad("sequence must end by returning to the depot".into()),
    }
    let body = &actions[..actions.len() - 1];
    match kind {
        ProblemKind::Tsp | ProblemKind::Tsptw => {
            if let Some(&a) = body.iter().find(|&&a| a == DEPOT || a >= n) {
                return bad(format!("invalid action {a}"));
            }
            let mut route = Vec::with_capacity(body.len() + 2);
            route.push(DEPOT);
            route.extend_from_slice(body);
            route.push(DEPOT);
            Ok(vec![route])
        }
        ProblemKind::Vrp => {
            let mut routes: Vec<Vec<usize>> = Vec::new();
            for (t, &a) in body.iter().enumerate() {
                if a >= 2 * n || a == DEPOT || a == n + DEPOT {
                    return bad(format!("invalid action {a}"));
                }
                if a >= n {
                    if let Some(r) = routes.last_mut() {
                        r.push(DEPOT);
                    }
                    routes.push(vec![DEPOT, a - n]);
                } else if t == 0 {
                    return bad("first action must go via the depot".into());
                } else {
                    routes.last_mut().expect("route open").push(a);
                }
            }
            if let Some(r) = routes.last_mut() {
                r.push(DEPOT);
            }
            Ok(routes)
        }
    }
}

/// Sum of edge costs along the routes.
pub fn routes_cost(costs: &CostMatrix, routes: &[Vec<usize>]) -> f64 {
    routes
        .iter()
        .flat_map(|r| r.windows(2))
        .map(|e| costs[(e[0], e[1])])
        .sum()
}

/// Re-simulates `routes` from scratch against every constraint of the
/// instance, and against `graph` when given. Returns the recomputed cost.
pub fn check_routes(
    instance: &Instance,
    costs: &CostMatrix,
    graph: Option<&SparseGraph>,
    routes: &[Vec<usize>],
) -> std::result::Result<f64, String> {
    let n = instance.len();
    if routes.is_empty() {
        return Err("no routes".into());
    }
    if instance.kind() != ProblemKind::Vrp && routes.len() != 1 {
        return Err(format!("expected a single tour, got {} routes", routes.len()));
    }
    let mut seen = vec![false; n];
    for (r, route) in routes.iter().enumerate() {
        if route.len() < 3 || route[0] != DEPOT || route[route.len() - 1] != DEPOT {
            return Err(format!("route {r} does not start and end at the depot"));
        }
        for &v in &route[1..route.len() - 1] {
            if v == DEPOT || v >= n {
                return Err(format!("route {r} contains invalid node {v}"));
            }
            if seen[v] {
                return Err(format!("node {v} visited twice"));
            }
            seen[v] = true;
        }
        if let Some(g) = graph {
            if let Some(e) = route.windows(2).find(|e| !g.has_edge(e[0], e[1])) {
                return Err(format!("edge ({}, {}) is not in the graph", e[0], e[1]));
            }
        }
        match instance.kind() {
            ProblemKind::Tsp => {}
            ProblemKind::Vrp => {
                let load: f64 = route.iter().map(|&v| instance.demands()[v]).sum();
                if load > instance.capacity() + TOLERANCE {
                    return Err(format!(
                        "route {r} load {load} exceeds capacity {}",
                        instance.capacity()
                    ));
                }
            }
            ProblemKind::Tsptw => {
                let windows = instance.windows();
                let mut time = 0.0;
                for e in route.windows(2) {
                    let arrival = time + costs[(e[0], e[1])];
                    let w = windows[e[1]];
                    if arrival > w.latest {
                        return Err(format!(
                            "arrival {arrival} at node {} after window end {}",
                            e[1], w.latest
                        ));
                    }
                    time = arrival.max(w.earliest);
                }
            }
        }
    }
    if let Some(v) = (1..n).find(|&v| !seen[v]) {
        return Err(format!("node {v} never visited"));
    }
    Ok(routes_cost(costs, routes))
}

/// Checks `solution` and sets its `feasible` flag; an error describes the
/// first violation found.
pub fn verify_solution(
    instance: &Instance,
    costs: &CostMatrix,
    graph: Option<&SparseGraph>,
    solution: &mut Solution,
) -> std::result::Result<(), String> {
    solution.feasible = false;
    let decoded = decode_actions(instance.kind(), instance.len(), &solution.actions)
        .map_err(|e| e.to_string())?;
    if decoded != solution.routes {
        return Err("routes do not match the action sequence".into());
    }
    let cost = check_routes(instance, costs, graph, &solution.routes)?;
    if (cost - solution.cost).abs() > TOLERANCE {
        return Err(format!(
            "reported cost {} differs from recomputed cost {cost}",
            solution.cost
        ));
    }
    solution.feasible = true;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::TimeWindow;

    #[test]
    fn decode_tsp_and_vrp() {
        assert_eq!(
            decode_actions(ProblemKind::Tsp, 4, &[2, 1, 3, 0]).unwrap(),
            vec![vec![0, 2, 1, 3, 0]]
        );
        // n = 4: 6 = via depot to 2, 1 direct, 7 = via depot to 3
        assert_eq!(
            decode_actions(ProblemKind::Vrp, 4, &[6, 1, 7, 0]).unwrap(),
            vec![vec![0, 2, 1, 0], vec![0, 3, 0]]
        );
        assert!(decode_actions(ProblemKind::Vrp, 4, &[1, 6, 0]).is_err());
        assert!(decode_actions(ProblemKind::Tsp, 4, &[2, 1, 3]).is_err());
    }

    #[test]
    fn checks_capacity_and_windows() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let vrp = Instance::vrp(coords.clone(), vec![0.0, 2.0, 2.0], 3.0).unwrap();
        let c = vrp.costs();
        assert!(check_routes(&vrp, &c, None, &[vec![0, 1, 2, 0]]).is_err());
        let cost = check_routes(&vrp, &c, None, &[vec![0, 1, 0], vec![0, 2, 0]]).unwrap();
        assert!((cost - 6.0).abs() < 1e-12);
        assert!(check_routes(&vrp, &c, None, &[vec![0, 1, 0]]).is_err());

        let tw = Instance::tsptw(
            coords,
            vec![TimeWindow::OPEN, TimeWindow::new(5.0, 6.0), TimeWindow::new(0.0, 6.5)],
        )
        .unwrap();
        let c = tw.costs();
        // wait at 1 until 5, reach 2 at 6
        assert!(check_routes(&tw, &c, None, &[vec![0, 1, 2, 0]]).is_ok());
        // 2 first, then 1 at 3 (wait to 5) is also fine
        assert!(check_routes(&tw, &c, None, &[vec![0, 2, 1, 0]]).is_ok());
        let late = Instance::tsptw(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![TimeWindow::OPEN, TimeWindow::new(5.0, 6.0), TimeWindow::new(0.0, 5.5)],
        )
        .unwrap();
        assert!(check_routes(&late, &c, None, &[vec![0, 1, 2, 0]]).is_err());
    }

    #[test]
    fn checks_graph_membership() {
        let inst = Instance::tsp(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let c = inst.costs();
        let g = SparseGraph::from_fn(3, |i, j| !(i == 1 && j == 2));
        assert!(check_routes(&inst, &c, Some(&g), &[vec![0, 1, 2, 0]]).is_err());
        assert!(check_routes(&inst, &c, Some(&g), &[vec![0, 2, 1, 0]]).is_ok());
    }
}
