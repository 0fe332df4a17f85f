//! Beam-restricted dynamic programming over (visited set, current node)
//! states.
//!
//! Each step expands every entry of the beam, removes dominated expansions
//! per DP state, and keeps the `B` best survivors under the policy score.
//! Completed solutions are compared by cost once every node is visited.

pub mod beam;
pub mod expand;
pub mod select;
pub mod trace;
pub mod visited;

use crate::error::{Error, Result};
use crate::heatmap::{Heatmap, SparseGraph, Sparsity};
use crate::instance::{CostMatrix, Instance, ProblemKind};
use crate::policy::{PolicyKind, PolicyTables};
use crate::solution::{verify_solution, Solution};

pub use beam::{group_by_visited, init_beam, Beam, BeamEntry, Grouping};
pub use expand::{pareto_front, ExpandContext, Expander};
pub use select::{rank_cmp, select_top_b, Candidate, CandidateSink, TopB};
pub use trace::{backtrack, Trace};
pub use visited::VisitedSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub beam_size: usize,
    pub policy: PolicyKind,
    /// Use `1 - c_ij / max_k c_ik` as the cost heuristic.
    pub invert_cost_heat: bool,
    pub sparsity: Sparsity,
    /// Off turns the solver into a plain beam search.
    pub dominance: bool,
    /// Drop candidates below the running top-B score bound before dominance
    /// checks. Faster, but results may differ from the exact pipeline.
    pub score_bound_prefilter: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beam_size: 1000,
            policy: PolicyKind::HeatPotential,
            invert_cost_heat: false,
            sparsity: Sparsity::default(),
            dominance: true,
            score_bound_prefilter: false,
        }
    }
}

impl SolverConfig {
    pub fn with_beam_size(mut self, beam_size: usize) -> Self {
        self.beam_size = beam_size;
        self
    }

    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_sparsity(mut self, sparsity: Sparsity) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn with_dominance(mut self, dominance: bool) -> Self {
        self.dominance = dominance;
        self
    }
}

/// Beam size that makes the TSP search exhaustive: `n * 2^n`.
pub fn full_tsp_beam(n: usize) -> usize {
    n.checked_shl(n as u32).unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Solution),
    /// The beam emptied at `step` (the completion step is `n`).
    NoSolution { step: usize },
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            Outcome::NoSolution { .. } => None,
        }
    }

    pub fn cost(&self) -> Option<f64> {
        self.solution().map(|s| s.cost)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub steps: usize,
    pub candidates: usize,
    pub max_beam: usize,
    pub trace_records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub stats: SolveStats,
}

/// A prepared solve: costs, policy tables and the expansion graph.
pub struct Solver<'a> {
    instance: &'a Instance,
    costs: CostMatrix,
    tables: PolicyTables,
    graph: SparseGraph,
    config: SolverConfig,
}

impl<'a> Solver<'a> {
    pub fn new(instance: &'a Instance, heatmap: Option<&Heatmap>, config: &SolverConfig) -> Result<Self> {
        let costs = instance.costs();
        let tables = PolicyTables::for_policy(
            instance,
            &costs,
            heatmap,
            config.policy,
            config.invert_cost_heat,
        )?;
        let graph = config.sparsity.build(
            tables.heatmap(),
            &costs,
            instance.kind() == ProblemKind::Vrp,
        )?;
        Solver::from_parts(instance, costs, tables, graph, config)
    }

    pub fn from_parts(
        instance: &'a Instance,
        costs: CostMatrix,
        tables: PolicyTables,
        graph: SparseGraph,
        config: &SolverConfig,
    ) -> Result<Self> {
        if config.beam_size == 0 {
            return Err(Error::InvalidArgument("beam size must be at least 1".into()));
        }
        let n = instance.len();
        if costs.len() != n || tables.len() != n || graph.len() != n {
            return Err(Error::InvalidArgument(
                "cost matrix, policy tables and graph must match the instance size".into(),
            ));
        }
        Ok(Solver {
            instance,
            costs,
            tables,
            graph,
            config: config.clone(),
        })
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn tables(&self) -> &PolicyTables {
        &self.tables
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn context(&self) -> ExpandContext<'_> {
        ExpandContext {
            instance: self.instance,
            costs: &self.costs,
            graph: &self.graph,
            tables: &self.tables,
            dominance: self.config.dominance,
            prefilter: self.config.score_bound_prefilter,
        }
    }

    pub fn run(&self) -> Result<SolveResult> {
        let n = self.instance.len();
        let mut stats = SolveStats::default();
        let mut expander = Expander::new(self.context());
        let mut beam = init_beam(self.instance, &self.tables);
        let mut trace = Trace::new();

        for step in 1..n {
            let groups = group_by_visited(&beam);
            let mut top = TopB::new(self.config.beam_size);
            expander.expand(&beam, &groups, &mut top);
            stats.candidates += top.pushed();
            stats.steps = step;
            let selected = top.into_sorted();
            if selected.is_empty() {
                stats.trace_records = trace.records();
                return Ok(SolveResult {
                    outcome: Outcome::NoSolution { step },
                    stats,
                });
            }
            trace.push_step(selected.iter().map(|c| (c.parent, c.action)).collect());
            beam = Beam::from_candidates(&beam, &self.tables, &selected);
            stats.max_beam = stats.max_beam.max(beam.len());
        }

        stats.steps = n;
        let Some((slot, cost)) = expander.complete(&beam) else {
            stats.trace_records = trace.records();
            return Ok(SolveResult {
                outcome: Outcome::NoSolution { step: n },
                stats,
            });
        };
        trace.push_step(vec![(slot as u32, 0)]);
        stats.trace_records = trace.records();

        let actions = backtrack(&trace, 0)?;
        let mut solution = Solution::from_actions(self.instance, actions, cost)?;
        verify_solution(self.instance, &self.costs, Some(&self.graph), &mut solution)
            .map_err(|e| Error::Internal(format!("solver produced an invalid solution: {e}")))?;
        Ok(SolveResult {
            outcome: Outcome::Solved(solution),
            stats,
        })
    }
}

/// Solves `instance`; without a heatmap the cost heuristic drives the policy.
pub fn solve(instance: &Instance, heatmap: Option<&Heatmap>, config: &SolverConfig) -> Result<SolveResult> {
    Solver::new(instance, heatmap, config)?.run()
}
