//! Heatmap-guided, beam-restricted dynamic programming for routing problems:
//! the travelling salesman problem, the capacitated vehicle routing problem
//! and the TSP with time windows.
//!
//! The [`dp`] module runs the search; [`oracle`] holds exact solvers used to
//! check it at small sizes.

pub mod cli;
pub mod dp;
pub mod error;
pub mod heatmap;
pub mod instance;
pub mod oracle;
pub mod policy;
pub mod solution;

pub use dp::{solve, Outcome, SolveResult, Solver, SolverConfig};
pub use error::{Error, Result};
pub use heatmap::{Heatmap, SparseGraph, Sparsity};
pub use instance::{CostMatrix, Instance, ProblemKind, TimeWindow};
pub use policy::{PolicyKind, PolicyTables};
pub use solution::Solution;
