//! Optimization back end: linear programs, min-cost flow and branch-and-bound.

pub mod flow;
pub mod lp;
pub mod milp;
pub mod norm;
pub mod simplex;

pub use lp::{dual_model, dual_with_cost_params, LpModel, RowKind, Sense, Solution, SolveStatus};
pub use simplex::{solve_lp, solve_lp_warm, solve_lp_with, Basis, SimplexOptions};
