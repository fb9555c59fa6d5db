//! Finite-horizon discrete dynamic programming: grids, problems, backward
//! induction, rollout, and an exhaustive enumeration oracle.

mod backward;
mod brute;
mod grid;
mod problem;

pub use backward::{bellman_backward, reachable, rollout, PolicyTable, ValueTable};
pub(crate) use backward::{sweep, Cell};
pub use brute::{
    brute_force_solve, check_principle_of_optimality, feasible_trajectories, Violation, DEFAULT_ENUMERATION_CAP,
};
pub use grid::{Axis, GridMode, InputGrid, OutOfRange, Resolved, Snap, StateGrid};
pub(crate) use problem::check_shape;
pub use problem::{
    AdditiveObjective, DynamicsFn, FiniteHorizonProblem, Objective, ProblemBuilder, StageCostFn, TerminalCostFn,
    Trajectory,
};
