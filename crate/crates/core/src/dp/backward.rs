use alloc::vec;
use alloc::vec::Vec;

use super::grid::OutOfRange;
use super::problem::{FiniteHorizonProblem, Objective, Trajectory};
use crate::{Error, Result};

/// Cost-to-go `F(x, t)` for `t0 <= t <= T`. Infeasible cells hold `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    t0: usize,
    values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn horizon(&self) -> usize {
        self.t0 + self.values.len() - 1
    }

    pub fn get(&self, t: usize, state: usize) -> f64 {
        self.values[t - self.t0][state]
    }

    pub fn stage(&self, t: usize) -> &[f64] {
        &self.values[t - self.t0]
    }

    pub fn is_feasible(&self, t: usize, state: usize) -> bool {
        self.get(t, state).is_finite()
    }
}

/// Minimizing input id per `(t, state)` for `t0 <= t < T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    t0: usize,
    actions: Vec<Vec<Option<u32>>>,
}

impl PolicyTable {
    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn action(&self, t: usize, state: usize) -> Option<usize> {
        self.actions
            .get(t.checked_sub(self.t0)?)
            .and_then(|row| row.get(state).copied().flatten())
            .map(|a| a as usize)
    }
}

/// Per-cell result of a stage minimization.
pub(crate) struct Cell {
    pub value: f64,
    pub action: Option<u32>,
    pub clamped: u64,
}

impl Cell {
    pub const INFEASIBLE: Cell = Cell {
        value: f64::INFINITY,
        action: None,
        clamped: 0,
    };
}

/// Backward sweep shared by the deterministic and stochastic solvers.
/// `cell(t, x, next)` minimizes over inputs at `(t, x)` given the stage
/// `t + 1` row. Rows are computed from an immutable successor row, so the
/// per-state work may run in parallel without changing results.
pub(crate) fn sweep<C>(
    n_states: usize,
    t0: usize,
    horizon: usize,
    terminal: Vec<f64>,
    cell: C,
) -> Result<(ValueTable, PolicyTable, u64)>
where
    C: Fn(usize, usize, &[f64]) -> Result<Cell> + Sync + Send,
{
    let stages = horizon - t0;
    let mut values = vec![Vec::new(); stages + 1];
    let mut actions = vec![Vec::new(); stages];
    values[stages] = terminal;
    let mut clamped = 0u64;
    for t in (t0..horizon).rev() {
        let next = &values[t + 1 - t0];
        let cells = run_cells(n_states, |x| cell(t, x, next));
        let mut row = Vec::with_capacity(n_states);
        let mut acts = Vec::with_capacity(n_states);
        for c in cells {
            let c = c?;
            row.push(c.value);
            acts.push(c.action);
            clamped += c.clamped;
        }
        values[t - t0] = row;
        actions[t - t0] = acts;
    }
    Ok((ValueTable { t0, values }, PolicyTable { t0, actions }, clamped))
}

#[cfg(feature = "parallel")]
fn run_cells<F>(n: usize, f: F) -> Vec<Result<Cell>>
where
    F: Fn(usize) -> Result<Cell> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_cells<F>(n: usize, f: F) -> Vec<Result<Cell>>
where
    F: Fn(usize) -> Result<Cell>,
{
    (0..n).map(f).collect()
}

/// Backward induction for problems with an additive objective.
///
/// `F(x, T) = c_T(x)` and `F(x, t) = min_{u in Γ_{t,x}} c_t(x, u) + F(f(x, u, t), t + 1)`.
/// Ties go to the lowest input index. Fails with [`Error::Infeasible`] when
/// the initial cell has no feasible continuation.
pub fn bellman_backward(problem: &FiniteHorizonProblem) -> Result<(ValueTable, PolicyTable)> {
    let objective = match problem.objective() {
        Objective::Additive(a) => a,
        Objective::ForwardSeparable(_) => return Err(Error::NotAdditive),
    };
    let grid = problem.state_grid();
    let inputs = problem.input_grid();
    let guard = range_guard(problem)?;
    let terminal = (0..grid.len())
        .map(|x| objective.terminal_cost(grid.point(x)))
        .collect();
    let (values, policy, _) = sweep(grid.len(), problem.t0(), problem.horizon(), terminal, |t, x, next| {
        let mut buf = vec![0.0; grid.dim()];
        let mut best = Cell::INFEASIBLE;
        for u in 0..inputs.len() {
            let succ = match problem.successor(x, u, t, &mut buf) {
                Ok(Some(s)) => s,
                Ok(None) => continue,
                Err(_) if guard.as_ref().is_some_and(|r| !r[t - problem.t0()][x]) => continue,
                Err(e) => return Err(e),
            };
            let tail = next[succ.id];
            if tail == f64::INFINITY {
                continue;
            }
            let total = objective.stage_cost(grid.point(x), inputs.point(u), t) + tail;
            if total < best.value {
                best.value = total;
                best.action = Some(u as u32);
            }
        }
        Ok(best)
    })?;
    if !values.is_feasible(problem.t0(), problem.initial_id()) {
        return Err(Error::Infeasible { stage: problem.t0() });
    }
    Ok((values, policy))
}

/// When the grid has range-checked axes, successors leaving them are only
/// errors from cells reachable from the initial state; the forward pass
/// raises those. Elsewhere they count as infeasible inputs.
fn range_guard(problem: &FiniteHorizonProblem) -> Result<Option<Vec<Vec<bool>>>> {
    let checked = problem
        .state_grid()
        .axes()
        .iter()
        .any(|a| a.policy() == OutOfRange::Error);
    if checked {
        reachable(problem).map(Some)
    } else {
        Ok(None)
    }
}

/// Follows `policy` from the initial state. The objective value is
/// re-evaluated on the resulting trajectory rather than read from a table.
pub fn rollout(problem: &FiniteHorizonProblem, policy: &PolicyTable) -> Result<Trajectory> {
    let grid = problem.state_grid();
    let mut buf = vec![0.0; grid.dim()];
    let mut id = problem.initial_id();
    let mut ids = Vec::with_capacity(problem.stages());
    for t in problem.t0()..problem.horizon() {
        let u = policy
            .action(t, id)
            .ok_or(Error::PolicyUndefined { stage: t, state: id })?;
        ids.push(u);
        id = problem
            .successor(id, u, t, &mut buf)?
            .ok_or(Error::PolicyUndefined { stage: t, state: id })?
            .id;
    }
    problem.simulate(&ids)?.ok_or(Error::Infeasible { stage: problem.t0() })
}

/// Grid cells reachable from the initial state under some feasible input
/// sequence, per stage.
pub fn reachable(problem: &FiniteHorizonProblem) -> Result<Vec<Vec<bool>>> {
    let grid = problem.state_grid();
    let mut buf = vec![0.0; grid.dim()];
    let mut out = Vec::with_capacity(problem.stages() + 1);
    let mut cur = vec![false; grid.len()];
    cur[problem.initial_id()] = true;
    for t in problem.t0()..problem.horizon() {
        let mut next = vec![false; grid.len()];
        for x in (0..grid.len()).filter(|&x| cur[x]) {
            for u in 0..problem.input_grid().len() {
                if let Some(s) = problem.successor(x, u, t, &mut buf)? {
                    next[s.id] = true;
                }
            }
        }
        out.push(core::mem::replace(&mut cur, next));
    }
    out.push(cur);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{brute_force_solve, AdditiveObjective, GridMode, InputGrid, StateGrid};

    fn identity_zero() -> FiniteHorizonProblem {
        FiniteHorizonProblem::builder(0, 3)
            .states(StateGrid::scalar(vec![0.0, 1.0, 2.0]).unwrap())
            .inputs(InputGrid::scalar(&[0.0, 1.0]).unwrap())
            .dynamics(|x, _, _, o| o[0] = x[0])
            .objective(AdditiveObjective::zero())
            .initial_state(vec![1.0])
            .build()
            .unwrap()
    }

    #[test]
    fn identity_dynamics_admit_every_input() {
        let p = identity_zero();
        assert_eq!(p.feasible_inputs(&[2.0], 1).unwrap(), vec![0, 1]);
        assert!(matches!(
            p.feasible_inputs(&[2.0], 3),
            Err(Error::StageOutOfRange { .. })
        ));
        assert!(matches!(p.feasible_inputs(&[0.5], 0), Err(Error::NotOnGrid)));
    }

    #[test]
    fn zero_cost_rollout_is_zero() {
        let p = identity_zero();
        let (v, pol) = bellman_backward(&p).unwrap();
        let tr = rollout(&p, &pol).unwrap();
        assert_eq!(tr.objective_value, 0.0);
        assert_eq!(v.get(0, 1), 0.0);
        assert_eq!(tr.input_ids, vec![0, 0, 0]);
    }

    #[test]
    fn one_stage_value_is_terminal_plus_best_step() {
        let p = FiniteHorizonProblem::builder(5, 6)
            .states(StateGrid::scalar(vec![0.0, 1.0]).unwrap())
            .inputs(InputGrid::scalar(&[0.0, 1.0]).unwrap())
            .dynamics(|x, u, _, o| o[0] = (x[0] + u[0]).min(1.0))
            .objective(AdditiveObjective::new(|_, u, _| u[0] * 0.25, |x| 3.0 - 2.0 * x[0]))
            .initial_state(vec![0.0])
            .build()
            .unwrap();
        let (v, pol) = bellman_backward(&p).unwrap();
        assert_eq!(v.get(6, 0), 3.0);
        assert_eq!(v.get(6, 1), 1.0);
        assert_eq!(v.get(5, 0), 1.25);
        assert_eq!(pol.action(5, 0), Some(1));
        assert_eq!(pol.action(6, 0), None);
    }

    #[test]
    fn forward_separable_objective_is_rejected() {
        let p = crate::instances::counterexample(1.0);
        assert!(matches!(bellman_backward(&p), Err(Error::NotAdditive)));
    }

    #[test]
    fn infeasible_initial_state_is_an_error() {
        // every move leaves X
        let p = FiniteHorizonProblem::builder(0, 2)
            .states(StateGrid::scalar(vec![0.0, 1.0]).unwrap())
            .inputs(InputGrid::scalar(&[5.0]).unwrap())
            .dynamics(|x, u, _, o| o[0] = x[0] + u[0])
            .objective(AdditiveObjective::zero())
            .initial_state(vec![0.0])
            .mode(GridMode::Strict)
            .build()
            .unwrap();
        assert_eq!(bellman_backward(&p), Err(Error::Infeasible { stage: 0 }));
        assert!(matches!(brute_force_solve(&p, None), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn undefined_policy_is_reported() {
        let p = identity_zero();
        let (_, mut pol) = bellman_backward(&p).unwrap();
        pol.actions[1][1] = None;
        assert_eq!(rollout(&p, &pol), Err(Error::PolicyUndefined { stage: 1, state: 1 }));
    }

    #[test]
    fn reachable_cells_follow_dynamics() {
        let p = FiniteHorizonProblem::builder(0, 2)
            .states(StateGrid::scalar(vec![0.0, 1.0, 2.0, 3.0]).unwrap())
            .inputs(InputGrid::scalar(&[0.0, 1.0]).unwrap())
            .dynamics(|x, u, _, o| o[0] = x[0] + u[0])
            .objective(AdditiveObjective::zero())
            .initial_state(vec![0.0])
            .mode(GridMode::Strict)
            .build()
            .unwrap();
        let r = reachable(&p).unwrap();
        assert_eq!(r[0], vec![true, false, false, false]);
        assert_eq!(r[1], vec![true, true, false, false]);
        assert_eq!(r[2], vec![true, true, true, false]);
    }
}
