use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::quadrature::NoiseQuadrature;
use crate::dp::{
    sweep, AdditiveObjective, Cell, GridMode, InputGrid, OutOfRange, PolicyTable, Resolved, StateGrid, ValueTable,
};
use crate::{Error, Result};

/// `(x, u, t, v, out)`: writes `f(x, u, t; v)` into `out`.
pub type NoisyDynamicsFn = dyn Fn(&[f64], &[f64], usize, &[f64], &mut [f64]) + Send + Sync;

/// A controlled system driven by noise with a discretized distribution and
/// an expected additive cost.
///
/// Successors follow the grid semantics of the deterministic problems;
/// `Clamp` axes move out-of-range successors to the boundary and the solver
/// counts how often that happened.
#[derive(Clone)]
pub struct StochasticProblem {
    t0: usize,
    horizon: usize,
    states: StateGrid,
    inputs: InputGrid,
    dynamics: Arc<NoisyDynamicsFn>,
    objective: AdditiveObjective,
    quadrature: NoiseQuadrature,
    initial_id: usize,
    mode: GridMode,
}

pub struct StochasticProblemBuilder {
    t0: usize,
    horizon: usize,
    states: Option<StateGrid>,
    inputs: Option<InputGrid>,
    dynamics: Option<Arc<NoisyDynamicsFn>>,
    objective: Option<AdditiveObjective>,
    quadrature: Option<NoiseQuadrature>,
    initial: Option<Vec<f64>>,
    mode: GridMode,
}

impl StochasticProblemBuilder {
    pub fn states(mut self, grid: StateGrid) -> Self {
        self.states = Some(grid);
        self
    }

    pub fn inputs(mut self, grid: InputGrid) -> Self {
        self.inputs = Some(grid);
        self
    }

    pub fn dynamics(mut self, f: impl Fn(&[f64], &[f64], usize, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dynamics = Some(Arc::new(f));
        self
    }

    pub fn objective(mut self, objective: AdditiveObjective) -> Self {
        self.objective = Some(objective);
        self
    }

    pub fn quadrature(mut self, q: NoiseQuadrature) -> Self {
        self.quadrature = Some(q);
        self
    }

    pub fn initial_state(mut self, x0: Vec<f64>) -> Self {
        self.initial = Some(x0);
        self
    }

    pub fn mode(mut self, mode: GridMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn build(self) -> Result<StochasticProblem> {
        let missing = |what: &str| Error::InvalidParameter(alloc::format!("missing {what}"));
        if self.t0 >= self.horizon {
            return Err(Error::InvalidParameter("t0 must be below the horizon".into()));
        }
        let states = self.states.ok_or_else(|| missing("state grid"))?;
        let x0 = self.initial.ok_or_else(|| missing("initial state"))?;
        if x0.len() != states.dim() {
            return Err(Error::ShapeMismatch {
                expected: states.dim(),
                found: x0.len(),
            });
        }
        let initial_id = match self.mode {
            GridMode::Strict => states.index_of(&x0).ok_or(Error::NotOnGrid)?,
            GridMode::Project => {
                states
                    .resolve(&x0, GridMode::Project, self.t0)?
                    .ok_or(Error::NotOnGrid)?
                    .id
            }
        };
        Ok(StochasticProblem {
            t0: self.t0,
            horizon: self.horizon,
            states,
            inputs: self.inputs.ok_or_else(|| missing("input grid"))?,
            dynamics: self.dynamics.ok_or_else(|| missing("dynamics"))?,
            objective: self.objective.ok_or_else(|| missing("objective"))?,
            quadrature: self.quadrature.ok_or_else(|| missing("quadrature"))?,
            initial_id,
            mode: self.mode,
        })
    }
}

impl StochasticProblem {
    pub fn builder(t0: usize, horizon: usize) -> StochasticProblemBuilder {
        StochasticProblemBuilder {
            t0,
            horizon,
            states: None,
            inputs: None,
            dynamics: None,
            objective: None,
            quadrature: None,
            initial: None,
            mode: GridMode::Project,
        }
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_grid(&self) -> &StateGrid {
        &self.states
    }

    pub fn input_grid(&self) -> &InputGrid {
        &self.inputs
    }

    pub fn objective(&self) -> &AdditiveObjective {
        &self.objective
    }

    pub fn quadrature(&self) -> &NoiseQuadrature {
        &self.quadrature
    }

    pub fn initial_id(&self) -> usize {
        self.initial_id
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn apply_dynamics(&self, x: &[f64], u: &[f64], t: usize, v: &[f64], out: &mut [f64]) {
        (self.dynamics)(x, u, t, v, out)
    }

    /// Grid id of `f(x, u, t; v)`, or `None` when it leaves X.
    pub fn successor(
        &self,
        x_id: usize,
        u_id: usize,
        t: usize,
        v: &[f64],
        buf: &mut [f64],
    ) -> Result<Option<Resolved>> {
        (self.dynamics)(self.states.point(x_id), self.inputs.point(u_id), t, v, buf);
        self.states.resolve(buf, self.mode, t)
    }

    /// Cells reachable from the initial state under some input and node
    /// sequence.
    pub fn reachable(&self) -> Result<Vec<Vec<bool>>> {
        let mut buf = vec![0.0; self.states.dim()];
        let mut out = Vec::with_capacity(self.horizon - self.t0 + 1);
        let mut cur = vec![false; self.states.len()];
        cur[self.initial_id] = true;
        for t in self.t0..self.horizon {
            let mut next = vec![false; self.states.len()];
            for x in (0..self.states.len()).filter(|&x| cur[x]) {
                for u in 0..self.inputs.len() {
                    for v in self.quadrature.nodes() {
                        if let Some(s) = self.successor(x, u, t, v, &mut buf)? {
                            next[s.id] = true;
                        }
                    }
                }
            }
            out.push(core::mem::replace(&mut cur, next));
        }
        out.push(cur);
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct StochasticSolution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    /// Successor evaluations that were clamped onto a `Clamp` axis.
    pub clamped: u64,
}

/// Backward induction with a discretized expectation:
///
/// `F(x, T) = c_T(x)`,
/// `F(x, t) = min_u c_t(x, u) + Σ_j p_j F(f(x, u, t; v_j), t + 1)`.
///
/// An input is admissible when every node's successor is in X and has
/// finite cost-to-go. Ties go to the lowest input index.
pub fn stochastic_bellman(problem: &StochasticProblem) -> Result<StochasticSolution> {
    let grid = &problem.states;
    let inputs = &problem.inputs;
    let quad = &problem.quadrature;
    let objective = &problem.objective;
    let checked = grid.axes().iter().any(|a| a.policy() == OutOfRange::Error);
    let guard = if checked { Some(problem.reachable()?) } else { None };
    let terminal = (0..grid.len())
        .map(|x| objective.terminal_cost(grid.point(x)))
        .collect();
    let (values, policy, clamped) = sweep(grid.len(), problem.t0, problem.horizon, terminal, |t, x, next| {
        let mut buf = vec![0.0; grid.dim()];
        let mut best = Cell::INFEASIBLE;
        'inputs: for u in 0..inputs.len() {
            let mut expected = 0.0;
            let mut clamps = 0u64;
            for (v, p) in quad.nodes().iter().zip(quad.weights()) {
                let succ = match problem.successor(x, u, t, v, &mut buf) {
                    Ok(Some(s)) => s,
                    Ok(None) => continue 'inputs,
                    Err(_) if guard.as_ref().is_some_and(|r| !r[t - problem.t0][x]) => continue 'inputs,
                    Err(e) => return Err(e),
                };
                let tail = next[succ.id];
                if tail == f64::INFINITY {
                    continue 'inputs;
                }
                clamps += succ.clamped as u64;
                expected += p * tail;
            }
            best.clamped += clamps;
            let total = objective.stage_cost(grid.point(x), inputs.point(u), t) + expected;
            if total < best.value {
                best.value = total;
                best.action = Some(u as u32);
            }
        }
        Ok(best)
    })?;
    if !values.is_feasible(problem.t0, problem.initial_id) {
        return Err(Error::Infeasible { stage: problem.t0 });
    }
    Ok(StochasticSolution {
        values,
        policy,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{bellman_backward, Axis, FiniteHorizonProblem};

    fn walk(quadrature: NoiseQuadrature) -> StochasticProblem {
        StochasticProblem::builder(0, 3)
            .states(
                StateGrid::new(vec![Axis::uniform(-2.0, 2.0, 5)
                    .unwrap()
                    .with_policy(OutOfRange::Clamp)])
                .unwrap(),
            )
            .inputs(InputGrid::scalar(&[-1.0, 0.0, 1.0]).unwrap())
            .dynamics(|x, u, _, v, o| o[0] = x[0] + u[0] + v[0])
            .objective(AdditiveObjective::new(
                |x, u, _| x[0] * x[0] + 0.5 * u[0].abs(),
                |x| x[0] * x[0],
            ))
            .quadrature(quadrature)
            .initial_state(vec![1.0])
            .build()
            .unwrap()
    }

    #[test]
    fn mean_quadrature_matches_deterministic_solve() {
        let s = stochastic_bellman(&walk(NoiseQuadrature::mean(1))).unwrap();
        let det = FiniteHorizonProblem::builder(0, 3)
            .states(
                StateGrid::new(vec![Axis::uniform(-2.0, 2.0, 5)
                    .unwrap()
                    .with_policy(OutOfRange::Clamp)])
                .unwrap(),
            )
            .inputs(InputGrid::scalar(&[-1.0, 0.0, 1.0]).unwrap())
            .dynamics(|x, u, _, o| o[0] = x[0] + u[0])
            .objective(AdditiveObjective::new(
                |x, u, _| x[0] * x[0] + 0.5 * u[0].abs(),
                |x| x[0] * x[0],
            ))
            .initial_state(vec![1.0])
            .build()
            .unwrap();
        let (v, p) = bellman_backward(&det).unwrap();
        assert_eq!(s.values, v);
        assert_eq!(s.policy, p);
    }

    #[test]
    fn constant_cost_expectation() {
        let p = StochasticProblem::builder(0, 2)
            .states(StateGrid::scalar(vec![0.0, 1.0]).unwrap())
            .inputs(InputGrid::scalar(&[0.0]).unwrap())
            .dynamics(|_, _, _, v, o| o[0] = if v[0] > 0.0 { 1.0 } else { 0.0 })
            .objective(AdditiveObjective::new(|_, _, _| 2.0, |_| 3.0))
            .quadrature(super::super::gauss_quadrature(1, 4).unwrap())
            .initial_state(vec![0.0])
            .build()
            .unwrap();
        let s = stochastic_bellman(&p).unwrap();
        assert!((s.values.get(0, 0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn clamps_are_counted() {
        let q = NoiseQuadrature::new(vec![vec![-3.0], vec![3.0]], vec![0.5, 0.5]).unwrap();
        let s = stochastic_bellman(&walk(q)).unwrap();
        assert!(s.clamped > 0);
    }

    #[test]
    fn strict_axis_raises_on_reachable_cells() {
        let q = NoiseQuadrature::new(vec![vec![-3.0], vec![3.0]], vec![0.5, 0.5]).unwrap();
        let p = StochasticProblem::builder(0, 2)
            .states(
                StateGrid::new(vec![Axis::uniform(-2.0, 2.0, 5)
                    .unwrap()
                    .with_policy(OutOfRange::Error)])
                .unwrap(),
            )
            .inputs(InputGrid::scalar(&[0.0]).unwrap())
            .dynamics(|x, u, _, v, o| o[0] = x[0] + u[0] + v[0])
            .objective(AdditiveObjective::zero())
            .quadrature(q)
            .initial_state(vec![0.0])
            .build()
            .unwrap();
        assert!(matches!(stochastic_bellman(&p), Err(Error::AggregateRange { .. })));
    }

    #[test]
    fn any_infeasible_node_excludes_the_input() {
        let q = NoiseQuadrature::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let p = StochasticProblem::builder(0, 1)
            .states(StateGrid::scalar(vec![0.0, 1.0, 2.0]).unwrap())
            .inputs(InputGrid::scalar(&[0.0, 1.0]).unwrap())
            .dynamics(|x, u, _, v, o| o[0] = x[0] + u[0] + v[0])
            .objective(AdditiveObjective::new(|_, u, _| -u[0], |_| 0.0))
            .quadrature(q)
            .initial_state(vec![0.0])
            .build()
            .unwrap();
        // from 0 the zero input can fall below the grid; from 2 both overshoot
        let s = stochastic_bellman(&p).unwrap();
        assert_eq!(s.values.get(0, 0), -1.0);
        assert_eq!(s.policy.action(0, 0), Some(1));
        assert_eq!(s.values.get(0, 2), f64::INFINITY);
    }
}
