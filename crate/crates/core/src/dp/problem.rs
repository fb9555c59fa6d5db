use alloc::sync::Arc;
use alloc::vec::Vec;

use super::grid::{GridMode, InputGrid, Resolved, StateGrid};
use crate::objective::ForwardSeparableObjective;
use crate::{Error, Result};

/// `(x, u, t, out)`: writes `f(x, u, t)` into `out`.
pub type DynamicsFn = dyn Fn(&[f64], &[f64], usize, &mut [f64]) + Send + Sync;
/// `(x, u, t) -> c_t(x, u)`.
pub type StageCostFn = dyn Fn(&[f64], &[f64], usize) -> f64 + Send + Sync;
/// `x -> c_T(x)`.
pub type TerminalCostFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Sum of stage costs plus a terminal cost.
#[derive(Clone)]
pub struct AdditiveObjective {
    stage: Arc<StageCostFn>,
    terminal: Arc<TerminalCostFn>,
}

impl AdditiveObjective {
    pub fn new(
        stage: impl Fn(&[f64], &[f64], usize) -> f64 + Send + Sync + 'static,
        terminal: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            stage: Arc::new(stage),
            terminal: Arc::new(terminal),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _, _| 0.0, |_| 0.0)
    }

    #[inline]
    pub fn stage_cost(&self, x: &[f64], u: &[f64], t: usize) -> f64 {
        (self.stage)(x, u, t)
    }

    #[inline]
    pub fn terminal_cost(&self, x: &[f64]) -> f64 {
        (self.terminal)(x)
    }

    pub(crate) fn stage_fn(&self) -> &Arc<StageCostFn> {
        &self.stage
    }

    pub(crate) fn terminal_fn(&self) -> &Arc<TerminalCostFn> {
        &self.terminal
    }

    /// `Σ c_t(x(t), u(t)) + c_T(x(T))`.
    pub fn evaluate<S: AsRef<[f64]>, U: AsRef<[f64]>>(&self, t0: usize, inputs: &[U], states: &[S]) -> Result<f64> {
        check_shape(inputs.len(), states.len())?;
        let running: f64 = inputs
            .iter()
            .zip(states)
            .enumerate()
            .map(|(k, (u, x))| self.stage_cost(x.as_ref(), u.as_ref(), t0 + k))
            .sum();
        Ok(running + self.terminal_cost(states[inputs.len()].as_ref()))
    }
}

pub(crate) fn check_shape(inputs: usize, states: usize) -> Result<()> {
    if inputs == 0 {
        return Err(Error::ShapeMismatch { expected: 1, found: 0 });
    }
    if states != inputs + 1 {
        return Err(Error::ShapeMismatch {
            expected: inputs + 1,
            found: states,
        });
    }
    Ok(())
}

/// Objective attached to a [`FiniteHorizonProblem`].
#[derive(Clone)]
pub enum Objective {
    Additive(AdditiveObjective),
    ForwardSeparable(ForwardSeparableObjective),
}

impl Objective {
    pub fn evaluate<S: AsRef<[f64]>, U: AsRef<[f64]>>(&self, t0: usize, inputs: &[U], states: &[S]) -> Result<f64> {
        match self {
            Objective::Additive(a) => a.evaluate(t0, inputs, states),
            Objective::ForwardSeparable(f) => f.evaluate(t0, inputs, states),
        }
    }
}

impl From<AdditiveObjective> for Objective {
    fn from(a: AdditiveObjective) -> Self {
        Objective::Additive(a)
    }
}

impl From<ForwardSeparableObjective> for Objective {
    fn from(f: ForwardSeparableObjective) -> Self {
        Objective::ForwardSeparable(f)
    }
}

/// A feasible input/state sequence and its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: usize,
    pub input_ids: Vec<usize>,
    pub inputs: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub objective_value: f64,
}

/// Discrete-time controlled system over stages `t0..=horizon` with an
/// attached objective.
///
/// States live on a [`StateGrid`]; a successor is a member of X when every
/// axis accepts it (see [`super::OutOfRange`]). In [`GridMode::Project`]
/// successors between grid points are moved to the nearest point; in
/// [`GridMode::Strict`] they are outside X.
#[derive(Clone)]
pub struct FiniteHorizonProblem {
    t0: usize,
    horizon: usize,
    states: StateGrid,
    inputs: InputGrid,
    dynamics: Arc<DynamicsFn>,
    objective: Objective,
    initial_id: usize,
    mode: GridMode,
}

/// Builder for [`FiniteHorizonProblem`].
pub struct ProblemBuilder {
    t0: usize,
    horizon: usize,
    states: Option<StateGrid>,
    inputs: Option<InputGrid>,
    dynamics: Option<Arc<DynamicsFn>>,
    objective: Option<Objective>,
    initial: Option<Vec<f64>>,
    mode: GridMode,
}

impl ProblemBuilder {
    pub fn states(mut self, grid: StateGrid) -> Self {
        self.states = Some(grid);
        self
    }

    pub fn inputs(mut self, grid: InputGrid) -> Self {
        self.inputs = Some(grid);
        self
    }

    pub fn dynamics(mut self, f: impl Fn(&[f64], &[f64], usize, &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dynamics = Some(Arc::new(f));
        self
    }

    pub fn dynamics_arc(mut self, f: Arc<DynamicsFn>) -> Self {
        self.dynamics = Some(f);
        self
    }

    pub fn objective(mut self, objective: impl Into<Objective>) -> Self {
        self.objective = Some(objective.into());
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

    pub fn build(self) -> Result<FiniteHorizonProblem> {
        let missing = |what: &str| Error::InvalidParameter(alloc::format!("missing {what}"));
        if self.t0 >= self.horizon {
            return Err(Error::InvalidParameter(alloc::format!(
                "t0 = {} must be below the horizon {}",
                self.t0,
                self.horizon
            )));
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
        Ok(FiniteHorizonProblem {
            t0: self.t0,
            horizon: self.horizon,
            states,
            inputs: self.inputs.ok_or_else(|| missing("input grid"))?,
            dynamics: self.dynamics.ok_or_else(|| missing("dynamics"))?,
            objective: self.objective.ok_or_else(|| missing("objective"))?,
            initial_id,
            mode: self.mode,
        })
    }
}

impl FiniteHorizonProblem {
    pub fn builder(t0: usize, horizon: usize) -> ProblemBuilder {
        ProblemBuilder {
            t0,
            horizon,
            states: None,
            inputs: None,
            dynamics: None,
            objective: None,
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

    pub fn stages(&self) -> usize {
        self.horizon - self.t0
    }

    pub fn state_grid(&self) -> &StateGrid {
        &self.states
    }

    pub fn input_grid(&self) -> &InputGrid {
        &self.inputs
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn initial_id(&self) -> usize {
        self.initial_id
    }

    pub fn initial_state(&self) -> &[f64] {
        self.states.point(self.initial_id)
    }

    pub(crate) fn dynamics_arc(&self) -> &Arc<DynamicsFn> {
        &self.dynamics
    }

    /// Raw (unprojected) dynamics.
    pub fn apply_dynamics(&self, x: &[f64], u: &[f64], t: usize, out: &mut [f64]) {
        (self.dynamics)(x, u, t, out)
    }

    pub(crate) fn check_stage(&self, t: usize) -> Result<()> {
        if t < self.t0 || t >= self.horizon {
            return Err(Error::StageOutOfRange {
                stage: t,
                t0: self.t0,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Grid id of `f(x, u, t)`, or `None` when the successor is outside X.
    pub fn successor(&self, x_id: usize, u_id: usize, t: usize, buf: &mut [f64]) -> Result<Option<Resolved>> {
        (self.dynamics)(self.states.point(x_id), self.inputs.point(u_id), t, buf);
        self.states.resolve(buf, self.mode, t)
    }

    /// Γ_{t,x}: ids of inputs whose successor stays in X, in grid order.
    pub fn feasible_inputs(&self, x: &[f64], t: usize) -> Result<Vec<usize>> {
        self.check_stage(t)?;
        let x_id = self.states.index_of(x).ok_or(Error::NotOnGrid)?;
        let mut buf = alloc::vec![0.0; self.states.dim()];
        let mut out = Vec::new();
        for u in 0..self.inputs.len() {
            if self.successor(x_id, u, t, &mut buf)?.is_some() {
                out.push(u);
            }
        }
        Ok(out)
    }

    /// The same system and objective posed from stage `t` at state `x`.
    pub fn restart(&self, t: usize, x: &[f64]) -> Result<Self> {
        self.check_stage(t)?;
        let initial_id = self.states.index_of(x).ok_or(Error::NotOnGrid)?;
        Ok(Self {
            t0: t,
            initial_id,
            ..self.clone()
        })
    }

    pub fn evaluate<S: AsRef<[f64]>, U: AsRef<[f64]>>(&self, inputs: &[U], states: &[S]) -> Result<f64> {
        if inputs.len() != self.stages() {
            return Err(Error::ShapeMismatch {
                expected: self.stages(),
                found: inputs.len(),
            });
        }
        self.objective.evaluate(self.t0, inputs, states)
    }

    /// Simulates an input-id sequence from the initial state, applying the
    /// problem's grid semantics. Returns `None` if it leaves X.
    pub fn simulate(&self, input_ids: &[usize]) -> Result<Option<Trajectory>> {
        if input_ids.len() != self.stages() {
            return Err(Error::ShapeMismatch {
                expected: self.stages(),
                found: input_ids.len(),
            });
        }
        let mut buf = alloc::vec![0.0; self.states.dim()];
        let mut id = self.initial_id;
        let mut states = alloc::vec![self.states.point(id).to_vec()];
        for (k, &u) in input_ids.iter().enumerate() {
            match self.successor(id, u, self.t0 + k, &mut buf)? {
                Some(r) => id = r.id,
                None => return Ok(None),
            }
            states.push(self.states.point(id).to_vec());
        }
        let inputs: Vec<Vec<f64>> = input_ids.iter().map(|&u| self.inputs.point(u).to_vec()).collect();
        let objective_value = self.evaluate(&inputs, &states)?;
        Ok(Some(Trajectory {
            t0: self.t0,
            input_ids: input_ids.to_vec(),
            inputs,
            states,
            objective_value,
        }))
    }
}
