//! State augmentation.
//!
//! A forward-separable problem over `x` becomes an additive problem over
//! `z = (x, a)` where `a` is the running aggregate of the objective chain:
//!
//! ```text
//! z(t0+1) = (f(x, u, t0), first(x, u, t0))
//! z(t+1)  = (f(x, u, t),  step(x, u, a, t))
//! cost    = last(x(T), a(T))   (terminal only)
//! ```
//!
//! The input-free closing transition `a <- last(x, a)` is folded into the
//! terminal cost, so the product problem keeps the base horizon. The
//! aggregate at `t0` is never read; it is padded with the grid point
//! nearest to zero.
//!
//! In [`AugmentMode::Hybrid`] the additive leaves of a `combine_sum` tree
//! stay ordinary stage costs and only the remaining leaves are augmented.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{
    bellman_backward, rollout, AdditiveObjective, Axis, FiniteHorizonProblem, Objective, OutOfRange, PolicyTable,
    StateGrid, Trajectory, ValueTable,
};
use crate::objective::{Composition, ForwardSeparableObjective};
use crate::{Error, Result};

/// Discretization of the aggregate space, one axis per aggregate component.
#[derive(Clone, Debug)]
pub enum AggregateGrid {
    /// Uniform axes with the given point count over auto-computed bounds.
    Auto { points: usize },
    /// Multiples of `step` covering auto-computed bounds.
    AutoStep { step: f64 },
    /// Explicit axes.
    Axes(Vec<Axis>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmentMode {
    /// The whole objective chain becomes state.
    Full,
    /// Additive leaves stay stage costs; the rest becomes state.
    Hybrid,
}

#[derive(Clone)]
pub struct AugmentedProblem {
    base: FiniteHorizonProblem,
    mode: AugmentMode,
    aggregate: Option<ForwardSeparableObjective>,
    product: FiniteHorizonProblem,
}

/// Tables and trajectories from solving an augmented problem.
#[derive(Clone, Debug)]
pub struct AugmentedSolution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    /// Optimal value read from the value table at the initial product state.
    pub value: f64,
    pub augmented: Trajectory,
    pub recovered: Trajectory,
}

/// Full augmentation of a forward-separable problem.
pub fn augment(base: &FiniteHorizonProblem, grid: AggregateGrid) -> Result<AugmentedProblem> {
    AugmentedProblem::new(base, grid, AugmentMode::Full)
}

/// Augments only the non-additive leaves of the objective.
pub fn augment_hybrid(base: &FiniteHorizonProblem, grid: AggregateGrid) -> Result<AugmentedProblem> {
    AugmentedProblem::new(base, grid, AugmentMode::Hybrid)
}

/// Splits an objective into the part kept as stage costs and the part that
/// is carried as state.
fn split(objective: &Objective, mode: AugmentMode) -> (Option<AdditiveObjective>, Option<ForwardSeparableObjective>) {
    let fs = match objective {
        Objective::Additive(a) if mode == AugmentMode::Hybrid => return (Some(a.clone()), None),
        Objective::Additive(a) => return (None, Some(ForwardSeparableObjective::from_additive(a.clone()))),
        Objective::ForwardSeparable(fs) => fs,
    };
    if mode == AugmentMode::Full {
        return (None, Some(fs.clone()));
    }
    let mut additive = Vec::new();
    let mut rest: Option<ForwardSeparableObjective> = None;
    for leaf in fs.leaves() {
        match leaf.composition() {
            Composition::Additive(a) => additive.push(a.clone()),
            _ => {
                rest = Some(match rest {
                    None => leaf.clone(),
                    Some(acc) => ForwardSeparableObjective::combine_sum(acc, leaf.clone()),
                })
            }
        }
    }
    let additive = match additive.len() {
        0 => None,
        1 => additive.pop(),
        _ => {
            let parts = Arc::new(additive);
            let terms = parts.clone();
            Some(AdditiveObjective::new(
                move |x, u, t| parts.iter().map(|a| a.stage_cost(x, u, t)).sum(),
                move |x| terms.iter().map(|a| a.terminal_cost(x)).sum(),
            ))
        }
    };
    (additive, rest)
}

/// Bounds on every aggregate component over stages `t0 + 1..=T`, by
/// propagating boxes through the chain over all grid states and inputs.
/// Each step is evaluated at the corners of the previous box, which is exact
/// for chains that are monotone in each aggregate component (sums, maxima,
/// minima).
pub fn aggregate_bounds(base: &FiniteHorizonProblem, agg: &ForwardSeparableObjective) -> Result<Vec<(f64, f64)>> {
    let q = agg.agg_dim();
    if q > 12 {
        return Err(Error::InvalidParameter(alloc::format!(
            "automatic bounds support at most 12 aggregate components, got {q}"
        )));
    }
    let grid = base.state_grid();
    let inputs = base.input_grid();
    let mut out = vec![0.0; q];
    let widen = |b: &mut Vec<(f64, f64)>, v: &[f64]| -> Result<()> {
        for (bi, &vi) in b.iter_mut().zip(v) {
            if !vi.is_finite() {
                return Err(Error::InvalidParameter("aggregate update is not finite".into()));
            }
            bi.0 = bi.0.min(vi);
            bi.1 = bi.1.max(vi);
        }
        Ok(())
    };
    let empty = vec![(f64::INFINITY, f64::NEG_INFINITY); q];
    let mut stage = empty.clone();
    for x in 0..grid.len() {
        for u in inputs.iter() {
            agg.first(grid.point(x), u, base.t0(), &mut out);
            widen(&mut stage, &out)?;
        }
    }
    let mut all = stage.clone();
    let mut corner = vec![0.0; q];
    for t in base.t0() + 1..base.horizon() {
        let mut next = empty.clone();
        for mask in 0..(1usize << q) {
            for (k, c) in corner.iter_mut().enumerate() {
                *c = if mask >> k & 1 == 0 { stage[k].0 } else { stage[k].1 };
            }
            for x in 0..grid.len() {
                for u in inputs.iter() {
                    agg.step(grid.point(x), u, &corner, t, &mut out);
                    widen(&mut next, &out)?;
                }
            }
        }
        for (a, n) in all.iter_mut().zip(&next) {
            a.0 = a.0.min(n.0);
            a.1 = a.1.max(n.1);
        }
        stage = next;
    }
    Ok(all)
}

impl AugmentedProblem {
    pub fn new(base: &FiniteHorizonProblem, grid: AggregateGrid, mode: AugmentMode) -> Result<Self> {
        let (additive, aggregate) = split(base.objective(), mode);
        let axes = match &aggregate {
            None => Vec::new(),
            Some(agg) => {
                let axes = match grid {
                    AggregateGrid::Axes(axes) => axes,
                    AggregateGrid::Auto { points } => aggregate_bounds(base, agg)?
                        .into_iter()
                        .map(|(lo, hi)| Axis::uniform(lo, hi, points))
                        .collect::<Result<_>>()?,
                    AggregateGrid::AutoStep { step } => aggregate_bounds(base, agg)?
                        .into_iter()
                        .map(|(lo, hi)| Axis::stepped(lo, hi, step))
                        .collect::<Result<_>>()?,
                };
                if axes.len() != agg.agg_dim() {
                    return Err(Error::ShapeMismatch {
                        expected: agg.agg_dim(),
                        found: axes.len(),
                    });
                }
                axes.into_iter().map(|a| a.with_policy(OutOfRange::Error)).collect()
            }
        };
        let product = build_product(base, additive, aggregate.clone(), axes)?;
        Ok(Self {
            base: base.clone(),
            mode,
            aggregate,
            product,
        })
    }

    pub fn base(&self) -> &FiniteHorizonProblem {
        &self.base
    }

    pub fn mode(&self) -> AugmentMode {
        self.mode
    }

    /// Dimension of the augmented aggregate (0 when nothing is augmented).
    pub fn aggregate_dim(&self) -> usize {
        self.aggregate.as_ref().map_or(0, |a| a.agg_dim())
    }

    /// The additive problem over `(x, a)`.
    pub fn product(&self) -> &FiniteHorizonProblem {
        &self.product
    }

    /// Drops the aggregate components; inputs are unchanged and the value is
    /// re-evaluated under the base objective.
    pub fn recover(&self, augmented: &Trajectory) -> Result<Trajectory> {
        let n = self.base.state_grid().dim();
        let width = self.product.state_grid().dim();
        if augmented.states.len() != self.base.stages() + 1 {
            return Err(Error::ShapeMismatch {
                expected: self.base.stages() + 1,
                found: augmented.states.len(),
            });
        }
        if let Some(bad) = augmented.states.iter().find(|z| z.len() != width) {
            return Err(Error::ShapeMismatch {
                expected: width,
                found: bad.len(),
            });
        }
        let states: Vec<Vec<f64>> = augmented.states.iter().map(|z| z[..n].to_vec()).collect();
        let objective_value = self.base.evaluate(&augmented.inputs, &states)?;
        Ok(Trajectory {
            t0: augmented.t0,
            input_ids: augmented.input_ids.clone(),
            inputs: augmented.inputs.clone(),
            states,
            objective_value,
        })
    }

    /// Backward induction on the product problem, rollout, and recovery.
    pub fn solve(&self) -> Result<AugmentedSolution> {
        let (values, policy) = bellman_backward(&self.product)?;
        let augmented = rollout(&self.product, &policy)?;
        let recovered = self.recover(&augmented)?;
        let value = values.get(self.product.t0(), self.product.initial_id());
        Ok(AugmentedSolution {
            values,
            policy,
            value,
            augmented,
            recovered,
        })
    }
}

fn build_product(
    base: &FiniteHorizonProblem,
    additive: Option<AdditiveObjective>,
    aggregate: Option<ForwardSeparableObjective>,
    agg_axes: Vec<Axis>,
) -> Result<FiniteHorizonProblem> {
    let n = base.state_grid().dim();
    let t0 = base.t0();
    let additive = additive.unwrap_or_else(AdditiveObjective::zero);
    let builder = FiniteHorizonProblem::builder(t0, base.horizon())
        .inputs(base.input_grid().clone())
        .mode(base.mode());
    let Some(agg) = aggregate else {
        return builder
            .states(base.state_grid().clone())
            .dynamics_arc(base.dynamics_arc().clone())
            .objective(additive)
            .initial_state(base.initial_state().to_vec())
            .build();
    };
    let mut x0 = base.initial_state().to_vec();
    x0.extend(agg_axes.iter().map(|a| a.values()[a.nearest(0.0)]));
    let mut axes = base.state_grid().axes().to_vec();
    axes.extend(agg_axes);

    let f = base.dynamics_arc().clone();
    let chain = agg.clone();
    let dynamics = move |z: &[f64], u: &[f64], t: usize, out: &mut [f64]| {
        let (x, a) = z.split_at(n);
        let (ox, oa) = out.split_at_mut(n);
        f(x, u, t, ox);
        if t == t0 {
            chain.first(x, u, t, oa);
        } else {
            chain.step(x, u, a, t, oa);
        }
    };
    let stage_part = additive.clone();
    let objective = AdditiveObjective::new(
        move |z, u, t| stage_part.stage_cost(&z[..n], u, t),
        move |z| additive.terminal_cost(&z[..n]) + agg.last(&z[..n], &z[n..]),
    );
    builder
        .states(StateGrid::new(axes)?)
        .dynamics(dynamics)
        .objective(objective)
        .initial_state(x0)
        .build()
}
