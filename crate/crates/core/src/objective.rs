//! Forward-separable objectives.
//!
//! An objective is forward separable when it can be computed by folding an
//! aggregate of fixed dimension `q` left to right over the trajectory:
//!
//! ```text
//! a(t0)   = first(x(t0), u(t0), t0)
//! a(t+1)  = step(x(t), u(t), a(t), t)        t0 < t < T
//! J       = last(x(T), a(T))
//! ```
//!
//! Stages are absolute, so the same objective serves every tail problem
//! started at `s > t0`: `first` is applied at whatever stage a problem
//! starts.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{check_shape, AdditiveObjective, StageCostFn, TerminalCostFn};
use crate::Result;

/// `(x, u, t, out)`: seeds the aggregate.
pub type FirstFn = dyn Fn(&[f64], &[f64], usize, &mut [f64]) + Send + Sync;
/// `(x, u, a, t, out)`: advances the aggregate.
pub type StepFn = dyn Fn(&[f64], &[f64], &[f64], usize, &mut [f64]) + Send + Sync;
/// `(x, a) -> J`.
pub type LastFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Running maximum of per-stage terms: `max(max_t d_t(x, u), d_T(x(T)))`.
#[derive(Clone)]
pub struct SupObjective {
    pub stage: Arc<StageCostFn>,
    pub terminal: Arc<TerminalCostFn>,
}

impl SupObjective {
    pub fn new(
        stage: impl Fn(&[f64], &[f64], usize) -> f64 + Send + Sync + 'static,
        terminal: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            stage: Arc::new(stage),
            terminal: Arc::new(terminal),
        }
    }
}

/// How an objective was assembled. Augmentation uses this to keep additive
/// parts as ordinary stage costs.
#[derive(Clone)]
pub enum Composition {
    Additive(AdditiveObjective),
    Sup(SupObjective),
    Sum(Box<ForwardSeparableObjective>, Box<ForwardSeparableObjective>),
    Custom,
}

#[derive(Clone)]
pub struct ForwardSeparableObjective {
    agg_dim: usize,
    first: Arc<FirstFn>,
    step: Arc<StepFn>,
    last: Arc<LastFn>,
    composition: Composition,
}

impl ForwardSeparableObjective {
    /// A chain given directly by its three maps.
    pub fn new(
        agg_dim: usize,
        first: impl Fn(&[f64], &[f64], usize, &mut [f64]) + Send + Sync + 'static,
        step: impl Fn(&[f64], &[f64], &[f64], usize, &mut [f64]) + Send + Sync + 'static,
        last: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(agg_dim > 0, "aggregate dimension must be positive");
        Self {
            agg_dim,
            first: Arc::new(first),
            step: Arc::new(step),
            last: Arc::new(last),
            composition: Composition::Custom,
        }
    }

    /// `Σ c_t + c_T` as a one-dimensional running sum.
    pub fn from_additive(additive: AdditiveObjective) -> Self {
        let (c1, c2, ct) = (
            additive.stage_fn().clone(),
            additive.stage_fn().clone(),
            additive.terminal_fn().clone(),
        );
        Self {
            agg_dim: 1,
            first: Arc::new(move |x, u, t, out| out[0] = c1(x, u, t)),
            step: Arc::new(move |x, u, a, t, out| out[0] = c2(x, u, t) + a[0]),
            last: Arc::new(move |x, a| ct(x) + a[0]),
            composition: Composition::Additive(additive),
        }
    }

    /// Running maximum of `d_t`, closed by `d_T`.
    pub fn from_sup(sup: SupObjective) -> Self {
        let (d1, d2, dt) = (sup.stage.clone(), sup.stage.clone(), sup.terminal.clone());
        Self {
            agg_dim: 1,
            first: Arc::new(move |x, u, t, out| out[0] = d1(x, u, t)),
            step: Arc::new(move |x, u, a, t, out| out[0] = d2(x, u, t).max(a[0])),
            last: Arc::new(move |x, a| dt(x).max(a[0])),
            composition: Composition::Sup(sup),
        }
    }

    /// `a + b` with stacked aggregates `[a | b]`.
    pub fn combine_sum(a: ForwardSeparableObjective, b: ForwardSeparableObjective) -> Self {
        let qa = a.agg_dim;
        let (af, bf) = (a.first.clone(), b.first.clone());
        let (as_, bs) = (a.step.clone(), b.step.clone());
        let (al, bl) = (a.last.clone(), b.last.clone());
        Self {
            agg_dim: a.agg_dim + b.agg_dim,
            first: Arc::new(move |x, u, t, out| {
                let (oa, ob) = out.split_at_mut(qa);
                af(x, u, t, oa);
                bf(x, u, t, ob);
            }),
            step: Arc::new(move |x, u, agg, t, out| {
                let (oa, ob) = out.split_at_mut(qa);
                as_(x, u, &agg[..qa], t, oa);
                bs(x, u, &agg[qa..], t, ob);
            }),
            last: Arc::new(move |x, agg| al(x, &agg[..qa]) + bl(x, &agg[qa..])),
            composition: Composition::Sum(Box::new(a), Box::new(b)),
        }
    }

    pub fn agg_dim(&self) -> usize {
        self.agg_dim
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    #[inline]
    pub fn first(&self, x: &[f64], u: &[f64], t: usize, out: &mut [f64]) {
        (self.first)(x, u, t, out)
    }

    #[inline]
    pub fn step(&self, x: &[f64], u: &[f64], agg: &[f64], t: usize, out: &mut [f64]) {
        (self.step)(x, u, agg, t, out)
    }

    #[inline]
    pub fn last(&self, x: &[f64], agg: &[f64]) -> f64 {
        (self.last)(x, agg)
    }

    /// Leaves of the `combine_sum` tree, left to right.
    pub fn leaves(&self) -> Vec<&ForwardSeparableObjective> {
        match &self.composition {
            Composition::Sum(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
            _ => vec![self],
        }
    }

    /// Folds the chain over a trajectory that starts at stage `t0`.
    pub fn evaluate<S: AsRef<[f64]>, U: AsRef<[f64]>>(&self, t0: usize, inputs: &[U], states: &[S]) -> Result<f64> {
        check_shape(inputs.len(), states.len())?;
        let mut agg = vec![0.0; self.agg_dim];
        let mut next = vec![0.0; self.agg_dim];
        self.first(states[0].as_ref(), inputs[0].as_ref(), t0, &mut agg);
        for k in 1..inputs.len() {
            self.step(states[k].as_ref(), inputs[k].as_ref(), &agg, t0 + k, &mut next);
            core::mem::swap(&mut agg, &mut next);
        }
        Ok(self.last(states[inputs.len()].as_ref(), &agg))
    }
}
