//! The battery problem with solar generation driven by the Gauss-Markov
//! model. The solved state is `(e, m, w_1..w_d)`: stored energy, running
//! on-peak demand term, and the normalized weather process, which makes the
//! state Markov.

use alloc::vec;
use alloc::vec::Vec;

use super::bellman::{stochastic_bellman, StochasticProblem, StochasticSolution};
use super::gauss_markov::{GaussMarkovModel, SolarPath};
use super::quadrature::gauss_quadrature;
use crate::battery::{
    battery_step, dedup_sorted, demand_term, energy_term, evaluate_schedule, solve_deterministic, BatteryInstance,
    BatteryOptions, BatteryParams, DayProfile, GridResolution, PeakGrid, PricingPlan, ScheduleResult,
};
use crate::dp::{AdditiveObjective, Axis, GridMode, InputGrid, OutOfRange, Snap, StateGrid};
use crate::{Error, Result};

/// Discretization of the weather state and of the noise expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseGrid {
    /// Points per weather dimension.
    pub w_points: usize,
    /// Each weather axis spans `[-w_range, w_range]` standard units.
    pub w_range: f64,
    pub nodes_per_dim: usize,
    /// Treat weather successors outside the grid as errors instead of
    /// clamping them.
    pub strict: bool,
}

impl Default for NoiseGrid {
    fn default() -> Self {
        Self {
            w_points: 9,
            w_range: 3.0,
            nodes_per_dim: 5,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StochasticBatteryInstance {
    pub params: BatteryParams,
    pub plan: PricingPlan,
    /// Appliance load per step, kW.
    pub load: Vec<f64>,
    pub model: GaussMarkovModel,
    pub e0: f64,
    pub grids: GridResolution,
    pub noise: NoiseGrid,
    pub clamp_export: bool,
    /// Refuse product grids with more states than this.
    pub max_states: usize,
}

pub const DEFAULT_MAX_STATES: usize = 2_000_000;

impl StochasticBatteryInstance {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.plan.validate()?;
        let steps = self.plan.steps;
        if self.load.len() != steps || self.load.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "load must have {steps} finite values, got {}",
                self.load.len()
            )));
        }
        if self.model.steps() < steps {
            return Err(Error::InvalidParameter(alloc::format!(
                "solar model covers {} steps, {steps} needed",
                self.model.steps()
            )));
        }
        if !(self.e0 >= self.params.e_min && self.e0 <= self.params.e_max) {
            return Err(Error::InvalidParameter("e0 must lie in [e_min, e_max]".into()));
        }
        if self.noise.w_points == 0 || self.noise.nodes_per_dim == 0 {
            return Err(Error::InvalidParameter("noise grids need at least one point".into()));
        }
        if !(self.noise.w_range.is_finite() && self.noise.w_range > 0.0) {
            return Err(Error::InvalidParameter("w_range must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.model.process.dim()
    }

    pub fn solar(&self, k: usize, w1: f64) -> f64 {
        self.model.profile.solar_power(k, w1)
    }

    pub fn energy_axis(&self) -> Result<Axis> {
        Axis::uniform(self.params.e_min, self.params.e_max, self.grids.energy_points)
    }

    pub fn input_grid(&self) -> Result<InputGrid> {
        InputGrid::uniform(self.params.u_min, self.params.u_max, self.grids.input_points)
    }

    pub fn w_axis(&self) -> Result<Axis> {
        let policy = if self.noise.strict {
            OutOfRange::Error
        } else {
            OutOfRange::Clamp
        };
        Ok(Axis::uniform(-self.noise.w_range, self.noise.w_range, self.noise.w_points)?.with_policy(policy))
    }

    /// Range of the on-peak demand term over the weather grid, including 0.
    pub fn peak_bounds(&self) -> (f64, f64) {
        let r = self.noise.w_range;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for k in self.plan.t_on..self.plan.t_off {
            let (dark, bright) = (self.solar(k, -r), self.solar(k, r));
            lo = lo.min(demand_term(&self.plan, self.load[k] - bright + self.params.u_min, k));
            hi = hi.max(demand_term(&self.plan, self.load[k] - dark + self.params.u_max, k));
        }
        (lo, hi)
    }

    pub fn peak_axis(&self) -> Result<Axis> {
        match &self.grids.peak {
            PeakGrid::Uniform(n) => {
                let (lo, hi) = self.peak_bounds();
                Axis::uniform(lo, hi, *n)
            }
            PeakGrid::Axis(a) => Ok(a.clone()),
            PeakGrid::Exact => {
                let inputs = self.input_grid()?;
                let w = self.w_axis()?;
                let mut values = vec![0.0];
                for k in self.plan.t_on..self.plan.t_off {
                    for &w1 in w.values() {
                        let base = self.load[k] - self.solar(k, w1);
                        values.extend(inputs.iter().map(|u| demand_term(&self.plan, base + u[0], k)));
                    }
                }
                Axis::new(dedup_sorted(values))
            }
        }
    }

    pub fn state_grid(&self) -> Result<StateGrid> {
        let mut axes = vec![self.energy_axis()?, self.peak_axis()?.with_policy(OutOfRange::Error)];
        let w = self.w_axis()?;
        axes.extend(core::iter::repeat_n(w, self.dim()));
        let states = axes
            .iter()
            .try_fold(1usize, |n, a| n.checked_mul(a.len()))
            .unwrap_or(usize::MAX);
        if states > self.max_states {
            return Err(Error::TooLarge {
                states,
                cap: self.max_states,
            });
        }
        StateGrid::new(axes)
    }

    pub fn build_problem(&self) -> Result<StochasticProblem> {
        self.validate()?;
        let grid = self.state_grid()?;
        let m0 = {
            let a = &grid.axes()[1];
            a.values()[a.nearest(0.0)]
        };
        let mut x0 = vec![self.e0, m0];
        x0.extend(core::iter::repeat_n(0.0, self.dim()));

        let (params, plan) = (self.params.clone(), self.plan.clone());
        let (load, profile) = (self.load.clone(), self.model.profile.clone());
        let process = self.model.process.clone();
        let (plan_c, load_c, profile_c) = (self.plan.clone(), self.load.clone(), self.model.profile.clone());
        let (dt, clamp) = (self.params.dt, self.clamp_export);
        StochasticProblem::builder(0, self.plan.steps)
            .states(grid)
            .inputs(self.input_grid()?)
            .dynamics(move |z, u, k, v, out| {
                out[0] = battery_step(&params, z[0], u[0]);
                let d = demand_term(&plan, load[k] - profile.solar_power(k, z[2]) + u[0], k);
                out[1] = if k == 0 { d } else { d.max(z[1]) };
                process.propagate(&z[2..], v, &mut out[2..]);
            })
            .objective(AdditiveObjective::new(
                move |z, u, k| energy_term(&plan_c, dt, load_c[k] - profile_c.solar_power(k, z[2]) + u[0], k, clamp),
                |z| 0.0 + 0.0f64.max(z[1]),
            ))
            .quadrature(gauss_quadrature(self.dim(), self.noise.nodes_per_dim)?)
            .initial_state(x0)
            .mode(GridMode::Project)
            .build()
    }

    /// The deterministic instance with the given realized solar and an
    /// exact peak grid.
    pub fn clairvoyant(&self, solar: &[f64]) -> BatteryInstance {
        BatteryInstance {
            params: self.params.clone(),
            plan: self.plan.clone(),
            profile: DayProfile {
                load: self.load.clone(),
                solar: solar[..self.plan.steps].to_vec(),
            },
            e0: self.e0,
            options: BatteryOptions {
                grids: GridResolution {
                    peak: PeakGrid::Exact,
                    ..self.grids.clone()
                },
                clamp_export: self.clamp_export,
            },
        }
    }
}

pub struct StochasticBatterySolution {
    pub problem: StochasticProblem,
    pub solution: StochasticSolution,
    /// Expected cost from the initial state.
    pub expected_cost: f64,
}

pub fn solve_stochastic(instance: &StochasticBatteryInstance) -> Result<StochasticBatterySolution> {
    let problem = instance.build_problem()?;
    let solution = stochastic_bellman(&problem)?;
    let expected_cost = solution.values.get(0, problem.initial_id());
    Ok(StochasticBatterySolution {
        problem,
        solution,
        expected_cost,
    })
}

/// Runs the stochastic policy along a realized solar path. The policy sees
/// the realized weather and running peak projected onto the grid; costs use
/// the realized solar.
pub fn simulate_policy(
    instance: &StochasticBatteryInstance,
    solved: &StochasticBatterySolution,
    path: &SolarPath,
) -> Result<ScheduleResult> {
    let steps = instance.plan.steps;
    if path.solar.len() < steps || path.w.steps() < steps || path.w.vars() != instance.dim() {
        return Err(Error::ShapeMismatch {
            expected: steps,
            found: path.solar.len().min(path.w.steps()),
        });
    }
    let grid = solved.problem.state_grid();
    let axes = grid.axes();
    let inputs = solved.problem.input_grid();
    let mut ie = grid.axis_index(solved.problem.initial_id(), 0);
    let mut im = grid.axis_index(solved.problem.initial_id(), 1);
    let mut m = 0.0;
    let mut us = Vec::with_capacity(steps);
    let mut energy = vec![axes[0].values()[ie]];
    let mut idx = vec![0usize; axes.len()];
    for k in 0..steps {
        idx[0] = ie;
        idx[1] = im;
        for i in 0..instance.dim() {
            idx[2 + i] = axes[2 + i].nearest(path.w.get(k, i));
        }
        let id = grid.id_from_indices(&idx);
        let u = inputs.point(
            solved
                .solution
                .policy
                .action(k, id)
                .ok_or(Error::PolicyUndefined { stage: k, state: id })?,
        )[0];
        ie = match axes[0].snap(
            battery_step(&instance.params, axes[0].values()[ie], u),
            GridMode::Project,
        ) {
            Snap::Exact(i) | Snap::Projected(i) => i,
            _ => return Err(Error::Infeasible { stage: k }),
        };
        let d = demand_term(&instance.plan, instance.load[k] - path.solar[k] + u, k);
        m = if k == 0 { d } else { d.max(m) };
        im = axes[1].nearest(m);
        us.push(u);
        energy.push(axes[0].values()[ie]);
    }
    evaluate_schedule(&instance.clairvoyant(&path.solar), &us, &energy)
}

/// Realized cost of the stochastic policy against the clairvoyant optimum
/// on the same sampled paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedComparison {
    pub stochastic: Vec<f64>,
    pub clairvoyant: Vec<f64>,
    pub mean_stochastic: f64,
    pub mean_clairvoyant: f64,
    /// `mean_stochastic - mean_clairvoyant`.
    pub mean_gap: f64,
    /// Smallest per-path gap.
    pub min_gap: f64,
    /// Solar samples clamped at zero across all paths.
    pub solar_clamped: usize,
}

pub fn compare_with_clairvoyant(
    instance: &StochasticBatteryInstance,
    solved: &StochasticBatterySolution,
    paths: usize,
    seed: u64,
) -> Result<PairedComparison> {
    if paths == 0 {
        return Err(Error::InvalidParameter("at least one path is needed".into()));
    }
    let one = |i: usize| -> Result<(f64, f64, usize)> {
        let path = instance.model.sample_solar(instance.plan.steps, seed, i as u64)?;
        let realized = simulate_policy(instance, solved, &path)?.total_cost;
        let best = solve_deterministic(&instance.clairvoyant(&path.solar))?.total_cost;
        Ok((realized, best, path.clamped))
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<(f64, f64, usize)>> = {
        use rayon::prelude::*;
        (0..paths).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<(f64, f64, usize)>> = (0..paths).map(one).collect();

    let mut stochastic = Vec::with_capacity(paths);
    let mut clairvoyant = Vec::with_capacity(paths);
    let mut solar_clamped = 0;
    for r in runs {
        let (s, c, n) = r?;
        stochastic.push(s);
        clairvoyant.push(c);
        solar_clamped += n;
    }
    let n = paths as f64;
    let mean_stochastic = stochastic.iter().sum::<f64>() / n;
    let mean_clairvoyant = clairvoyant.iter().sum::<f64>() / n;
    let min_gap = stochastic
        .iter()
        .zip(&clairvoyant)
        .fold(f64::INFINITY, |g, (s, c)| g.min(s - c));
    Ok(PairedComparison {
        mean_gap: mean_stochastic - mean_clairvoyant,
        stochastic,
        clairvoyant,
        mean_stochastic,
        mean_clairvoyant,
        min_gap,
        solar_clamped,
    })
}
