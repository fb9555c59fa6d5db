//! Battery scheduling under time-of-use energy prices and an on-peak demand
//! charge.
//!
//! Units: power in kW, energy in kWh, time in hours, prices in $/kWh
//! (energy) and $/kW (demand). The input `u` is the battery power, positive
//! when charging; it adds to the grid draw `q = load - solar + u`.
//!
//! The daily cost is `Σ p_k q(k) Δt + p_d max(0, max_{on-peak} q(k))`. The
//! first part is additive, the second a running maximum, so the problem is
//! solved by augmenting the state with the running peak `m` only.

use alloc::vec;
use alloc::vec::Vec;

use crate::augment::{augment_hybrid, AggregateGrid, AugmentedProblem};
use crate::dp::{AdditiveObjective, Axis, FiniteHorizonProblem, GridMode, InputGrid, StateGrid, Trajectory};
use crate::objective::{ForwardSeparableObjective, SupObjective};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryParams {
    /// Per-step retention factor (1 = no self-discharge).
    pub alpha: f64,
    /// Charge efficiency.
    pub eta: f64,
    /// Maximum discharge power, kW (non-positive).
    pub u_min: f64,
    /// Maximum charge power, kW (non-negative).
    pub u_max: f64,
    /// Capacity bounds, kWh.
    pub e_min: f64,
    pub e_max: f64,
    /// Step length, hours.
    pub dt: f64,
}

impl BatteryParams {
    /// A 4 kW / 8 kWh home battery at half-hour steps.
    pub fn reference() -> Self {
        Self {
            alpha: 0.999791667,
            eta: 0.92,
            u_min: -4.0,
            u_max: 4.0,
            e_min: 0.0,
            e_max: 8.0,
            dt: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        let finite = [
            self.alpha, self.eta, self.u_min, self.u_max, self.e_min, self.e_max, self.dt,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("battery parameters must be finite");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(self.u_min <= 0.0 && self.u_max >= 0.0) {
            return bad("u_min <= 0 <= u_max is required");
        }
        if self.e_min > self.e_max {
            return bad("e_min must not exceed e_max");
        }
        if self.dt <= 0.0 {
            return bad("dt must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricingPlan {
    /// On-peak energy price, $/kWh.
    pub p_on: f64,
    /// Off-peak energy price, $/kWh.
    pub p_off: f64,
    /// Demand price, $/kW.
    pub p_d: f64,
    /// On-peak window `t_on <= k < t_off`, in steps.
    pub t_on: usize,
    pub t_off: usize,
    /// Steps per day.
    pub steps: usize,
}

impl PricingPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_on < self.t_off && self.t_off <= self.steps) {
            return Err(Error::InvalidParameter("0 <= t_on < t_off <= steps is required".into()));
        }
        if [self.p_on, self.p_off, self.p_d]
            .iter()
            .any(|p| !(p.is_finite() && *p >= 0.0))
        {
            return Err(Error::InvalidParameter("prices must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn is_on_peak(&self, k: usize) -> bool {
        (self.t_on..self.t_off).contains(&k)
    }

    pub fn price(&self, k: usize) -> f64 {
        if self.is_on_peak(k) {
            self.p_on
        } else {
            self.p_off
        }
    }
}

/// Appliance load and solar generation per step, kW.
#[derive(Clone, Debug, PartialEq)]
pub struct DayProfile {
    pub load: Vec<f64>,
    pub solar: Vec<f64>,
}

impl DayProfile {
    pub fn validate(&self, steps: usize) -> Result<()> {
        for (name, s) in [("load", &self.load), ("solar", &self.solar)] {
            if s.len() != steps {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{name} has {} steps, expected {steps}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("{name} has non-finite values")));
            }
        }
        if self.solar.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("solar must be non-negative".into()));
        }
        Ok(())
    }
}

/// Discretization of the running on-peak demand term `p_d q`.
#[derive(Clone, Debug, PartialEq)]
pub enum PeakGrid {
    /// Uniform points over the attainable range.
    Uniform(usize),
    /// Every attainable on-peak term plus zero. Running maxima stay on this
    /// grid, so the augmented solve is exact on the energy/input grids.
    Exact,
    /// A caller-supplied axis.
    Axis(Axis),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResolution {
    pub energy_points: usize,
    pub input_points: usize,
    pub peak: PeakGrid,
}

impl Default for GridResolution {
    fn default() -> Self {
        Self {
            energy_points: 81,
            input_points: 17,
            peak: PeakGrid::Uniform(65),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BatteryOptions {
    pub grids: GridResolution,
    /// Bill exported energy at zero instead of crediting it.
    pub clamp_export: bool,
}

/// Everything needed to pose one day of scheduling.
#[derive(Clone, Debug, PartialEq)]
pub struct BatteryInstance {
    pub params: BatteryParams,
    pub plan: PricingPlan,
    pub profile: DayProfile,
    /// Initial stored energy, kWh.
    pub e0: f64,
    pub options: BatteryOptions,
}

/// `α (e + η u Δt)`. Constraint checks are left to the caller.
pub fn battery_step(params: &BatteryParams, e: f64, u: f64) -> f64 {
    params.alpha * (e + params.eta * u * params.dt)
}

/// `q(k) = load(k) - solar(k) + u`, kW.
pub fn grid_power(profile: &DayProfile, u: f64, k: usize) -> Result<f64> {
    match (profile.load.get(k), profile.solar.get(k)) {
        (Some(l), Some(s)) => Ok(l - s + u),
        _ => Err(Error::StageOutOfRange {
            stage: k,
            t0: 0,
            horizon: profile.load.len().min(profile.solar.len()),
        }),
    }
}

#[inline]
pub(crate) fn energy_term(plan: &PricingPlan, dt: f64, q: f64, k: usize, clamp_export: bool) -> f64 {
    let billed = if clamp_export { q.max(0.0) } else { q };
    plan.price(k) * billed * dt
}

#[inline]
pub(crate) fn demand_term(plan: &PricingPlan, q: f64, k: usize) -> f64 {
    if plan.is_on_peak(k) {
        plan.p_d * q
    } else {
        0.0
    }
}

/// Schedule, state trajectory and the cost breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleResult {
    /// Battery power per step, kW.
    pub inputs: Vec<f64>,
    /// Stored energy at the start of each step and at the end of the day, kWh.
    pub energy: Vec<f64>,
    /// Grid power per step, kW.
    pub grid_power: Vec<f64>,
    pub on_peak: Vec<bool>,
    pub energy_cost: f64,
    /// `p_d max(0, peak_on_peak_demand)`.
    pub demand_charge: f64,
    pub total_cost: f64,
    /// Largest on-peak grid power, kW.
    pub peak_on_peak_demand: f64,
}

impl BatteryInstance {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.plan.validate()?;
        self.profile.validate(self.plan.steps)?;
        if !(self.e0 >= self.params.e_min && self.e0 <= self.params.e_max) {
            return Err(Error::InvalidParameter("e0 must lie in [e_min, e_max]".into()));
        }
        let g = &self.options.grids;
        if g.energy_points == 0 || g.input_points == 0 {
            return Err(Error::InvalidParameter("grid resolutions must be positive".into()));
        }
        Ok(())
    }

    pub fn energy_axis(&self) -> Result<Axis> {
        Axis::uniform(self.params.e_min, self.params.e_max, self.options.grids.energy_points)
    }

    pub fn input_grid(&self) -> Result<InputGrid> {
        InputGrid::uniform(self.params.u_min, self.params.u_max, self.options.grids.input_points)
    }

    /// Smallest and largest attainable on-peak demand terms, including 0.
    pub fn peak_bounds(&self) -> (f64, f64) {
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for k in self.plan.t_on..self.plan.t_off {
            let base = self.profile.load[k] - self.profile.solar[k];
            lo = lo.min(demand_term(&self.plan, base + self.params.u_min, k));
            hi = hi.max(demand_term(&self.plan, base + self.params.u_max, k));
        }
        (lo, hi)
    }

    pub fn peak_axis(&self) -> Result<Axis> {
        match &self.options.grids.peak {
            PeakGrid::Uniform(n) => {
                let (lo, hi) = self.peak_bounds();
                Axis::uniform(lo, hi, *n)
            }
            PeakGrid::Axis(a) => Ok(a.clone()),
            PeakGrid::Exact => {
                let inputs = self.input_grid()?;
                let mut values = vec![0.0];
                for k in self.plan.t_on..self.plan.t_off {
                    for u in inputs.iter() {
                        values.push(demand_term(&self.plan, grid_power(&self.profile, u[0], k)?, k));
                    }
                }
                Axis::new(dedup_sorted(values))
            }
        }
    }
}

pub(crate) fn dedup_sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * (1.0 + scale);
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        if out.last().is_none_or(|&l| v - l > 2.0 * tol) {
            out.push(v);
        }
    }
    out
}

/// The forward-separable problem over stored energy: TOU energy cost as an
/// additive part plus the on-peak running maximum of `p_d q`.
pub fn build_problem(instance: &BatteryInstance) -> Result<FiniteHorizonProblem> {
    instance.validate()?;
    let params = instance.params.clone();
    let dynamics_params = params.clone();
    let (plan_c, plan_d) = (instance.plan.clone(), instance.plan.clone());
    let (prof_c, prof_d) = (instance.profile.clone(), instance.profile.clone());
    let clamp = instance.options.clamp_export;
    let dt = params.dt;
    let energy = ForwardSeparableObjective::from_additive(AdditiveObjective::new(
        move |_, u, k| energy_term(&plan_c, dt, prof_c.load[k] - prof_c.solar[k] + u[0], k, clamp),
        |_| 0.0,
    ));
    let demand = ForwardSeparableObjective::from_sup(SupObjective::new(
        move |_, u, k| demand_term(&plan_d, prof_d.load[k] - prof_d.solar[k] + u[0], k),
        |_| 0.0,
    ));
    FiniteHorizonProblem::builder(0, instance.plan.steps)
        .states(StateGrid::new(vec![instance.energy_axis()?])?)
        .inputs(instance.input_grid()?)
        .dynamics(move |x, u, _, out| out[0] = battery_step(&dynamics_params, x[0], u[0]))
        .objective(ForwardSeparableObjective::combine_sum(energy, demand))
        .initial_state(vec![instance.e0])
        .mode(GridMode::Project)
        .build()
}

/// The product problem over `(e, m)`: energy cost as stage cost, running
/// peak `m` as augmented state.
pub fn augmented_problem(instance: &BatteryInstance) -> Result<AugmentedProblem> {
    let base = build_problem(instance)?;
    augment_hybrid(&base, AggregateGrid::Axes(vec![instance.peak_axis()?]))
}

/// Optimal schedule via the augmented backward induction. The reported
/// costs are recomputed from the recovered trajectory.
pub fn solve_deterministic(instance: &BatteryInstance) -> Result<ScheduleResult> {
    let solution = augmented_problem(instance)?.solve()?;
    schedule_from_trajectory(instance, &solution.recovered)
}

pub fn schedule_from_trajectory(instance: &BatteryInstance, trajectory: &Trajectory) -> Result<ScheduleResult> {
    let inputs: Vec<f64> = trajectory.inputs.iter().map(|u| u[0]).collect();
    let energy: Vec<f64> = trajectory.states.iter().map(|x| x[0]).collect();
    evaluate_schedule(instance, &inputs, &energy)
}

/// Cost breakdown of a given schedule and its energy trajectory.
pub fn evaluate_schedule(instance: &BatteryInstance, inputs: &[f64], energy: &[f64]) -> Result<ScheduleResult> {
    let steps = instance.plan.steps;
    if inputs.len() != steps {
        return Err(Error::ShapeMismatch {
            expected: steps,
            found: inputs.len(),
        });
    }
    if energy.len() != steps + 1 {
        return Err(Error::ShapeMismatch {
            expected: steps + 1,
            found: energy.len(),
        });
    }
    let plan = &instance.plan;
    let grid_power: Vec<f64> = inputs
        .iter()
        .enumerate()
        .map(|(k, &u)| grid_power(&instance.profile, u, k))
        .collect::<Result<_>>()?;
    let energy_cost: f64 = grid_power
        .iter()
        .enumerate()
        .map(|(k, &q)| energy_term(plan, instance.params.dt, q, k, instance.options.clamp_export))
        .sum();
    let demand_charge = grid_power
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (k, &q)| m.max(demand_term(plan, q, k)));
    let peak_on_peak_demand = grid_power[plan.t_on..plan.t_off]
        .iter()
        .fold(f64::NEG_INFINITY, |m, &q| m.max(q));
    Ok(ScheduleResult {
        inputs: inputs.to_vec(),
        energy: energy.to_vec(),
        on_peak: (0..steps).map(|k| plan.is_on_peak(k)).collect(),
        grid_power,
        energy_cost,
        demand_charge,
        total_cost: energy_cost + demand_charge,
        peak_on_peak_demand,
    })
}

/// Runs a stage-wise rule on the base problem's grids; the rule picks among
/// the feasible input ids at each step.
fn run_rule(
    instance: &BatteryInstance,
    mut rule: impl FnMut(usize, &[usize], &InputGrid) -> usize,
) -> Result<ScheduleResult> {
    let problem = build_problem(instance)?;
    let mut state = problem.initial_id();
    let mut ids = Vec::with_capacity(problem.stages());
    let mut buf = [0.0];
    for k in 0..problem.stages() {
        let feasible: Vec<usize> = (0..problem.input_grid().len())
            .filter(|&u| matches!(problem.successor(state, u, k, &mut buf), Ok(Some(_))))
            .collect();
        if feasible.is_empty() {
            return Err(Error::Infeasible { stage: k });
        }
        let u = rule(k, &feasible, problem.input_grid());
        ids.push(u);
        state = problem
            .successor(state, u, k, &mut buf)?
            .ok_or(Error::Infeasible { stage: k })?
            .id;
    }
    let traj = problem.simulate(&ids)?.ok_or(Error::Infeasible { stage: 0 })?;
    schedule_from_trajectory(instance, &traj)
}

fn closest(feasible: &[usize], inputs: &InputGrid, target: f64) -> usize {
    let mut best = feasible[0];
    for &u in feasible {
        if (inputs.point(u)[0] - target).abs() < (inputs.point(best)[0] - target).abs() {
            best = u;
        }
    }
    best
}

/// The battery left idle (the feasible input closest to zero each step).
pub fn idle_schedule(instance: &BatteryInstance) -> Result<ScheduleResult> {
    run_rule(instance, |_, feasible, inputs| closest(feasible, inputs, 0.0))
}

/// Charge as fast as possible before the on-peak window, discharge towards
/// zero grid draw during it, idle afterwards.
pub fn greedy_peak_shaving(instance: &BatteryInstance) -> Result<ScheduleResult> {
    let plan = instance.plan.clone();
    let profile = instance.profile.clone();
    run_rule(instance, move |k, feasible, inputs| {
        if k < plan.t_on {
            *feasible.last().expect("nonempty")
        } else if plan.is_on_peak(k) {
            closest(feasible, inputs, profile.solar[k] - profile.load[k])
        } else {
            closest(feasible, inputs, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::brute_force_solve;

    fn flat_plan(steps: usize, t_on: usize, t_off: usize) -> PricingPlan {
        PricingPlan {
            p_on: 0.2,
            p_off: 0.1,
            p_d: 3.0,
            t_on,
            t_off,
            steps,
        }
    }

    #[test]
    fn idle_lossless_step_keeps_energy() {
        let p = BatteryParams {
            alpha: 1.0,
            eta: 1.0,
            ..BatteryParams::reference()
        };
        assert_eq!(battery_step(&p, 3.7, 0.0), 3.7);
    }

    #[test]
    fn reference_step_arithmetic() {
        let p = BatteryParams::reference();
        // same constants in W / Wh
        let expected = 0.999791667 * (4000.0 + 0.92 * 2000.0 * 0.5);
        assert_eq!(battery_step(&p, 4000.0, 2000.0), expected);
        assert!((battery_step(&p, 4000.0, 2000.0) - 4918.975).abs() < 1e-3);
        // the step itself does not enforce capacity
        assert!(battery_step(&p, p.e_min, p.u_min) < p.e_min);
    }

    #[test]
    fn grid_power_is_linear() {
        let prof = DayProfile {
            load: vec![2.0, 1.0],
            solar: vec![0.5, 1.0],
        };
        assert_eq!(grid_power(&prof, 1.0, 0).unwrap(), 2.5);
        assert_eq!(grid_power(&prof, 0.0, 1).unwrap(), 0.0);
        assert!(matches!(grid_power(&prof, 0.0, 2), Err(Error::StageOutOfRange { .. })));
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut p = BatteryParams::reference();
        p.eta = 1.5;
        assert!(p.validate().is_err());
        let mut p = BatteryParams::reference();
        p.u_min = 1.0;
        assert!(p.validate().is_err());
        assert!(flat_plan(4, 3, 2).validate().is_err());
        let bad = DayProfile {
            load: vec![1.0],
            solar: vec![-1.0],
        };
        assert!(bad.validate(1).is_err());
        assert!(bad.validate(2).is_err());
    }

    #[test]
    fn disabled_battery_pays_load() {
        let steps = 8;
        let load = 1.5;
        let inst = BatteryInstance {
            params: BatteryParams {
                u_min: 0.0,
                u_max: 0.0,
                ..BatteryParams::reference()
            },
            plan: flat_plan(steps, 2, 5),
            profile: DayProfile {
                load: vec![load; steps],
                solar: vec![0.0; steps],
            },
            e0: 4.0,
            options: BatteryOptions::default(),
        };
        let r = solve_deterministic(&inst).unwrap();
        let energy: f64 = (0..steps).map(|k| inst.plan.price(k) * load * 0.5).sum();
        assert!((r.energy_cost - energy).abs() < 1e-12);
        assert!((r.total_cost - (energy + 3.0 * load)).abs() < 1e-12);
        assert_eq!(r.peak_on_peak_demand, load);
    }

    fn tiny(p_d: f64) -> BatteryInstance {
        BatteryInstance {
            params: BatteryParams::reference(),
            plan: PricingPlan {
                p_d,
                ..flat_plan(6, 2, 5)
            },
            profile: DayProfile {
                load: vec![0.8, 1.0, 3.0, 4.5, 2.0, 1.0],
                solar: vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.0],
            },
            e0: 4.0,
            options: BatteryOptions {
                grids: GridResolution {
                    energy_points: 3,
                    input_points: 3,
                    peak: PeakGrid::Exact,
                },
                clamp_export: false,
            },
        }
    }

    #[test]
    fn tiny_instance_matches_enumeration() {
        for p_d in [0.0, 1.0, 3.364] {
            let inst = tiny(p_d);
            let brute = brute_force_solve(&build_problem(&inst).unwrap(), None).unwrap();
            let sol = augmented_problem(&inst).unwrap().solve().unwrap();
            assert_eq!(sol.value, brute.objective_value);
            let r = solve_deterministic(&inst).unwrap();
            assert!((r.total_cost - brute.objective_value).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_demand_price_matches_plain_additive_solve() {
        let inst = tiny(0.0);
        let hybrid = augmented_problem(&inst).unwrap().solve().unwrap();
        let params = inst.params.clone();
        let (plan, prof) = (inst.plan.clone(), inst.profile.clone());
        let plain = FiniteHorizonProblem::builder(0, 6)
            .states(StateGrid::new(vec![inst.energy_axis().unwrap()]).unwrap())
            .inputs(inst.input_grid().unwrap())
            .dynamics(move |x, u, _, o| o[0] = battery_step(&params, x[0], u[0]))
            .objective(AdditiveObjective::new(
                move |_, u, k| energy_term(&plan, 0.5, prof.load[k] - prof.solar[k] + u[0], k, false),
                |_| 0.0,
            ))
            .initial_state(vec![inst.e0])
            .build()
            .unwrap();
        let (v, _) = crate::dp::bellman_backward(&plain).unwrap();
        assert_eq!(hybrid.value, v.get(0, plain.initial_id()));
    }

    #[test]
    fn zero_profile_idle_costs_nothing() {
        let mut inst = tiny(3.0);
        inst.profile = DayProfile {
            load: vec![0.0; 6],
            solar: vec![0.0; 6],
        };
        let idle = idle_schedule(&inst).unwrap();
        assert_eq!(idle.total_cost, 0.0);
        assert!(solve_deterministic(&inst).unwrap().total_cost <= 0.0);
    }

    #[test]
    fn schedule_cost_decomposes() {
        let inst = tiny(3.364);
        let r = solve_deterministic(&inst).unwrap();
        assert!((r.total_cost - (r.energy_cost + r.demand_charge)).abs() < 1e-9);
        assert_eq!(r.demand_charge, 3.364 * r.peak_on_peak_demand.max(0.0));
        for (k, w) in r.energy.windows(2).enumerate() {
            assert!(w[0] >= inst.params.e_min && w[0] <= inst.params.e_max);
            let next = battery_step(&inst.params, w[0], r.inputs[k]);
            let axis = inst.energy_axis().unwrap();
            assert_eq!(w[1], axis.values()[axis.nearest(next)]);
        }
    }

    #[test]
    fn exact_peak_axis_contains_zero_and_terms() {
        let inst = tiny(2.0);
        let axis = inst.peak_axis().unwrap();
        assert!(axis.values().contains(&0.0));
        assert_eq!(axis.upper(), inst.peak_bounds().1);
        assert_eq!(axis.lower(), inst.peak_bounds().0);
    }
}
