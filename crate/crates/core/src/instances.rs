//! Reference instances: the three-stage running-maximum counterexample and
//! seeded random forward-separable problems for oracle comparisons.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{augment, augment_hybrid, AggregateGrid};
use crate::dp::{
    brute_force_solve, check_principle_of_optimality, AdditiveObjective, FiniteHorizonProblem, GridMode, InputGrid,
    StateGrid,
};
use crate::objective::{ForwardSeparableObjective, SupObjective};
use crate::Result;

/// `min Σ c_t(u(t)) + max_k x(k)` with `x(t+1) = x(t) + u(t)`, `x(0) = 0`,
/// `0 <= x <= h`, `u in {-h, 0, h}`, `c_0 = -u`, `c_1 = u`, `c_2 = -u/2`.
///
/// The optimum is `(h, -h, h)` at `-1.5 h`, but its last input is not
/// optimal for the tail problem from `(2, 0)`.
pub fn counterexample(h: f64) -> FiniteHorizonProblem {
    let additive = ForwardSeparableObjective::from_additive(AdditiveObjective::new(
        |_, u, t| match t {
            0 => -u[0],
            1 => u[0],
            _ => -u[0] / 2.0,
        },
        |_| 0.0,
    ));
    let peak = ForwardSeparableObjective::from_sup(SupObjective::new(|x, _, _| x[0], |x| x[0]));
    FiniteHorizonProblem::builder(0, 3)
        .states(StateGrid::scalar(vec![0.0, h]).expect("h > 0"))
        .inputs(InputGrid::scalar(&[-h, 0.0, h]).expect("h > 0"))
        .dynamics(|x, u, _, out| out[0] = x[0] + u[0])
        .objective(ForwardSeparableObjective::combine_sum(additive, peak))
        .initial_state(vec![0.0])
        .mode(GridMode::Strict)
        .build()
        .expect("counterexample is well formed")
}

/// Objective families drawn by [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Additive,
    Sup,
    AdditivePlusSup,
    /// Two-component chain: running sum plus running minimum.
    SumPlusMin,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::Additive,
        ObjectiveKind::Sup,
        ObjectiveKind::AdditivePlusSup,
        ObjectiveKind::SumPlusMin,
    ];
}

/// Size limits for random instances.
#[derive(Clone, Copy, Debug)]
pub struct RandomInstanceLimits {
    pub max_states: usize,
    pub max_inputs: usize,
    pub max_stages: usize,
    /// Costs are integers in `[-cost_bound, cost_bound]`.
    pub cost_bound: i32,
}

impl Default for RandomInstanceLimits {
    fn default() -> Self {
        Self {
            max_states: 6,
            max_inputs: 4,
            max_stages: 6,
            cost_bound: 4,
        }
    }
}

struct Tables {
    nx: usize,
    nu: usize,
    /// successor index per (t, x, u); `-1` leaves X
    next: Vec<i64>,
    c: Vec<f64>,
    d: Vec<f64>,
    ct: Vec<f64>,
    dt: Vec<f64>,
}

impl Tables {
    fn at(&self, t: usize, x: &[f64], u: &[f64]) -> usize {
        (t * self.nx + x[0] as usize) * self.nu + u[0] as usize
    }
}

/// A random problem with integer states `0..nx`, integer inputs `0..nu`,
/// table-driven dynamics (some transitions leave X) and integer costs.
/// Every cell keeps at least one feasible input.
pub fn random_instance(rng: &mut impl Rng, kind: ObjectiveKind, limits: &RandomInstanceLimits) -> FiniteHorizonProblem {
    let nx = rng.random_range(1..=limits.max_states);
    let nu = rng.random_range(1..=limits.max_inputs);
    let stages = rng.random_range(1..=limits.max_stages);
    let b = limits.cost_bound;
    let cells = stages * nx * nu;
    let mut next: Vec<i64> = (0..cells)
        .map(|_| {
            if rng.random_bool(0.25) {
                -1
            } else {
                rng.random_range(0..nx as i64)
            }
        })
        .collect();
    for cell in 0..stages * nx {
        let row = &mut next[cell * nu..(cell + 1) * nu];
        if row.iter().all(|&s| s < 0) {
            row[rng.random_range(0..nu)] = rng.random_range(0..nx as i64);
        }
    }
    let mut ints = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-b..=b) as f64).collect() };
    let tables = Arc::new(Tables {
        nx,
        nu,
        next,
        c: ints(cells),
        d: ints(cells),
        ct: ints(nx),
        dt: ints(nx),
    });
    let x0 = rng.random_range(0..nx) as f64;

    let objective = {
        let (tc, tct) = (tables.clone(), tables.clone());
        let additive = ForwardSeparableObjective::from_additive(AdditiveObjective::new(
            move |x, u, t| tc.c[tc.at(t, x, u)],
            move |x| tct.ct[x[0] as usize],
        ));
        let (td, tdt) = (tables.clone(), tables.clone());
        let sup = ForwardSeparableObjective::from_sup(SupObjective::new(
            move |x, u, t| td.d[td.at(t, x, u)],
            move |x| tdt.dt[x[0] as usize],
        ));
        match kind {
            ObjectiveKind::Additive => additive,
            ObjectiveKind::Sup => sup,
            ObjectiveKind::AdditivePlusSup => ForwardSeparableObjective::combine_sum(additive, sup),
            ObjectiveKind::SumPlusMin => {
                let (t1, t2, t3) = (tables.clone(), tables.clone(), tables.clone());
                ForwardSeparableObjective::new(
                    2,
                    move |x, u, t, o| {
                        let i = t1.at(t, x, u);
                        o[0] = t1.c[i];
                        o[1] = t1.d[i];
                    },
                    move |x, u, a, t, o| {
                        let i = t2.at(t, x, u);
                        o[0] = a[0] + t2.c[i];
                        o[1] = a[1].min(t2.d[i]);
                    },
                    move |x, a| {
                        let i = x[0] as usize;
                        a[0] + t3.ct[i] + a[1].min(t3.dt[i])
                    },
                )
            }
        }
    };

    let td = tables.clone();
    FiniteHorizonProblem::builder(0, stages)
        .states(StateGrid::scalar((0..nx).map(|i| i as f64).collect()).expect("nonempty"))
        .inputs(InputGrid::scalar(&(0..nu).map(|i| i as f64).collect::<Vec<_>>()).expect("nonempty"))
        .dynamics(move |x, u, t, out| out[0] = td.next[td.at(t, x, u)] as f64)
        .objective(objective)
        .initial_state(vec![x0])
        .mode(GridMode::Strict)
        .build()
        .expect("random instance is well formed")
}

/// Outcome of one augmented-versus-enumeration comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleTrial {
    pub trial: usize,
    pub kind: ObjectiveKind,
    pub brute_force: f64,
    pub augmented: f64,
    pub recovered: f64,
    /// Principle-of-optimality violations found on the product problem.
    pub product_violations: usize,
    /// Hybrid augmentation value, for `AdditivePlusSup` instances.
    pub hybrid: Option<f64>,
}

impl OracleTrial {
    pub fn passed(&self) -> bool {
        self.augmented == self.brute_force
            && self.recovered == self.brute_force
            && self.product_violations == 0
            && self.hybrid.is_none_or(|h| (h - self.augmented).abs() <= 1e-9)
    }
}

/// Runs `trials` seeded random instances (objective kinds in rotation):
/// brute force on the base problem against backward induction on the fully
/// augmented problem with exact integer aggregate grids.
pub fn oracle_check(trials: usize, seed: u64) -> Result<Vec<OracleTrial>> {
    let limits = RandomInstanceLimits::default();
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let kind = ObjectiveKind::ALL[trial % ObjectiveKind::ALL.len()];
        let base = random_instance(&mut rng, kind, &limits);
        let brute = brute_force_solve(&base, None)?;
        let aug = augment(&base, AggregateGrid::AutoStep { step: 1.0 })?;
        let sol = aug.solve()?;
        let product_violations = check_principle_of_optimality(aug.product(), None)?.len();
        let hybrid = if kind == ObjectiveKind::AdditivePlusSup {
            Some(
                augment_hybrid(&base, AggregateGrid::AutoStep { step: 1.0 })?
                    .solve()?
                    .value,
            )
        } else {
            None
        };
        out.push(OracleTrial {
            trial,
            kind,
            brute_force: brute.objective_value,
            augmented: sol.value,
            recovered: sol.recovered.objective_value,
            product_violations,
            hybrid,
        });
    }
    Ok(out)
}
