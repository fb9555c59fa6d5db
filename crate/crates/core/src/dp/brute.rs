use alloc::vec;
use alloc::vec::Vec;

use super::problem::{FiniteHorizonProblem, Trajectory};
use crate::{Error, Result};

/// Default limit on `|U|^(T - t0)` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

fn check_cap(problem: &FiniteHorizonProblem, cap: Option<u64>) -> Result<()> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let count = (problem.input_grid().len() as u128)
        .checked_pow(problem.stages() as u32)
        .unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(())
}

/// Depth-first walk over every feasible input sequence in lexicographic
/// order of input ids.
fn for_each_feasible(
    problem: &FiniteHorizonProblem,
    cap: Option<u64>,
    mut visit: impl FnMut(&[usize], &[usize]) -> Result<()>,
) -> Result<()> {
    check_cap(problem, cap)?;
    let n = problem.stages();
    let nu = problem.input_grid().len();
    let mut buf = vec![0.0; problem.state_grid().dim()];
    let mut ids = Vec::with_capacity(n);
    let mut path = vec![problem.initial_id()];
    // next input to try at each depth
    let mut next = vec![0usize; n + 1];
    loop {
        let depth = ids.len();
        if depth == n {
            visit(&ids, &path)?;
        }
        if depth == n || next[depth] == nu {
            if depth == 0 {
                return Ok(());
            }
            ids.pop();
            path.pop();
            continue;
        }
        let u = next[depth];
        next[depth] += 1;
        if let Some(s) = problem.successor(path[depth], u, problem.t0() + depth, &mut buf)? {
            ids.push(u);
            path.push(s.id);
            next[depth + 1] = 0;
        }
    }
}

/// Every feasible trajectory, each evaluated with the problem's objective.
pub fn feasible_trajectories(problem: &FiniteHorizonProblem, cap: Option<u64>) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for_each_feasible(problem, cap, |ids, _| {
        out.push(
            problem
                .simulate(ids)?
                .ok_or(Error::Infeasible { stage: problem.t0() })?,
        );
        Ok(())
    })?;
    Ok(out)
}

/// Exhaustive minimization over all feasible input sequences. Ties go to the
/// lexicographically smallest input-id sequence.
pub fn brute_force_solve(problem: &FiniteHorizonProblem, cap: Option<u64>) -> Result<Trajectory> {
    let grid = problem.state_grid();
    let inputs = problem.input_grid();
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for_each_feasible(problem, cap, |ids, path| {
        let us: Vec<&[f64]> = ids.iter().map(|&u| inputs.point(u)).collect();
        let xs: Vec<&[f64]> = path.iter().map(|&x| grid.point(x)).collect();
        let value = problem.evaluate(&us, &xs)?;
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, ids.to_vec(), path.to_vec()));
        }
        Ok(())
    })?;
    let (value, ids, path) = best.ok_or(Error::Infeasible { stage: problem.t0() })?;
    Ok(Trajectory {
        t0: problem.t0(),
        inputs: ids.iter().map(|&u| inputs.point(u).to_vec()).collect(),
        states: path.iter().map(|&x| grid.point(x).to_vec()).collect(),
        input_ids: ids,
        objective_value: value,
    })
}

/// A tail of an optimal trajectory that is strictly worse than the optimum
/// of the tail problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub stage: usize,
    pub tail_cost: f64,
    pub optimal_cost: f64,
    pub tail_inputs: Vec<Vec<f64>>,
    pub optimal_inputs: Vec<Vec<f64>>,
}

/// Solves the problem by enumeration, then checks for every `t0 < s < T`
/// that the tail of the optimum from `x*(s)` is optimal for the problem
/// restarted at `(s, x*(s))`.
pub fn check_principle_of_optimality(problem: &FiniteHorizonProblem, cap: Option<u64>) -> Result<Vec<Violation>> {
    let best = brute_force_solve(problem, cap)?;
    let mut violations = Vec::new();
    for s in problem.t0() + 1..problem.horizon() {
        let k = s - problem.t0();
        let sub = problem.restart(s, &best.states[k])?;
        let tail_cost = sub.evaluate(&best.inputs[k..], &best.states[k..])?;
        let tail_best = brute_force_solve(&sub, cap)?;
        let tol = 1e-12 * (1.0 + tail_best.objective_value.abs());
        if tail_cost > tail_best.objective_value + tol {
            violations.push(Violation {
                stage: s,
                tail_cost,
                optimal_cost: tail_best.objective_value,
                tail_inputs: best.inputs[k..].to_vec(),
                optimal_inputs: tail_best.inputs,
            });
        }
    }
    Ok(violations)
}
