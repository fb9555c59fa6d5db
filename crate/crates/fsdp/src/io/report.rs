use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::create_parent;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GridSettings {
    pub energy_points: usize,
    pub input_points: usize,
    pub peak_grid: String,
    pub peak_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Baselines {
    pub idle_total_cost: f64,
    pub greedy_total_cost: f64,
}

/// Summary of a deterministic solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScheduleReport {
    pub energy_cost: f64,
    pub demand_charge: f64,
    pub total_cost: f64,
    pub peak_on_peak_demand: f64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baselines: Option<Baselines>,
    pub grid: GridSettings,
    pub seed: u64,
    pub mode: String,
}

impl ScheduleReport {
    pub fn check(&self) -> std::result::Result<(), String> {
        let sum = self.energy_cost + self.demand_charge;
        if (self.total_cost - sum).abs() > 1e-9 * (1.0 + sum.abs()) {
            return Err(format!(
                "totalCost {} differs from energyCost + demandCharge = {sum}",
                self.total_cost
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NoiseSettings {
    pub w_points: usize,
    pub w_range: f64,
    pub nodes_per_dim: usize,
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RolloutSummary {
    pub paths: usize,
    pub mean_realized_cost: f64,
    pub mean_clairvoyant_cost: f64,
    pub mean_gap: f64,
    pub min_gap: f64,
    pub solar_clamped: usize,
}

/// Summary of a stochastic solve and its simulated rollouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StochasticReport {
    pub expected_cost: f64,
    pub states: usize,
    pub quadrature_nodes: usize,
    pub clamped_successors: u64,
    /// Battery power chosen at step 0 from the initial state, kW.
    pub first_input: f64,
    pub rollout: RolloutSummary,
    pub grid: GridSettings,
    pub noise: NoiseSettings,
    pub seed: u64,
    pub mode: String,
}

/// Printed by `fit-solar` alongside the model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FitReport {
    pub days: usize,
    pub steps: usize,
    pub variables: usize,
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, None, e.to_string()))?;
    text.push('\n');
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, Some(e.line() as u64), e.to_string()))
}

impl ScheduleReport {
    /// Validates the cost identity, then writes.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.check().map_err(|m| Error::format(path.as_ref(), None, m))?;
        write_json(path, self)
    }
}
