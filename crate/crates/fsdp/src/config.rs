//! Run configuration: a flat TOML table.
//!
//! Physical constants have no defaults. Keys carrying a physical unit take
//! it from their suffix (`u_max_kw` or `u_max_w`, `e_max_kwh` or
//! `e_max_wh`); exactly one form must be given. Prices are taken verbatim
//! in $/kWh (`p_on`, `p_off`) and $/kW (`p_d`). Step indices `t_on`,
//! `t_off` and `steps` count steps of `dt_h` hours.
//!
//! Grid, quadrature and run settings default as listed in [`RunConfig`].
//! Command-line overrides (`key=value`, value in TOML syntax) replace file
//! entries before validation.

use std::fs;
use std::path::Path;

use fsdp_core::battery::{
    BatteryInstance, BatteryOptions, BatteryParams, DayProfile, GridResolution, PeakGrid, PricingPlan,
};
use fsdp_core::stochastic::{GaussMarkovModel, NoiseGrid, StochasticBatteryInstance, DEFAULT_MAX_STATES};
use serde::Deserialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Deterministic,
    Stochastic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Deterministic => "deterministic",
            Mode::Stochastic => "stochastic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PeakKind {
    Uniform,
    Exact,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alpha: f64,
    eta: f64,
    u_min_kw: Option<f64>,
    u_min_w: Option<f64>,
    u_max_kw: Option<f64>,
    u_max_w: Option<f64>,
    e_min_kwh: Option<f64>,
    e_min_wh: Option<f64>,
    e_max_kwh: Option<f64>,
    e_max_wh: Option<f64>,
    e0_kwh: Option<f64>,
    e0_wh: Option<f64>,
    dt_h: f64,
    p_on: f64,
    p_off: f64,
    p_d: f64,
    t_on: usize,
    t_off: usize,
    steps: usize,

    e_points: Option<usize>,
    u_points: Option<usize>,
    m_points: Option<usize>,
    peak_grid: Option<PeakKind>,
    w_points: Option<usize>,
    w_range: Option<f64>,
    nodes_per_dim: Option<usize>,
    max_states: Option<usize>,
    paths: Option<usize>,
    seed: Option<u64>,
    mode: Option<Mode>,
    strict_noise: Option<bool>,
    clamp_export: Option<bool>,
}

/// A validated run configuration in kW / kWh.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: BatteryParams,
    pub plan: PricingPlan,
    pub e0: f64,
    /// `e_points` (81), `u_points` (17), `peak_grid` ("uniform" with
    /// `m_points` = 65, or "exact").
    pub grids: GridResolution,
    /// `w_points` (9), `w_range` (3), `nodes_per_dim` (5), `strict_noise` (false).
    pub noise: NoiseGrid,
    /// `max_states` (2 000 000).
    pub max_states: usize,
    /// `paths` (100): simulated paths for the stochastic rollout report.
    pub paths: usize,
    /// `seed` (0).
    pub seed: u64,
    /// `mode` ("deterministic").
    pub mode: Mode,
    /// `clamp_export` (false).
    pub clamp_export: bool,
}

fn pick(name: &str, canonical: Option<f64>, milli: Option<f64>, suffix: (&str, &str)) -> Result<f64> {
    match (canonical, milli) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(v / 1000.0),
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "{name} is given as both {name}_{} and {name}_{}",
            suffix.0, suffix.1
        ))),
        (None, None) => Err(Error::Config(format!(
            "missing {name} (as {name}_{} or {name}_{})",
            suffix.0, suffix.1
        ))),
    }
}

/// Parses `key=value`; the value is read as a TOML value, falling back to a
/// bare string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{s}` has an empty key")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides`, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::format(p, None, e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = parse_override(o)?;
            table.insert(k, v);
        }
        Self::from_table(table)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_table(text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let params = BatteryParams {
            alpha: raw.alpha,
            eta: raw.eta,
            u_min: pick("u_min", raw.u_min_kw, raw.u_min_w, ("kw", "w"))?,
            u_max: pick("u_max", raw.u_max_kw, raw.u_max_w, ("kw", "w"))?,
            e_min: pick("e_min", raw.e_min_kwh, raw.e_min_wh, ("kwh", "wh"))?,
            e_max: pick("e_max", raw.e_max_kwh, raw.e_max_wh, ("kwh", "wh"))?,
            dt: raw.dt_h,
        };
        params.validate()?;
        let plan = PricingPlan {
            p_on: raw.p_on,
            p_off: raw.p_off,
            p_d: raw.p_d,
            t_on: raw.t_on,
            t_off: raw.t_off,
            steps: raw.steps,
        };
        plan.validate()?;
        let e0 = pick("e0", raw.e0_kwh, raw.e0_wh, ("kwh", "wh"))?;
        if !(e0 >= params.e_min && e0 <= params.e_max) {
            return Err(Error::Config(format!("e0 = {e0} kWh lies outside [e_min, e_max]")));
        }
        let positive = |name: &str, v: Option<usize>, default: usize| match v {
            Some(0) => Err(Error::Config(format!("{name} must be positive"))),
            Some(n) => Ok(n),
            None => Ok(default),
        };
        let defaults = GridResolution::default();
        let m_points = positive("m_points", raw.m_points, 65)?;
        let grids = GridResolution {
            energy_points: positive("e_points", raw.e_points, defaults.energy_points)?,
            input_points: positive("u_points", raw.u_points, defaults.input_points)?,
            peak: match raw.peak_grid.unwrap_or(PeakKind::Uniform) {
                PeakKind::Uniform => PeakGrid::Uniform(m_points),
                PeakKind::Exact => PeakGrid::Exact,
            },
        };
        let nd = NoiseGrid::default();
        let noise = NoiseGrid {
            w_points: positive("w_points", raw.w_points, nd.w_points)?,
            w_range: raw.w_range.unwrap_or(nd.w_range),
            nodes_per_dim: positive("nodes_per_dim", raw.nodes_per_dim, nd.nodes_per_dim)?,
            strict: raw.strict_noise.unwrap_or(nd.strict),
        };
        if !(noise.w_range.is_finite() && noise.w_range > 0.0) {
            return Err(Error::Config("w_range must be positive".into()));
        }
        Ok(Self {
            params,
            plan,
            e0,
            grids,
            noise,
            max_states: positive("max_states", raw.max_states, DEFAULT_MAX_STATES)?,
            paths: positive("paths", raw.paths, 100)?,
            seed: raw.seed.unwrap_or(0),
            mode: raw.mode.unwrap_or(Mode::Deterministic),
            clamp_export: raw.clamp_export.unwrap_or(false),
        })
    }

    pub fn battery_instance(&self, profile: DayProfile) -> BatteryInstance {
        BatteryInstance {
            params: self.params.clone(),
            plan: self.plan.clone(),
            profile,
            e0: self.e0,
            options: BatteryOptions {
                grids: self.grids.clone(),
                clamp_export: self.clamp_export,
            },
        }
    }

    pub fn stochastic_instance(&self, load: Vec<f64>, model: GaussMarkovModel) -> StochasticBatteryInstance {
        StochasticBatteryInstance {
            params: self.params.clone(),
            plan: self.plan.clone(),
            load,
            model,
            e0: self.e0,
            grids: self.grids.clone(),
            noise: self.noise.clone(),
            clamp_export: self.clamp_export,
            max_states: self.max_states,
        }
    }

    /// Short label of the peak grid for reports.
    pub fn peak_grid_label(&self) -> String {
        match &self.grids.peak {
            PeakGrid::Uniform(n) => format!("uniform:{n}"),
            PeakGrid::Exact => "exact".into(),
            PeakGrid::Axis(a) => format!("axis:{}", a.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE: &str = include_str!("../../../configs/reference.toml");

    #[test]
    fn reference_constants_load() {
        let c = RunConfig::from_toml(REFERENCE).unwrap();
        assert_eq!(c.params.alpha, 0.999791667);
        assert_eq!(c.params.eta, 0.92);
        assert_eq!((c.plan.t_on, c.plan.t_off, c.plan.steps), (27, 41, 48));
        assert_eq!(c.params.dt, 0.5);
        assert_eq!((c.params.u_min, c.params.u_max, c.params.e_max), (-4.0, 4.0, 8.0));
        assert_eq!(c.plan.p_on, 0.0633e-3);
        assert_eq!(c.plan.p_d, 3.364);
        assert_eq!(c.grids, GridResolution::default());
        assert_eq!(c.mode, Mode::Deterministic);
    }

    fn without(key: &str) -> String {
        REFERENCE
            .lines()
            .filter(|l| !l.starts_with(key))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn missing_and_invalid_constants() {
        let e = RunConfig::from_toml(&without("eta")).unwrap_err();
        assert!(e.to_string().contains("eta"), "{e}");
        let e = RunConfig::from_toml(&format!("{}\neta = 1.5", without("eta"))).unwrap_err();
        assert!(e.to_string().contains("eta"), "{e}");
        let e = RunConfig::from_toml(&without("u_max")).unwrap_err();
        assert!(e.to_string().contains("u_max"), "{e}");
        let e = RunConfig::from_toml(&format!("{REFERENCE}\nu_max_kw = 4.0")).unwrap_err();
        assert!(e.to_string().contains("both"), "{e}");
        let e = RunConfig::from_toml(&format!("{REFERENCE}\nbogus = 1")).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(RunConfig::from_toml(&format!("{REFERENCE}\ne_points = 0")).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, REFERENCE).unwrap();
        let c = RunConfig::load(
            Some(&path),
            &[
                "p_d=0".into(),
                "peak_grid=exact".into(),
                "e_points = 11".into(),
                "mode=\"stochastic\"".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.plan.p_d, 0.0);
        assert_eq!(c.grids.peak, PeakGrid::Exact);
        assert_eq!(c.grids.energy_points, 11);
        assert_eq!(c.mode, Mode::Stochastic);
        assert!(RunConfig::load(Some(&path), &["nonsense".into()]).is_err());
        assert!(RunConfig::load(Some(&path), &["unknown_key=3".into()]).is_err());
    }
}
