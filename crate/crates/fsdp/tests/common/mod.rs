#![allow(dead_code)]

use std::path::Path;

use fsdp::config::RunConfig;
use fsdp::io::{write_profile, write_timeseries, Column, SeriesTable};
use fsdp_core::battery::DayProfile;
use fsdp_core::nalgebra::DMatrix;
use fsdp_core::stochastic::{GaussMarkov, GaussMarkovModel, NormalizationProfile};

pub const REFERENCE: &str = include_str!("../../../../configs/reference.toml");

pub fn reference() -> RunConfig {
    RunConfig::from_toml(REFERENCE).unwrap()
}

fn bump(k: f64, centre: f64, width: f64) -> f64 {
    (-((k - centre) / width).powi(2)).exp()
}

pub fn clear_sky(k: usize) -> f64 {
    let x = std::f64::consts::PI * (k as f64 - 12.0) / 24.0;
    if (13..36).contains(&k) {
        3.5 * x.sin()
    } else {
        0.0
    }
}

/// Morning and evening load peaks, midday solar.
pub fn synthetic_day() -> DayProfile {
    DayProfile {
        load: (0..48)
            .map(|k| {
                let k = k as f64;
                0.6 + 0.4 * bump(k, 15.0, 3.0) + 1.8 * bump(k, 38.0, 4.0)
            })
            .collect(),
        solar: (0..48).map(clear_sky).collect(),
    }
}

/// One weather variable, solar standard deviation proportional to the mean.
pub fn demo_model() -> GaussMarkovModel {
    let mu: Vec<f64> = (0..48).map(clear_sky).collect();
    let sigma = mu.iter().map(|m| 0.35 * m).collect();
    GaussMarkovModel::new(
        GaussMarkov::new(DMatrix::from_element(1, 1, 0.8), DMatrix::from_element(1, 1, 0.6)).unwrap(),
        NormalizationProfile::new(vec![mu], vec![sigma], Some(1e-6)).unwrap(),
    )
    .unwrap()
}

/// Days of solar and temperature drawn from a two-variable process.
pub fn weather_ensemble(days: usize, seed: u64) -> SeriesTable {
    let a = DMatrix::from_row_slice(2, 2, &[0.75, 0.1, 0.05, 0.6]);
    let b = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.2, 0.7]);
    let mu = vec![
        (0..48).map(clear_sky).collect(),
        (0..48).map(|k| 18.0 + 6.0 * bump(k as f64, 30.0, 8.0)).collect(),
    ];
    let sigma = vec![(0..48).map(|k| 0.3 * clear_sky(k)).collect(), vec![1.5; 48]];
    let profile = NormalizationProfile::new(mu, sigma, Some(1e-6)).unwrap();
    let process = GaussMarkov::new(a, b).unwrap();
    SeriesTable {
        columns: vec![
            Column {
                name: "solar".into(),
                unit: "kW".into(),
            },
            Column {
                name: "temp".into(),
                unit: "degC".into(),
            },
        ],
        days: (0..days)
            .map(|d| profile.denormalize(&process.sample(48, seed, d as u64)).unwrap())
            .collect(),
    }
}

pub fn write_inputs(dir: &Path) {
    std::fs::write(dir.join("reference.toml"), REFERENCE).unwrap();
    write_profile(dir.join("day.csv"), &synthetic_day()).unwrap();
    write_timeseries(dir.join("weather.csv"), &weather_ensemble(40, 11)).unwrap();
}

pub struct Run {
    pub code: i32,
    pub out: String,
    pub err: String,
}

pub fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fsdp").chain(args.iter().copied());
    let code = fsdp::cli::run(argv, &mut out, &mut err, false);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
