use std::path::Path;

use fsdp_core::nalgebra::DMatrix;
use fsdp_core::stochastic::{FitDiagnostics, GaussMarkov, GaussMarkovModel, LagMatrices, NormalizationProfile};
use serde::{Deserialize, Serialize};

use super::report::{read_json, write_json};
use super::series::Column;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProfileFile {
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub sigma_floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiagnosticsFile {
    /// Absent when `M0` is exactly singular.
    pub condition_number: Option<f64>,
    pub ridge: f64,
    pub spectral_radius: f64,
    pub clamped_mass: f64,
    pub reconstruction_error: f64,
}

/// A fitted Gauss-Markov solar model. Variable 0 is solar power in kW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub variables: Vec<String>,
    pub units: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "M0")]
    pub m0: Vec<Vec<f64>>,
    #[serde(rename = "M1")]
    pub m1: Vec<Vec<f64>>,
    pub diagnostics: DiagnosticsFile,
    pub profile: ProfileFile,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], d: usize) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(format!("{name} must be {d}x{d}"));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn new(
        columns: &[Column],
        process: &GaussMarkov,
        lags: &LagMatrices,
        diagnostics: &FitDiagnostics,
        profile: &NormalizationProfile,
    ) -> Self {
        Self {
            variables: columns.iter().map(|c| c.name.clone()).collect(),
            units: columns.iter().map(|c| c.unit.clone()).collect(),
            a: rows(&process.a),
            b: rows(&process.b),
            m0: rows(&lags.m0),
            m1: rows(&lags.m1),
            diagnostics: DiagnosticsFile {
                condition_number: Some(diagnostics.condition_number).filter(|c| c.is_finite()),
                ridge: diagnostics.ridge,
                spectral_radius: diagnostics.spectral_radius,
                clamped_mass: diagnostics.clamped_mass,
                reconstruction_error: diagnostics.reconstruction_error,
            },
            profile: ProfileFile {
                mu: profile.mu.clone(),
                sigma: profile.sigma.clone(),
                sigma_floor: profile.sigma_floor,
            },
        }
    }

    pub fn model(&self) -> std::result::Result<GaussMarkovModel, String> {
        let d = self.variables.len();
        if self.units.len() != d {
            return Err("variables and units differ in length".into());
        }
        if self.units.first().map(String::as_str) != Some("kW") {
            return Err("the first variable must be solar power in kW".into());
        }
        let process =
            GaussMarkov::new(matrix("A", &self.a, d)?, matrix("B", &self.b, d)?).map_err(|e| e.to_string())?;
        let profile = NormalizationProfile::new(
            self.profile.mu.clone(),
            self.profile.sigma.clone(),
            self.profile.sigma_floor,
        )
        .map_err(|e| e.to_string())?;
        GaussMarkovModel::new(process, profile).map_err(|e| e.to_string())
    }
}

pub fn write_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    write_json(path, model)
}

/// Reads and validates a model file.
pub fn read_model(path: impl AsRef<Path>) -> Result<(ModelFile, GaussMarkovModel)> {
    let path = path.as_ref();
    let file: ModelFile = read_json(path)?;
    let model = file.model().map_err(|m| Error::format(path, None, m))?;
    Ok((file, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsdp_core::stochastic::fit_gauss_markov;

    #[test]
    fn round_trip() {
        let lags = LagMatrices {
            m0: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
            m1: DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.2, 0.5]),
        };
        let (gm, diag) = fit_gauss_markov(&lags).unwrap();
        let profile = NormalizationProfile::new(
            vec![vec![0.0, 1.0], vec![20.0, 21.0]],
            vec![vec![0.0, 0.3], vec![1.0, 2.0]],
            Some(1e-6),
        )
        .unwrap();
        let cols = [
            Column {
                name: "solar".into(),
                unit: "kW".into(),
            },
            Column {
                name: "temp".into(),
                unit: "degC".into(),
            },
        ];
        let file = ModelFile::new(&cols, &gm, &lags, &diag, &profile);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_model(&p, &file).unwrap();
        let (back, model) = read_model(&p).unwrap();
        assert_eq!(back, file);
        assert_eq!(model.process, gm);
        assert_eq!(model.profile, profile);
    }

    #[test]
    fn malformed_models_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\"variables\": [\"solar\"]}").unwrap();
        assert!(read_model(&p).is_err());
    }
}
