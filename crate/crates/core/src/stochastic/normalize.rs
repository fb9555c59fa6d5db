use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A multi-variable series, stored step-major (`data[t * vars + i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries {
    vars: usize,
    data: Vec<f64>,
}

impl MultiSeries {
    pub fn new(vars: usize, data: Vec<f64>) -> Result<Self> {
        if vars == 0 {
            return Err(Error::InvalidParameter("series needs at least one variable".into()));
        }
        if !data.len().is_multiple_of(vars) {
            return Err(Error::ShapeMismatch {
                expected: data.len().div_ceil(vars) * vars,
                found: data.len(),
            });
        }
        Ok(Self { vars, data })
    }

    pub fn zeros(vars: usize, steps: usize) -> Self {
        Self {
            vars: vars.max(1),
            data: vec![0.0; vars.max(1) * steps],
        }
    }

    /// Builds a series from per-variable columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let steps = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != steps) {
            return Err(Error::ShapeMismatch {
                expected: steps,
                found: c.len(),
            });
        }
        let mut data = Vec::with_capacity(steps * columns.len());
        for t in 0..steps {
            data.extend(columns.iter().map(|c| c[t]));
        }
        Self::new(columns.len(), data)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.vars
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.data[t * self.vars + i]
    }

    pub fn set(&mut self, t: usize, i: usize, v: f64) {
        self.data[t * self.vars + i] = v;
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.vars..(t + 1) * self.vars]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.steps()).map(|t| self.get(t, i)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Per-variable, per-step mean `μ_i(t)` and standard deviation `σ_i(t)`.
///
/// Steps where `σ_i(t) = 0` (solar at night) can only be normalized when
/// `sigma_floor` is set, in which case the floor is used as the divisor.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationProfile {
    /// `mu[i][t]`.
    pub mu: Vec<Vec<f64>>,
    /// `sigma[i][t]`, as estimated (may be zero).
    pub sigma: Vec<Vec<f64>>,
    pub sigma_floor: Option<f64>,
}

impl NormalizationProfile {
    pub fn new(mu: Vec<Vec<f64>>, sigma: Vec<Vec<f64>>, sigma_floor: Option<f64>) -> Result<Self> {
        if mu.is_empty() || mu.len() != sigma.len() {
            return Err(Error::ShapeMismatch {
                expected: mu.len().max(1),
                found: sigma.len(),
            });
        }
        let steps = mu[0].len();
        for v in mu.iter().chain(&sigma) {
            if v.len() != steps {
                return Err(Error::ShapeMismatch {
                    expected: steps,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("profile has non-finite values".into()));
            }
        }
        if sigma.iter().flatten().any(|&s| s < 0.0) {
            return Err(Error::InvalidParameter(
                "standard deviations must be non-negative".into(),
            ));
        }
        if let Some(f) = sigma_floor {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidParameter("sigma floor must be positive".into()));
            }
        }
        Ok(Self { mu, sigma, sigma_floor })
    }

    /// Per-step mean and sample standard deviation over an ensemble of
    /// equally shaped series.
    pub fn from_ensemble(ensemble: &[MultiSeries], sigma_floor: Option<f64>) -> Result<Self> {
        let first = ensemble
            .first()
            .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
        if ensemble.len() < 2 {
            return Err(Error::InsufficientData(
                "at least two series are needed for a standard deviation".into(),
            ));
        }
        let (vars, steps) = (first.vars(), first.steps());
        if let Some(s) = ensemble.iter().find(|s| s.vars() != vars || s.steps() != steps) {
            return Err(Error::ShapeMismatch {
                expected: vars * steps,
                found: s.vars() * s.steps(),
            });
        }
        let n = ensemble.len() as f64;
        let mut mu = vec![vec![0.0; steps]; vars];
        let mut sigma = vec![vec![0.0; steps]; vars];
        for i in 0..vars {
            for t in 0..steps {
                let mean = ensemble.iter().map(|s| s.get(t, i)).sum::<f64>() / n;
                let ss: f64 = ensemble
                    .iter()
                    .map(|s| {
                        let d = s.get(t, i) - mean;
                        d * d
                    })
                    .sum();
                mu[i][t] = mean;
                sigma[i][t] = libm::sqrt(ss / (n - 1.0));
            }
        }
        Self::new(mu, sigma, sigma_floor)
    }

    pub fn vars(&self) -> usize {
        self.mu.len()
    }

    pub fn steps(&self) -> usize {
        self.mu[0].len()
    }

    /// The divisor used for variable `i` at step `t`.
    pub fn effective_sigma(&self, i: usize, t: usize) -> Result<f64> {
        let s = self.sigma[i][t];
        if s > 0.0 {
            return Ok(s);
        }
        self.sigma_floor.ok_or(Error::ZeroVariance { variable: i, step: t })
    }

    fn check(&self, series: &MultiSeries) -> Result<()> {
        if series.vars() != self.vars() {
            return Err(Error::ShapeMismatch {
                expected: self.vars(),
                found: series.vars(),
            });
        }
        if series.steps() > self.steps() {
            return Err(Error::ShapeMismatch {
                expected: self.steps(),
                found: series.steps(),
            });
        }
        Ok(())
    }

    /// `w_i(t) = (W_i(t) - μ_i(t)) / σ_i(t)`.
    pub fn normalize(&self, series: &MultiSeries) -> Result<MultiSeries> {
        self.check(series)?;
        let mut out = series.clone();
        for t in 0..series.steps() {
            for i in 0..series.vars() {
                out.set(t, i, (series.get(t, i) - self.mu[i][t]) / self.effective_sigma(i, t)?);
            }
        }
        Ok(out)
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, series: &MultiSeries) -> Result<MultiSeries> {
        self.check(series)?;
        let mut out = series.clone();
        for t in 0..series.steps() {
            for i in 0..series.vars() {
                out.set(t, i, series.get(t, i) * self.effective_sigma(i, t)? + self.mu[i][t]);
            }
        }
        Ok(out)
    }

    /// Solar power `w_1 σ_1(t) + μ_1(t)`, clamped at zero. Zero-variance
    /// steps return the mean regardless of `w_1`.
    pub fn solar_power(&self, t: usize, w1: f64) -> f64 {
        self.solar_unclamped(t, w1).max(0.0)
    }

    pub(crate) fn solar_unclamped(&self, t: usize, w1: f64) -> f64 {
        let s = self.sigma[0][t];
        if s > 0.0 {
            w1 * s + self.mu[0][t]
        } else {
            self.mu[0][t]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile() -> NormalizationProfile {
        NormalizationProfile::new(
            vec![vec![0.0, 1.0, 2.5], vec![10.0, 11.0, 12.0]],
            vec![vec![0.0, 0.5, 0.8], vec![2.0, 1.0, 3.0]],
            Some(0.1),
        )
        .unwrap()
    }

    #[test]
    fn mean_series_normalizes_to_zero() {
        let p = profile();
        let w = p.normalize(&MultiSeries::from_columns(&p.mu).unwrap()).unwrap();
        assert!(w.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_on_random_data() {
        let p = profile();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let data: Vec<f64> = (0..6).map(|_| rng.random_range(-50.0..50.0)).collect();
            let s = MultiSeries::new(2, data).unwrap();
            let back = p.denormalize(&p.normalize(&s).unwrap()).unwrap();
            for (a, b) in s.data().iter().zip(back.data()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn solar_power_reproduces_input() {
        let p = profile();
        let solar = [0.0, 1.7, 3.1];
        for (t, &q) in solar.iter().enumerate() {
            let w = (q - p.mu[0][t]) / p.effective_sigma(0, t).unwrap();
            assert!((p.solar_power(t, w) - q).abs() <= 1e-12);
        }
        assert_eq!(p.solar_power(0, 5.0), 0.0);
        assert_eq!(p.solar_power(1, -10.0), 0.0);
    }

    #[test]
    fn zero_variance_needs_a_floor() {
        let mut p = profile();
        p.sigma_floor = None;
        let s = MultiSeries::zeros(2, 3);
        assert_eq!(p.normalize(&s), Err(Error::ZeroVariance { variable: 0, step: 0 }));
    }

    #[test]
    fn ensemble_statistics() {
        let a = MultiSeries::from_columns(&[vec![1.0, 2.0]]).unwrap();
        let b = MultiSeries::from_columns(&[vec![3.0, 2.0]]).unwrap();
        let p = NormalizationProfile::from_ensemble(&[a.clone(), b], None).unwrap();
        assert_eq!(p.mu, vec![vec![2.0, 2.0]]);
        assert_eq!(p.sigma[0][0], libm::sqrt(2.0));
        assert_eq!(p.sigma[0][1], 0.0);
        assert!(NormalizationProfile::from_ensemble(&[a], None).is_err());
    }

    #[test]
    fn shape_errors() {
        let p = profile();
        assert!(p.normalize(&MultiSeries::zeros(1, 3)).is_err());
        assert!(p.normalize(&MultiSeries::zeros(2, 4)).is_err());
        assert!(MultiSeries::new(2, vec![0.0; 3]).is_err());
    }
}
