use alloc::format;

use nalgebra::DMatrix;

use super::normalize::MultiSeries;
use crate::{Error, Result};

/// Lag-0 and lag-1 cross-correlation matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct LagMatrices {
    pub m0: DMatrix<f64>,
    pub m1: DMatrix<f64>,
}

impl LagMatrices {
    pub fn estimate(ensemble: &[MultiSeries]) -> Result<Self> {
        Ok(Self {
            m0: lag_correlation(ensemble, 0)?,
            m1: lag_correlation(ensemble, 1)?,
        })
    }
}

/// `ρ(m, n)`: Pearson correlation of `w_m(t)` with `w_n(t - lag)`, pooled
/// over every series and every `t >= lag`.
pub fn lag_correlation(ensemble: &[MultiSeries], lag: usize) -> Result<DMatrix<f64>> {
    let vars = ensemble
        .first()
        .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?
        .vars();
    if ensemble.iter().any(|s| s.vars() != vars) {
        return Err(Error::InvalidParameter("series disagree on the variable count".into()));
    }
    let pairs: usize = ensemble.iter().map(|s| s.steps().saturating_sub(lag)).sum();
    if pairs < 2 {
        return Err(Error::InsufficientData(format!("{pairs} sample pairs at lag {lag}")));
    }
    let n = pairs as f64;
    let pairs_of = |m: usize, k: usize| {
        ensemble
            .iter()
            .flat_map(move |s| (lag..s.steps()).map(move |t| (s.get(t, m), s.get(t - lag, k))))
    };
    let mut out = DMatrix::zeros(vars, vars);
    for m in 0..vars {
        for k in 0..vars {
            let (sx, sy) = pairs_of(m, k).fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let (mx, my) = (sx / n, sy / n);
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (x, y) in pairs_of(m, k) {
                let (dx, dy) = (x - mx, y - my);
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            if sxx == 0.0 || syy == 0.0 {
                return Err(Error::InsufficientData(format!(
                    "no variation in the pairs of variables {m} and {k} at lag {lag}"
                )));
            }
            out[(m, k)] = sxy / libm::sqrt(sxx * syy);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(vars: usize, steps: usize, seed: u64) -> MultiSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..vars * steps).map(|_| StandardNormal.sample(&mut rng)).collect();
        MultiSeries::new(vars, data).unwrap()
    }

    #[test]
    fn lag_zero_has_unit_diagonal() {
        let m0 = lag_correlation(&[noise(3, 50, 1), noise(3, 20, 2)], 0).unwrap();
        for i in 0..3 {
            assert!((m0[(i, i)] - 1.0).abs() < 1e-9);
            for j in 0..3 {
                assert!(m0[(i, j)].abs() <= 1.0 + 1e-12);
                assert!((m0[(i, j)] - m0[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn white_noise_has_no_lag_one_correlation() {
        let n = 20_000;
        let m1 = lag_correlation(&[noise(2, n, 9)], 1).unwrap();
        let tol = 3.0 / libm::sqrt(n as f64);
        assert!(m1.iter().all(|r| r.abs() < tol), "{m1}");
    }

    #[test]
    fn ar1_coefficient_is_recovered() {
        let a = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = 0.0;
        let data: Vec<f64> = (0..100_000)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                w = a * w + e;
                w
            })
            .collect();
        let m1 = lag_correlation(&[MultiSeries::new(1, data).unwrap()], 1).unwrap();
        assert!((m1[(0, 0)] - a).abs() < 0.05);
    }

    #[test]
    fn lag_direction() {
        // variable 0 copies variable 1 from the previous step
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut a = alloc::vec![0.0];
        a.extend_from_slice(&b[..499]);
        let s = MultiSeries::from_columns(&[a, b]).unwrap();
        let m1 = lag_correlation(&[s], 1).unwrap();
        assert!((m1[(0, 1)] - 1.0).abs() < 1e-12);
        assert!(m1[(1, 0)].abs() < 0.2);
    }

    #[test]
    fn insufficient_data() {
        let s = MultiSeries::zeros(1, 1);
        assert!(matches!(lag_correlation(&[s], 1), Err(Error::InsufficientData(_))));
        let flat = MultiSeries::new(1, alloc::vec![1.0; 10]).unwrap();
        assert!(lag_correlation(&[flat], 0).is_err());
    }
}
