use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::correlation::LagMatrices;
use super::normalize::{MultiSeries, NormalizationProfile};
use crate::{Error, Result};

/// Asymmetry accepted by [`factor_psd`].
const SYMMETRY_TOL: f64 = 1e-9;
/// Condition number above which `M0` is regularized.
const RIDGE_THRESHOLD: f64 = 1e10;
const RIDGE: f64 = 1e-8;

/// `B` with `B Bᵀ = S` after clamping negative eigenvalues of `S` at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdFactor {
    pub b: DMatrix<f64>,
    /// Sum of the magnitudes of the clamped eigenvalues.
    pub clamped_mass: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Factors a symmetric matrix as `V diag(√λ⁺)`.
pub fn factor_psd(s: &DMatrix<f64>) -> Result<PsdFactor> {
    if !s.is_square() {
        return Err(Error::ShapeMismatch {
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let asym = max_abs(&(s - s.transpose()));
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut clamped_mass = 0.0;
    let mut b = eig.eigenvectors;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l < 0.0 {
            clamped_mass -= l;
        }
        let r = libm::sqrt(l.max(0.0));
        b.column_mut(j).scale_mut(r);
    }
    Ok(PsdFactor { b, clamped_mass })
}

/// Fit diagnostics; none of these are enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct FitDiagnostics {
    /// 2-norm condition number of `M0` before regularization.
    pub condition_number: f64,
    /// Diagonal ridge added to `M0` (zero when none was needed).
    pub ridge: f64,
    /// Largest eigenvalue magnitude of `A`; at least one means the fitted
    /// process is not stationary.
    pub spectral_radius: f64,
    pub clamped_mass: f64,
    /// Largest entry of `|B Bᵀ - S|`.
    pub reconstruction_error: f64,
}

/// `w(t) = A w(t-1) + B ε(t-1)`, `ε ~ N(0, I)`, `w(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussMarkov {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |a, &v| a.max(v));
    let min = sv.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `A = M1 M0⁻¹` and `B Bᵀ = M0 - M1 M0⁻¹ M1ᵀ`.
///
/// `M0` gets a `1e-8` diagonal ridge when its condition number exceeds
/// `1e10`; if it still cannot be inverted the fit fails.
pub fn fit_gauss_markov(lags: &LagMatrices) -> Result<(GaussMarkov, FitDiagnostics)> {
    let (m0, m1) = (&lags.m0, &lags.m1);
    let d = m0.nrows();
    if !m0.is_square() || m1.shape() != m0.shape() {
        return Err(Error::ShapeMismatch {
            expected: d,
            found: m1.nrows().max(m0.ncols()),
        });
    }
    let condition = condition_number(m0);
    let ridge = if condition > RIDGE_THRESHOLD { RIDGE } else { 0.0 };
    let m0r = m0 + DMatrix::identity(d, d) * ridge;
    let inv = m0r.clone().try_inverse().ok_or(Error::Singular)?;
    let regularized = condition_number(&m0r);
    if regularized.is_nan() || regularized > 1.0 / f64::EPSILON {
        return Err(Error::Singular);
    }
    let a = m1 * &inv;
    let s = m0 - &a * m1.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let PsdFactor { b, clamped_mass } = factor_psd(&s)?;
    let reconstruction_error = max_abs(&(&b * b.transpose() - &s));
    let diagnostics = FitDiagnostics {
        condition_number: condition,
        ridge,
        spectral_radius: spectral_radius(&a),
        clamped_mass,
        reconstruction_error,
    };
    Ok((GaussMarkov { a, b }, diagnostics))
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .fold(0.0f64, |r, l| r.max(libm::hypot(l.re, l.im)))
}

impl GaussMarkov {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 || b.nrows() != a.nrows() || !b.is_square() {
            return Err(Error::ShapeMismatch {
                expected: a.nrows(),
                found: b.nrows(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("A and B must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }

    /// `out = A w + B v`.
    pub fn propagate(&self, w: &[f64], v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
            let acc = self.a.row(i).iter().zip(w).fold(0.0, |acc, (a, x)| acc + a * x);
            *o = self.b.row(i).iter().zip(v).fold(acc, |acc, (b, e)| acc + b * e);
        }
    }

    /// One realization of `w(0..steps)`. Each `(seed, path)` pair has its
    /// own random stream.
    pub fn sample(&self, steps: usize, seed: u64, path: u64) -> MultiSeries {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        let mut out = MultiSeries::zeros(d, steps);
        let mut eps = vec![0.0; d];
        let mut next = vec![0.0; d];
        for t in 1..steps {
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(&mut rng);
            }
            self.propagate(out.row(t - 1), &eps, &mut next);
            for (i, &v) in next.iter().enumerate() {
                out.set(t, i, v);
            }
        }
        out
    }
}

/// The normalized process together with its normalization; variable 0 is
/// solar power.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussMarkovModel {
    pub process: GaussMarkov,
    pub profile: NormalizationProfile,
}

/// A sampled solar path.
#[derive(Clone, Debug, PartialEq)]
pub struct SolarPath {
    pub w: MultiSeries,
    /// Solar power per step, kW.
    pub solar: Vec<f64>,
    /// Steps where the denormalized value was negative and set to zero.
    pub clamped: usize,
}

impl GaussMarkovModel {
    pub fn new(process: GaussMarkov, profile: NormalizationProfile) -> Result<Self> {
        if process.dim() != profile.vars() {
            return Err(Error::ShapeMismatch {
                expected: profile.vars(),
                found: process.dim(),
            });
        }
        Ok(Self { process, profile })
    }

    pub fn steps(&self) -> usize {
        self.profile.steps()
    }

    pub fn sample_solar(&self, steps: usize, seed: u64, path: u64) -> Result<SolarPath> {
        if steps > self.profile.steps() {
            return Err(Error::ShapeMismatch {
                expected: self.profile.steps(),
                found: steps,
            });
        }
        let w = self.process.sample(steps, seed, path);
        let mut clamped = 0;
        let solar = (0..steps)
            .map(|t| {
                let q = self.profile.solar_unclamped(t, w.get(t, 0));
                if q < 0.0 {
                    clamped += 1;
                }
                q.max(0.0)
            })
            .collect();
        Ok(SolarPath { w, solar, clamped })
    }
}

/// Path 0 of [`GaussMarkovModel::sample_solar`].
pub fn sample_solar_path(model: &GaussMarkovModel, steps: usize, seed: u64) -> Result<SolarPath> {
    model.sample_solar(steps, seed, 0)
}
