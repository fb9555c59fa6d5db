//! Gauss-Markov solar model and stochastic dynamic programming.
//!
//! Data are normalized per variable and step, lag-0 and lag-1 cross
//! correlations are estimated, and `w(t) = A w(t-1) + B ε(t-1)` is fitted to
//! preserve them. The stochastic Bellman recursion takes the expectation
//! over `ε` with a Gauss-Hermite tensor rule.

mod battery;
mod bellman;
mod correlation;
mod gauss_markov;
mod normalize;
mod quadrature;

pub use battery::{
    compare_with_clairvoyant, simulate_policy, solve_stochastic, NoiseGrid, PairedComparison,
    StochasticBatteryInstance, StochasticBatterySolution, DEFAULT_MAX_STATES,
};
pub use bellman::{
    stochastic_bellman, NoisyDynamicsFn, StochasticProblem, StochasticProblemBuilder, StochasticSolution,
};
pub use correlation::{lag_correlation, LagMatrices};
pub use gauss_markov::{
    factor_psd, fit_gauss_markov, sample_solar_path, FitDiagnostics, GaussMarkov, GaussMarkovModel, PsdFactor,
    SolarPath,
};
pub use normalize::{MultiSeries, NormalizationProfile};
pub use quadrature::{gauss_hermite, gauss_quadrature, NoiseQuadrature};
