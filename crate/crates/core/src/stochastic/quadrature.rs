use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// A discrete approximation of `N(0, I)`: noise vectors and probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseQuadrature {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl NoiseQuadrature {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                expected: nodes.len().max(1),
                found: weights.len(),
            });
        }
        let dim = nodes[0].len();
        if nodes.iter().any(|n| n.len() != dim) {
            return Err(Error::InvalidParameter("quadrature nodes differ in dimension".into()));
        }
        if nodes.iter().flatten().chain(&weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(alloc::format!("weights sum to {total}, not 1")));
        }
        Ok(Self { nodes, weights })
    }

    /// The single node `0` with weight 1.
    pub fn mean(dim: usize) -> Self {
        Self {
            nodes: vec![vec![0.0; dim]],
            weights: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_j w_j f(v_j)`.
    pub fn expect(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(v, w)| w * f(v)).sum()
    }
}

/// Gauss-Hermite rule for the standard normal density (probabilists'
/// Hermite polynomials), by the Golub-Welsch eigenvalue method. Exact for
/// polynomials up to degree `2n - 1`. Nodes ascend and are symmetric about 0.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one quadrature node is needed".into()));
    }
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = libm::sqrt(k as f64);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)] * eig.eigenvectors[(0, j)]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        (nodes[i], nodes[j]) = (-x, x);
        (weights[i], weights[j]) = (w, w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((nodes, weights))
}

/// Tensor product of `nodes_per_dim`-point Gauss-Hermite rules, nodes in
/// lexicographic order.
pub fn gauss_quadrature(dim: usize, nodes_per_dim: usize) -> Result<NoiseQuadrature> {
    if dim == 0 {
        return Err(Error::InvalidParameter("noise dimension must be positive".into()));
    }
    let (x, w) = gauss_hermite(nodes_per_dim)?;
    let count = nodes_per_dim
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::InvalidParameter("too many quadrature nodes".into()))?;
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for id in 0..count {
        let mut rem = id;
        let mut node = vec![0.0; dim];
        let mut weight = 1.0;
        for d in (0..dim).rev() {
            let k = rem % nodes_per_dim;
            rem /= nodes_per_dim;
            node[d] = x[k];
            weight *= w[k];
        }
        nodes.push(node);
        weights.push(weight);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    NoiseQuadrature::new(nodes, weights)
}
