use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

/// What happens when a successor falls outside an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutOfRange {
    /// The successor is not in X; the input is infeasible.
    Infeasible,
    /// The axis discretizes an internal quantity whose range was
    /// underestimated; solving fails with a range error.
    Error,
    /// The successor is clamped to the nearest boundary point.
    Clamp,
}

/// How successors that land between grid points are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GridMode {
    /// Off-grid successors are projected to the nearest grid point.
    #[default]
    Project,
    /// Off-grid successors are not members of the grid.
    Strict,
}

/// Where a value lands on an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Snap {
    Exact(usize),
    Projected(usize),
    OffGrid(usize),
    Below,
    Above,
}

/// One sorted coordinate axis of a tensor-product grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    values: Vec<f64>,
    policy: OutOfRange,
    tol: f64,
}

impl Axis {
    /// Builds an axis from strictly increasing finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("axis has no points".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("axis has a non-finite point".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("axis points must be strictly increasing".into()));
        }
        let scale = values[0].abs().max(values[values.len() - 1].abs());
        Ok(Self {
            values,
            policy: OutOfRange::Infeasible,
            tol: 1e-9 * (1.0 + scale),
        })
    }

    /// `points` evenly spaced values over `[lo, hi]`. A degenerate range
    /// collapses to the single point `lo`.
    pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || points == 0 {
            return Err(Error::InvalidGrid(format!(
                "bad uniform axis [{lo}, {hi}] with {points} points"
            )));
        }
        if points == 1 || hi == lo {
            return Self::new(alloc::vec![lo]);
        }
        let n = (points - 1) as f64;
        let values = (0..points)
            .map(|i| {
                if i == points - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n
                }
            })
            .collect();
        Self::new(values)
    }

    /// Multiples of `step` covering `[lo, hi]`.
    pub fn stepped(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || hi < lo {
            return Err(Error::InvalidGrid(format!("bad stepped axis [{lo}, {hi}] step {step}")));
        }
        let k0 = libm::floor(lo / step + 1e-9) as i64;
        let k1 = libm::ceil(hi / step - 1e-9) as i64;
        Self::new((k0..=k1).map(|k| k as f64 * step).collect())
    }

    pub fn with_policy(mut self, policy: OutOfRange) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> OutOfRange {
        self.policy
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.values[0]
    }

    pub fn upper(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Nearest point, ties resolved towards the lower index.
    pub fn nearest(&self, v: f64) -> usize {
        let i = self.values.partition_point(|&p| p < v);
        if i == 0 {
            0
        } else if i == self.values.len() || v - self.values[i - 1] <= self.values[i] - v {
            i - 1
        } else {
            i
        }
    }

    pub fn snap(&self, v: f64, mode: GridMode) -> Snap {
        if v.is_nan() || v < self.lower() - self.tol {
            return Snap::Below;
        }
        if v > self.upper() + self.tol {
            return Snap::Above;
        }
        let i = self.nearest(v);
        if (self.values[i] - v).abs() <= self.tol {
            Snap::Exact(i)
        } else if mode == GridMode::Strict {
            Snap::OffGrid(i)
        } else {
            Snap::Projected(i)
        }
    }
}

/// Result of resolving a continuous point against a [`StateGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolved {
    pub id: usize,
    /// At least one `Clamp` axis was clamped.
    pub clamped: bool,
}

/// A tensor-product state grid. Points are enumerated in row-major order
/// (last axis fastest), which is lexicographic order of the coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StateGrid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    points: Vec<f64>,
}

impl StateGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("state grid needs at least one axis".into()));
        }
        let mut strides = alloc::vec![1usize; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1]
                .checked_mul(axes[d + 1].len())
                .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        }
        let len = strides[0]
            .checked_mul(axes[0].len())
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        let dim = axes.len();
        let mut points = Vec::with_capacity(len * dim);
        for id in 0..len {
            for (axis, stride) in axes.iter().zip(&strides) {
                points.push(axis.values[(id / stride) % axis.len()]);
            }
        }
        Ok(Self { axes, strides, points })
    }

    /// One-dimensional grid over the given values.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(alloc::vec![Axis::new(values)?])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.points[id * d..(id + 1) * d]
    }

    pub fn id_from_indices(&self, indices: &[usize]) -> usize {
        indices.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn axis_index(&self, id: usize, axis: usize) -> usize {
        (id / self.strides[axis]) % self.axes[axis].len()
    }

    /// Exact membership lookup.
    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        let mut id = 0;
        for ((axis, stride), &v) in self.axes.iter().zip(&self.strides).zip(point) {
            match axis.snap(v, GridMode::Strict) {
                Snap::Exact(i) => id += i * stride,
                _ => return None,
            }
        }
        Some(id)
    }

    /// Resolves a successor according to each axis' [`OutOfRange`] policy.
    /// `Ok(None)` means the point is not in X.
    pub fn resolve(&self, point: &[f64], mode: GridMode, stage: usize) -> Result<Option<Resolved>> {
        let mut id = 0;
        let mut clamped = false;
        for (k, ((axis, stride), &v)) in self.axes.iter().zip(&self.strides).zip(point).enumerate() {
            let axis_mode = if axis.policy == OutOfRange::Clamp {
                GridMode::Project
            } else {
                mode
            };
            let i = match axis.snap(v, axis_mode) {
                Snap::Exact(i) | Snap::Projected(i) => i,
                Snap::OffGrid(_) => match axis.policy {
                    OutOfRange::Error => {
                        return Err(Error::OffGrid {
                            stage,
                            axis: k,
                            value: v,
                        })
                    }
                    _ => return Ok(None),
                },
                out @ (Snap::Below | Snap::Above) => match axis.policy {
                    OutOfRange::Infeasible => return Ok(None),
                    OutOfRange::Error => {
                        return Err(Error::AggregateRange {
                            stage,
                            axis: k,
                            value: v,
                        })
                    }
                    OutOfRange::Clamp => {
                        clamped = true;
                        if out == Snap::Below {
                            0
                        } else {
                            axis.len() - 1
                        }
                    }
                },
            };
            id += i * stride;
        }
        Ok(Some(Resolved { id, clamped }))
    }
}

/// A finite, lexicographically sorted set of input vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct InputGrid {
    dim: usize,
    points: Vec<f64>,
}

impl InputGrid {
    pub fn new(mut points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match points.first() {
            Some(p) if !p.is_empty() => p.len(),
            _ => return Err(Error::InvalidGrid("input grid is empty".into())),
        };
        if points
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidGrid(
                "inputs must be finite vectors of equal length".into(),
            ));
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        if points.windows(2).any(|w| lex_cmp(&w[0], &w[1]) == Ordering::Equal) {
            return Err(Error::InvalidGrid("duplicate input".into()));
        }
        Ok(Self {
            dim,
            points: points.into_iter().flatten().collect(),
        })
    }

    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| alloc::vec![v]).collect())
    }

    pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let axis = Axis::uniform(lo, hi, points)?;
        Self::scalar(axis.values())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn index_of(&self, u: &[f64]) -> Option<usize> {
        self.iter().position(|p| p == u)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn axis_rejects_unsorted_and_empty() {
        assert!(Axis::new(vec![]).is_err());
        assert!(Axis::new(vec![1.0, 1.0]).is_err());
        assert!(Axis::new(vec![2.0, 1.0]).is_err());
        assert!(Axis::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn uniform_hits_endpoints() {
        let a = Axis::uniform(0.0, 8.0, 81).unwrap();
        assert_eq!(a.lower(), 0.0);
        assert_eq!(a.upper(), 8.0);
        assert_eq!(a.len(), 81);
        assert_eq!(Axis::uniform(3.0, 3.0, 65).unwrap().len(), 1);
    }

    #[test]
    fn stepped_covers_range() {
        let a = Axis::stepped(-2.5, 1.0, 0.5).unwrap();
        assert_eq!(a.values(), &[-2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0]);
        let b = Axis::stepped(-2.2, 0.1, 1.0).unwrap();
        assert_eq!(b.values(), &[-3.0, -2.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn snap_ties_go_low() {
        let a = Axis::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(a.snap(0.5, GridMode::Project), Snap::Projected(0));
        assert_eq!(a.snap(1.6, GridMode::Project), Snap::Projected(2));
        assert_eq!(a.snap(1.6, GridMode::Strict), Snap::OffGrid(2));
        assert_eq!(a.snap(1.0 + 1e-12, GridMode::Strict), Snap::Exact(1));
        assert_eq!(a.snap(-0.1, GridMode::Project), Snap::Below);
        assert_eq!(a.snap(2.1, GridMode::Project), Snap::Above);
    }

    #[test]
    fn product_grid_is_lexicographic_and_indexed() {
        let g = StateGrid::new(vec![
            Axis::new(vec![0.0, 1.0]).unwrap(),
            Axis::new(vec![10.0, 20.0, 30.0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(0), &[0.0, 10.0]);
        assert_eq!(g.point(1), &[0.0, 20.0]);
        assert_eq!(g.point(3), &[1.0, 10.0]);
        for id in 0..g.len() {
            assert_eq!(g.index_of(g.point(id)), Some(id));
        }
        assert_eq!(g.index_of(&[0.5, 10.0]), None);
        assert_eq!(g.axis_index(5, 1), 2);
    }

    #[test]
    fn resolve_follows_axis_policy() {
        let g = StateGrid::new(vec![
            Axis::new(vec![0.0, 1.0]).unwrap(),
            Axis::new(vec![0.0, 1.0]).unwrap().with_policy(OutOfRange::Error),
            Axis::new(vec![-1.0, 1.0]).unwrap().with_policy(OutOfRange::Clamp),
        ])
        .unwrap();
        assert_eq!(g.resolve(&[2.0, 0.0, 0.0], GridMode::Project, 3).unwrap(), None);
        assert!(matches!(
            g.resolve(&[0.0, 2.0, 0.0], GridMode::Project, 3),
            Err(Error::AggregateRange { stage: 3, axis: 1, .. })
        ));
        let r = g.resolve(&[1.0, 1.0, 5.0], GridMode::Project, 0).unwrap().unwrap();
        assert!(r.clamped);
        assert_eq!(g.point(r.id), &[1.0, 1.0, 1.0]);
        assert_eq!(g.resolve(&[0.4, 0.0, -1.0], GridMode::Strict, 0).unwrap(), None);
    }

    #[test]
    fn input_grid_sorted_unique() {
        let u = InputGrid::scalar(&[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(u.iter().map(|p| p[0]).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert!(InputGrid::scalar(&[1.0, 1.0]).is_err());
        assert!(InputGrid::new(vec![]).is_err());
        assert_eq!(u.index_of(&[0.0]), Some(1));
    }
}
