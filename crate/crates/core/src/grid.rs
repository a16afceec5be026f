//! Uniform periodic-in-time grids and functions sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Grid resolution: `nx` points on `[0,1]` with both endpoints, `nt` points
/// on `[0,T)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
}

impl GridSpec {
    pub const MIN_NX: usize = 9;
    pub const MIN_NT: usize = 8;

    pub fn new(nx: usize, nt: usize) -> Result<Self> {
        let g = GridSpec { nx, nt };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.nx < Self::MIN_NX || self.nt < Self::MIN_NT || !self.nt.is_multiple_of(2) {
            return Err(Error::InvalidGrid {
                nx: self.nx,
                nt: self.nt,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A [`GridSpec`] together with the time period it discretises.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub period: f64,
}

impl Grid {
    pub fn new(spec: GridSpec, period: f64) -> Self {
        Grid { spec, period }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    #[inline]
    pub fn nt(&self) -> usize {
        self.spec.nt
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / (self.spec.nx - 1) as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.period / self.spec.nt as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.spec.nx {
            1.0
        } else {
            i as f64 * self.dx()
        }
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    #[inline]
    pub fn index(&self, i: usize, n: usize) -> usize {
        i * self.spec.nt + n
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx()).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt()).map(|n| self.t(n)).collect()
    }
}

/// Scalar function on a [`Grid`], stored row-major in `x`. Time indices wrap
/// modulo `nt`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S> {
    grid: Grid,
    values: Vec<S>,
}

impl<S: Real> GridFunction<S> {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![S::zero(); grid.spec.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.spec.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.spec.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> S) -> Self {
        let mut values = Vec::with_capacity(grid.spec.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for n in 0..grid.nt() {
                values.push(f(x, grid.t(n)));
            }
        }
        GridFunction { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, n: usize) -> S {
        self.values[i * self.grid.spec.nt + n]
    }

    /// Periodic time index.
    #[inline]
    pub fn at(&self, i: usize, n: isize) -> S {
        let nt = self.grid.spec.nt as isize;
        self.values[i * self.grid.spec.nt + n.rem_euclid(nt) as usize]
    }

    #[inline]
    pub fn set(&mut self, i: usize, n: usize, v: S) {
        let nt = self.grid.spec.nt;
        self.values[i * nt + n] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        let nt = self.grid.spec.nt;
        &self.values[i * nt..(i + 1) * nt]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        let nt = self.grid.spec.nt;
        &mut self.values[i * nt..(i + 1) * nt]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn sup_norm(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Pair-valued grid function, e.g. the Riemann invariants `(u1, u2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPair<S> {
    pub first: GridFunction<S>,
    pub second: GridFunction<S>,
}

impl<S: Real> GridPair<S> {
    pub fn new(first: GridFunction<S>, second: GridFunction<S>) -> Self {
        debug_assert_eq!(first.grid(), second.grid());
        GridPair { first, second }
    }

    pub fn zeros(grid: Grid) -> Self {
        GridPair::new(GridFunction::zeros(grid), GridFunction::zeros(grid))
    }

    pub fn grid(&self) -> &Grid {
        self.first.grid()
    }

    /// Component by 1-based index, matching the `u1`/`u2` naming.
    pub fn component(&self, j: usize) -> &GridFunction<S> {
        match j {
            1 => &self.first,
            2 => &self.second,
            _ => panic!("component index must be 1 or 2"),
        }
    }

    /// Max-norm over both components.
    pub fn sup_norm(&self) -> S {
        self.first.sup_norm().max(self.second.sup_norm())
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.first
            .max_abs_diff(&other.first)
            .max(self.second.max_abs_diff(&other.second))
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S + Copy) -> Self {
        GridPair::new(
            self.first.zip_with(&other.first, f),
            self.second.zip_with(&other.second, f),
        )
    }

    pub fn map(&self, f: impl Fn(S) -> S + Copy) -> Self {
        GridPair::new(self.first.map(f), self.second.map(f))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|a| a * s)
    }

    /// `[u1 values..., u2 values...]`, the unknown ordering of the dense
    /// collocation system.
    pub fn flatten(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(2 * self.first.values().len());
        v.extend_from_slice(self.first.values());
        v.extend_from_slice(self.second.values());
        v
    }

    pub fn unflatten(grid: Grid, v: &[S]) -> Result<Self> {
        let n = grid.spec.len();
        if v.len() != 2 * n {
            return Err(Error::ShapeMismatch {
                expected: 2 * n,
                found: v.len(),
            });
        }
        Ok(GridPair::new(
            GridFunction::from_values(grid, v[..n].to_vec())?,
            GridFunction::from_values(grid, v[n..].to_vec())?,
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.first.is_finite() && self.second.is_finite()
    }
}
