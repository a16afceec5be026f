//! Dense collocation matrix of `I - B - A - D`.

use nalgebra::{DMatrix, DVector};

use super::system::System;
use crate::error::{Error, Result};
use crate::grid::GridPair;
use crate::scalar::Real;

/// Largest number of unknowns `2 nx nt` accepted by the dense path.
pub const DENSE_LIMIT: usize = 40_000;

pub fn check_size(unknowns: usize) -> Result<()> {
    if unknowns > DENSE_LIMIT {
        return Err(Error::TooLarge {
            unknowns,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Assembles the matrix column by column from unit vectors, in the ordering
/// of [`GridPair::flatten`]. Entries are stored in `f64`.
pub fn assemble_dense<S: Real>(system: &System<S>) -> Result<DMatrix<f64>> {
    let size = system.unknowns();
    check_size(size)?;
    let grid = *system.grid();
    let mut m = DMatrix::zeros(size, size);
    let mut unit = vec![S::zero(); size];
    for col in 0..size {
        unit[col] = S::one();
        let image = system.apply_operator(&GridPair::unflatten(grid, &unit)?).flatten();
        unit[col] = S::zero();
        for (row, v) in image.into_iter().enumerate() {
            m[(row, col)] = v.as_f64();
        }
    }
    Ok(m)
}

/// Solves `(I - B - A - D) u = rhs` by LU with partial pivoting.
pub fn solve_dense<S: Real>(matrix: DMatrix<f64>, rhs: &GridPair<S>) -> Result<GridPair<S>> {
    let grid = *rhs.grid();
    let b = DVector::from_iterator(matrix.nrows(), rhs.flatten().into_iter().map(|v| v.as_f64()));
    let lu = matrix.lu();
    // Pivots below this fraction of the largest one are treated as zero.
    let diag = lu.u().diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max > 0.0) || min <= 1e-13 * max {
        return Err(Error::Singular);
    }
    let x = lu.solve(&b).ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let values: Vec<S> = x.iter().map(|&v| S::lit(v)).collect();
    GridPair::unflatten(grid, &values)
}
