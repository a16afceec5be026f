//! Recursive projection for the linear fixed point `u = M u + b`.
//!
//! Plain Picard iteration diverges as soon as `M` has an eigenvalue of
//! modulus one or more, even if only a handful do. The dominant invariant
//! subspace `Z` is found by subspace iteration; the fixed point is then
//! split as `u = Z y + v` with `Z^T v = 0`, the small equation for `y` is
//! solved directly and Picard iteration is applied to `v` only, where it
//! contracts with the first discarded eigenvalue.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Ritz values at or above this modulus must lie inside the basis.
const RETAINED_MODULUS: f64 = 0.5;
const MAX_BLOCK: usize = 48;
const MAX_SUBSPACE_ITER: usize = 60;
const RITZ_TOL: f64 = 1e-4;
const SEED: u64 = 0x6879_7065_7270;

pub(crate) struct Deflation {
    /// Orthonormal basis `Z`, one column per vector.
    z: DMatrix<f64>,
    /// `M Z`.
    mz: DMatrix<f64>,
    /// LU factors of `I - Z^T M Z`.
    small: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Applications of `M` spent building the basis.
    pub applications: usize,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn ritz_moduli(h: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = h.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

impl Deflation {
    /// Builds the basis by subspace iteration, doubling the block while
    /// every Ritz value is still at or above [`RETAINED_MODULUS`].
    pub fn build(n: usize, start_block: usize, mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut p = start_block.clamp(1, n);
        let mut applications = 0;
        loop {
            let mut z = orthonormalize(DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0)));
            let mut prev: Vec<f64> = Vec::new();
            let (mut mz, mut h);
            let mut it = 0;
            loop {
                mz = DMatrix::zeros(n, p);
                for c in 0..p {
                    let image = apply(z.column(c).as_slice())?;
                    mz.column_mut(c).copy_from_slice(&image);
                }
                applications += p;
                h = z.transpose() * &mz;
                let ritz = ritz_moduli(&h);
                let settled = ritz
                    .iter()
                    .zip(&prev)
                    .filter(|(r, _)| **r >= RETAINED_MODULUS)
                    .all(|(r, q)| (r - q).abs() <= RITZ_TOL * r.max(1.0));
                it += 1;
                if (it > 2 && settled && prev.len() == ritz.len()) || it >= MAX_SUBSPACE_ITER {
                    prev = ritz;
                    break;
                }
                prev = ritz;
                z = orthonormalize(mz.clone());
            }
            let smallest = prev.last().copied().unwrap_or(0.0);
            if smallest >= RETAINED_MODULUS && p < MAX_BLOCK.min(n) {
                p = (2 * p).min(MAX_BLOCK).min(n);
                continue;
            }
            let small = (DMatrix::identity(p, p) - h).lu();
            if !small.is_invertible() {
                return Err(Error::Singular);
            }
            return Ok(Deflation {
                z,
                mz,
                small,
                applications,
            });
        }
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    /// `v - Z Z^T v`.
    fn project_out(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.z * (self.z.transpose() * v)
    }

    /// The complement part of `u`.
    pub fn complement(&self, u: &[f64]) -> Vec<f64> {
        self.project_out(&DVector::from_column_slice(u)).as_slice().to_vec()
    }

    /// One step: given `F(v) = M v + b` for the current complement part
    /// `v`, returns the new full iterate `Z y + v'` and the new complement
    /// part `v'`.
    pub fn step(&self, fv: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let fv = DVector::from_column_slice(fv);
        let y = self.small.solve(&(self.z.transpose() * &fv)).ok_or(Error::Singular)?;
        let v = self.project_out(&(&self.mz * &y + &fv));
        let u = &self.z * &y + &v;
        Ok((u.as_slice().to_vec(), v.as_slice().to_vec()))
    }
}
