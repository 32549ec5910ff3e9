//! Numerical kernels shared by the simulators: sparse storage, Krylov
//! exponential actions and the adaptive Runge–Kutta integrator.

pub mod krylov;
pub mod rk45;
pub mod sparse;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

pub use sparse::{CsrBuilder, CsrMatrix};

/// A linear map on `C^n` applied to contiguous slices.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl LinearMap for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.ncols();
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        // column-major storage
        let data = self.as_slice();
        for (j, &xj) in x.iter().enumerate().take(n) {
            if xj.re == 0.0 && xj.im == 0.0 {
                continue;
            }
            let col = &data[j * self.nrows()..(j + 1) * self.nrows()];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
    }
}

pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part
/// is used.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}
