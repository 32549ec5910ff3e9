use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{DimSignature, Operator, HERMITIAN_TOL};
use crate::linalg::{CsrMatrix, LinearMap};
use crate::C64;

/// A linear map on `d x d` matrices, stored as a `d^2 x d^2` matrix acting
/// on column-stacked vectors: `vec(A rho B) = (B^T (x) A) vec(rho)`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    sig: DimSignature,
    matrix: CsrMatrix,
}

impl Superoperator {
    pub fn from_csr(sig: DimSignature, matrix: CsrMatrix) -> Result<Self> {
        let n = sig.total() * sig.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Signature(format!("superoperator on {sig} needs {n}x{n}")));
        }
        Ok(Self { sig, matrix })
    }

    pub fn zero(sig: DimSignature) -> Self {
        let n = sig.total() * sig.total();
        Self { sig, matrix: CsrMatrix::zeros(n, n) }
    }

    pub fn sig(&self) -> &DimSignature {
        &self.sig
    }

    /// Hilbert-space dimension `d`.
    pub fn hilbert_dim(&self) -> usize {
        self.sig.total()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    /// Action on a `d x d` matrix.
    pub fn apply_to(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.hilbert_dim();
        let mut out = DMatrix::zeros(d, d);
        self.matrix.matvec_into(rho.as_slice(), out.as_mut_slice());
        out
    }
}

impl LinearMap for Superoperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec_into(x, y)
    }
}

/// `rho -> -i[H, rho] + sum_j gamma_j (L rho L^+ - {L^+ L, rho}/2)`.
pub fn build_liouvillian(h: &Operator, lindblad_ops: &[(Operator, f64)]) -> Result<Superoperator> {
    let r = h.hermiticity_residual();
    if r > HERMITIAN_TOL {
        return Err(Error::ModelValidation(format!("Hamiltonian is not Hermitian (residual {r:.3e})")));
    }
    let sig = h.sig().clone();
    let d = sig.total();
    let id = CsrMatrix::identity(d);
    let hc = h.to_csr();
    let mi = C64::new(0.0, -1.0);
    let mut gen = id.kron(&hc).scale(mi).add_scaled(&hc.transpose().kron(&id), -mi);
    for (j, (l, g)) in lindblad_ops.iter().enumerate() {
        if l.sig() != &sig {
            return Err(Error::Signature(format!("Lindblad operator {j} acts on {}, H on {sig}", l.sig())));
        }
        if !(*g >= 0.0 && g.is_finite()) {
            return Err(Error::ModelValidation(format!("rate gamma_{j} = {g} must be finite and >= 0")));
        }
        if *g == 0.0 {
            continue;
        }
        let lc = l.to_csr();
        let ldl = lc.adjoint().matmul(&lc);
        let g = C64::new(*g, 0.0);
        gen = gen
            .add_scaled(&lc.conj().kron(&lc), g)
            .add_scaled(&id.kron(&ldl), -g * 0.5)
            .add_scaled(&ldl.transpose().kron(&id), -g * 0.5);
    }
    Superoperator::from_csr(sig, gen)
}
