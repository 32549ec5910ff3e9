//! Operators and states on composite Hilbert spaces made of a qubit and
//! truncated bosonic modes.
//!
//! Factor order is fixed: the system first, then environment modes in list
//! order. Composite indices are row-major, so for `tensor([A, B])` the basis
//! label `(i, j)` sits at `i * dim(B) + j`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, LinearMap};

/// Default upper bound on the total dimension of a signature.
pub const DEFAULT_DIM_LIMIT: usize = 1 << 24;

/// Operators of total dimension above this are stored sparse.
pub const SPARSE_THRESHOLD: usize = 256;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DimSignature {
    dims: Vec<usize>,
}

impl DimSignature {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_limit(dims, DEFAULT_DIM_LIMIT)
    }

    pub fn with_limit(dims: Vec<usize>, limit: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("signature needs at least one factor".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("factor {pos} has dimension 0")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if total > limit {
            return Err(Error::DimensionLimit {
                dim: total,
                limit,
                hint: "reduce the number of factors or their truncation".into(),
            });
        }
        Ok(Self { dims })
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &DimSignature) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(dims)
    }

    /// Sub-signature of the listed factors, in increasing factor order.
    pub fn select(&self, factors: &[usize]) -> Result<Self> {
        let mut f = factors.to_vec();
        f.sort_unstable();
        f.dedup();
        for &i in &f {
            if i >= self.dims.len() {
                return Err(Error::IndexOutOfRange { index: i, len: self.dims.len() });
            }
        }
        Self::new(f.iter().map(|&i| self.dims[i]).collect())
    }
}

impl fmt::Display for DimSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

/// A square complex matrix on the space described by its signature.
///
/// Storage is dense up to [`SPARSE_THRESHOLD`] and sparse above; both
/// representations behave identically.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    sig: DimSignature,
    repr: Repr,
}

impl Operator {
    pub fn from_dense(sig: DimSignature, m: DMatrix<C64>) -> Result<Self> {
        let n = sig.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Signature(format!(
                "matrix is {}x{}, signature {sig} needs {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::normalized(sig, Repr::Dense(m)))
    }

    pub fn from_csr(sig: DimSignature, m: CsrMatrix) -> Result<Self> {
        let n = sig.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Signature(format!(
                "matrix is {}x{}, signature {sig} needs {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::normalized(sig, Repr::Sparse(m)))
    }

    /// Keeps the given representation regardless of size.
    pub fn with_repr(sig: DimSignature, repr: Repr) -> Result<Self> {
        let op = match repr {
            Repr::Dense(m) => Self::from_dense(sig, m)?,
            Repr::Sparse(m) => Self::from_csr(sig, m)?,
        };
        Ok(op)
    }

    fn normalized(sig: DimSignature, repr: Repr) -> Self {
        let sparse = sig.total() > SPARSE_THRESHOLD;
        let repr = match (repr, sparse) {
            (Repr::Dense(m), true) => Repr::Sparse(CsrMatrix::from_dense(&m)),
            (Repr::Sparse(m), false) => Repr::Dense(m.to_dense()),
            (r, _) => r,
        };
        Self { sig, repr }
    }

    pub fn identity(sig: DimSignature) -> Self {
        let n = sig.total();
        Self::normalized(sig, Repr::Sparse(CsrMatrix::identity(n)))
    }

    pub fn zeros(sig: DimSignature) -> Self {
        let n = sig.total();
        Self::normalized(sig, Repr::Sparse(CsrMatrix::zeros(n, n)))
    }

    pub fn sig(&self) -> &DimSignature {
        &self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.total()
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse(_))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match &self.repr {
            Repr::Dense(m) => CsrMatrix::from_dense(m),
            Repr::Sparse(m) => m.clone(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[(i, j)],
            Repr::Sparse(m) => m.get(i, j),
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.adjoint()),
            Repr::Sparse(m) => Repr::Sparse(m.adjoint()),
        };
        Self { sig: self.sig.clone(), repr }
    }

    pub fn scale(&self, s: C64) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m * s),
            Repr::Sparse(m) => Repr::Sparse(m.scale(s)),
        };
        Self { sig: self.sig.clone(), repr }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.sig != other.sig {
            return Err(Error::Signature(format!("{} vs {}", self.sig, other.sig)));
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Operator, s: C64) -> Result<Self> {
        self.check_same(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a + b * s),
            _ => Repr::Sparse(self.to_csr().add_scaled(&other.to_csr(), s)),
        };
        Ok(Self::normalized(self.sig.clone(), repr))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a * b),
            _ => Repr::Sparse(self.to_csr().matmul(&other.to_csr())),
        };
        Ok(Self::normalized(self.sig.clone(), repr))
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Kronecker product with `self` as the leading factor.
    pub fn kron(&self, other: &Operator) -> Result<Self> {
        let sig = self.sig.concat(&other.sig)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) if sig.total() <= SPARSE_THRESHOLD => Repr::Dense(a.kronecker(b)),
            _ => Repr::Sparse(self.to_csr().kron(&other.to_csr())),
        };
        Ok(Self::normalized(sig, repr))
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim());
        LinearMap::apply(self, v.as_slice(), out.as_mut_slice());
        out
    }

    pub fn hermiticity_residual(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => linalg::hermiticity_residual(m),
            Repr::Sparse(m) => m.hermiticity_residual(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        linalg::max_abs_diff(&self.to_dense(), &other.to_dense())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Same matrix under a different (equal-total) signature.
    pub fn reshape(&self, sig: DimSignature) -> Result<Self> {
        if sig.total() != self.dim() {
            return Err(Error::Signature(format!("cannot view {} as {sig}", self.sig)));
        }
        Ok(Self { sig, repr: self.repr.clone() })
    }
}

impl LinearMap for Operator {
    fn dim(&self) -> usize {
        self.sig.total()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        match &self.repr {
            Repr::Dense(m) => m.apply(x, y),
            Repr::Sparse(m) => m.matvec_into(x, y),
        }
    }
}

/// Truncated ladder operators on Fock levels `0..=n_max`.
pub struct BosonicOps {
    pub annihilation: Operator,
    pub creation: Operator,
    pub number: Operator,
}

pub fn bosonic_ops(n_max: usize) -> Result<BosonicOps> {
    if n_max < 1 {
        return Err(Error::InvalidTruncation(format!("n_max must be >= 1, got {n_max}")));
    }
    let d = n_max + 1;
    let sig = DimSignature::single(d)?;
    let mut a = DMatrix::<C64>::zeros(d, d);
    for k in 1..d {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let n = DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) });
    let creation = a.adjoint();
    Ok(BosonicOps {
        annihilation: Operator::from_dense(sig.clone(), a)?,
        creation: Operator::from_dense(sig.clone(), creation)?,
        number: Operator::from_dense(sig, n)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// `|1><0|`
    Plus,
    /// `|0><1|`
    Minus,
    Identity,
}

/// Pauli matrices in the basis order `(|0>, |1>)`.
///
/// `|1>` is the excited state: `sigma_z |1> = |1>`, `sigma_z |0> = -|0>`,
/// and `sigma_+ = |1><0|` raises, so `[sigma_z, sigma_+] = 2 sigma_+`.
pub fn pauli(which: Pauli) -> Operator {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let entries = match which {
        Pauli::X => [z, o, o, z],
        Pauli::Y => [z, i, -i, z],
        Pauli::Z => [-o, z, z, o],
        Pauli::Plus => [z, z, o, z],
        Pauli::Minus => [z, o, z, z],
        Pauli::Identity => [o, z, z, o],
    };
    let sig = DimSignature::single(2).expect("qubit signature");
    Operator::from_dense(sig, DMatrix::from_row_slice(2, 2, &entries)).expect("2x2")
}

pub fn tensor(ops: &[&Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("tensor of an empty operator list".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, op| acc.kron(op))
}

/// Places `op` on factor `slot` of `sig`, identity elsewhere.
pub fn embed(op: &Operator, slot: usize, sig: &DimSignature) -> Result<Operator> {
    if slot >= sig.len() {
        return Err(Error::IndexOutOfRange { index: slot, len: sig.len() });
    }
    if op.dim() != sig.dims()[slot] {
        return Err(Error::Signature(format!(
            "operator of dimension {} cannot act on factor {slot} of {sig}",
            op.dim()
        )));
    }
    let before: usize = sig.dims()[..slot].iter().product();
    let after: usize = sig.dims()[slot + 1..].iter().product();
    let m = CsrMatrix::identity(before).kron(&op.to_csr()).kron(&CsrMatrix::identity(after));
    Operator::from_csr(sig.clone(), m)
}

/// Places an operator acting on the contiguous factors starting at `first`.
pub fn embed_block(op: &Operator, first: usize, sig: &DimSignature) -> Result<Operator> {
    let n = op.sig().len();
    if first + n > sig.len() {
        return Err(Error::IndexOutOfRange { index: first + n - 1, len: sig.len() });
    }
    if op.sig().dims() != &sig.dims()[first..first + n] {
        return Err(Error::Signature(format!(
            "operator signature {} does not match factors {first}..{} of {sig}",
            op.sig(),
            first + n
        )));
    }
    let before: usize = sig.dims()[..first].iter().product();
    let after: usize = sig.dims()[first + n..].iter().product();
    let m = CsrMatrix::identity(before).kron(&op.to_csr()).kron(&CsrMatrix::identity(after));
    Operator::from_csr(sig.clone(), m)
}

/// Tolerances applied when validating a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// A Hermitian, unit-trace, positive matrix. Always stored dense.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    sig: DimSignature,
    matrix: DMatrix<C64>,
    trace: C64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn is_physical(&self) -> bool {
        self.trace_error <= TRACE_TOL && self.hermiticity <= HERMITIAN_TOL && self.min_eigenvalue >= -POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(sig: DimSignature, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(sig, matrix)?;
        let d = rho.diagnostics();
        if !d.is_physical() {
            return Err(Error::InvalidArgument(format!(
                "not a density matrix: trace error {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
                d.trace_error, d.hermiticity, d.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Only checks the shape; used for propagated states whose physicality
    /// is audited separately.
    pub fn new_unchecked(sig: DimSignature, matrix: DMatrix<C64>) -> Result<Self> {
        let n = sig.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Signature(format!(
                "matrix is {}x{}, signature {sig} needs {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let trace = matrix.trace();
        Ok(Self { sig, matrix, trace })
    }

    /// Rescales a positive Hermitian matrix to unit trace.
    pub fn normalized(sig: DimSignature, matrix: DMatrix<C64>) -> Result<Self> {
        let tr = matrix.trace();
        if tr.norm() == 0.0 {
            return Err(Error::InvalidArgument("zero-trace matrix cannot be normalized".into()));
        }
        Self::new(sig, matrix / tr)
    }

    pub fn pure(sig: DimSignature, psi: &DVector<C64>) -> Result<Self> {
        let nrm = psi.norm();
        if nrm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = psi / C64::new(nrm, 0.0);
        Self::new(sig, &v * v.adjoint())
    }

    /// `|k><k|` on a single factor of dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, len: d });
        }
        let mut m = DMatrix::zeros(d, d);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::new(DimSignature::single(d)?, m)
    }

    pub fn product(states: &[&DensityMatrix]) -> Result<Self> {
        let (first, rest) = states
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let mut sig = first.sig.clone();
        let mut m = first.matrix.clone();
        for s in rest {
            sig = sig.concat(&s.sig)?;
            m = m.kronecker(&s.matrix);
        }
        Self::new_unchecked(sig, m)
    }

    pub fn sig(&self) -> &DimSignature {
        &self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.total()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.trace
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics {
            trace_error: (self.trace - C64::new(1.0, 0.0)).norm(),
            hermiticity: self.hermiticity_residual(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `Tr{O rho}`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::Signature(format!("operator {} vs state {}", op.sig(), self.sig)));
        }
        let mut s = C64::new(0.0, 0.0);
        match op.repr() {
            Repr::Dense(m) => {
                for i in 0..self.dim() {
                    for j in 0..self.dim() {
                        s += m[(i, j)] * self.matrix[(j, i)];
                    }
                }
            }
            Repr::Sparse(m) => {
                for (i, j, v) in m.iter() {
                    s += v * self.matrix[(j, i)];
                }
            }
        }
        Ok(s)
    }

    /// `1/2 ||rho - sigma||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Signature(format!("{} vs {}", self.sig, other.sig)));
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
    }
}

/// Traces out every factor not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), rho.sig(), keep)?;
    DensityMatrix::new_unchecked(rho.sig().select(keep)?, m)
}

/// Partial trace of an arbitrary (not necessarily Hermitian) matrix.
pub fn partial_trace_matrix(m: &DMatrix<C64>, sig: &DimSignature, keep: &[usize]) -> Result<DMatrix<C64>> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace must keep at least one factor".into()));
    }
    if m.nrows() != sig.total() || m.ncols() != sig.total() {
        return Err(Error::Signature(format!("matrix does not match signature {sig}")));
    }
    let kept_sig = sig.select(keep)?;
    let dims = sig.dims();
    let nf = dims.len();
    let mut kept = vec![false; nf];
    for &k in keep {
        kept[k] = true;
    }
    // strides of the full index
    let mut stride = vec![1usize; nf];
    for f in (0..nf.saturating_sub(1)).rev() {
        stride[f] = stride[f + 1] * dims[f + 1];
    }
    let kept_factors: Vec<usize> = (0..nf).filter(|&f| kept[f]).collect();
    let traced_factors: Vec<usize> = (0..nf).filter(|&f| !kept[f]).collect();
    let dk = kept_sig.total();
    let dt: usize = traced_factors.iter().map(|&f| dims[f]).product();

    let offsets = |factors: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &f in factors.iter().rev() {
                    off += (idx % dims[f]) * stride[f];
                    idx /= dims[f];
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept_factors, dk);
    let traced_off = offsets(&traced_factors, dt);

    let mut out = DMatrix::<C64>::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for &t in &traced_off {
                s += m[(kept_off[a] + t, kept_off[b] + t)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}
