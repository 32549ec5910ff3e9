//! Unitary qubit + discretized-bath reference dynamics.

mod bath;
mod basis;
mod convergence;
pub mod star;

pub use basis::{ExcitationBasis, Parity, DEFAULT_BASIS_LIMIT};
pub use bath::{
    default_window, discretize_bath, discretize_bath_with_tol, BathMode, DiscretizedBath, Rule, DEFAULT_TAIL_TOL,
    DEFAULT_WINDOW_WIDTHS,
};
pub use convergence::{
    certify_bath_convergence, discretize, run_unitary, BathConvergenceReport, BathRefinement, UnitaryRun, UnitaryScenario,
    CONVERGENCE_TOL,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{pauli, DensityMatrix, DimSignature, Operator, Pauli};
use crate::linalg::krylov::{expm_action, KrylovConfig, StepMemory, Structure};
use crate::linalg::{CsrBuilder, CsrMatrix};
use crate::lindblad::spin_boson::Coupling;
use crate::lindblad::Trajectory;
use crate::C64;
use star::{build_star_hamiltonian, Channel, StarSpec};

/// `H` on the span of `|1, vac>` and `|0, 1_k>`, in that order: the exact
/// restriction of `omega sigma_z + sum_k w_k b_k^+ b_k + sum_k g_k
/// (sigma_+ b_k + sigma_- b_k^+)`, with diagonal `(omega, w_k - omega)`.
pub fn build_rwa_hamiltonian(omega: f64, bath: &DiscretizedBath) -> Operator {
    let n = bath.len() + 1;
    let mut b = CsrBuilder::new(n, n);
    b.push(0, C64::new(omega, 0.0));
    for (k, m) in bath.modes().iter().enumerate() {
        b.push(k + 1, C64::new(m.g, 0.0));
    }
    b.finish_row();
    for (k, m) in bath.modes().iter().enumerate() {
        b.push(0, C64::new(m.g, 0.0));
        b.push(k + 1, C64::new(m.omega - omega, 0.0));
        b.finish_row();
    }
    let sig = DimSignature::single(n).expect("sector dimension");
    Operator::from_csr(sig, b.build()).expect("square")
}

/// Qubit (basis `|0>, |1>`, excitation counts 0 and 1) coupled to the bath
/// in the excitation-truncated basis.
pub fn build_truncated_hamiltonian(
    omega: f64,
    bath: &DiscretizedBath,
    coupling: Coupling,
    k_max: usize,
    sector: Option<Parity>,
) -> Result<(ExcitationBasis, Operator)> {
    build_truncated_hamiltonian_with_limit(omega, bath, coupling, k_max, sector, DEFAULT_BASIS_LIMIT)
}

pub fn build_truncated_hamiltonian_with_limit(
    omega: f64,
    bath: &DiscretizedBath,
    coupling: Coupling,
    k_max: usize,
    sector: Option<Parity>,
    limit: usize,
) -> Result<(ExcitationBasis, Operator)> {
    if k_max < 1 {
        return Err(Error::InvalidTruncation("k_max must be >= 1".into()));
    }
    let basis = ExcitationBasis::with_limit(vec![0, 1], bath.len(), k_max, sector, limit)?;
    let head_op = match coupling {
        Coupling::Rwa => pauli(Pauli::Minus),
        Coupling::SigmaX => pauli(Pauli::X),
    };
    let spec = StarSpec {
        head_h: pauli(Pauli::Z).scale_re(omega).to_csr(),
        frequencies: bath.modes().iter().map(|m| m.omega).collect(),
        channels: vec![Channel {
            head_op: head_op.to_csr(),
            modes: bath.modes().iter().enumerate().map(|(k, m)| (k, C64::new(m.g, 0.0))).collect(),
        }],
    };
    let h = build_star_hamiltonian(&basis, &spec)?;
    let op = Operator::from_csr(DimSignature::single(basis.dim())?, h)?;
    Ok((basis, op))
}

/// `|qubit> (x) vacuum` in the basis, `qubit` given in `(|0>, |1>)` amplitudes.
pub fn product_vacuum_state(basis: &ExcitationBasis, qubit: [C64; 2]) -> Result<DVector<C64>> {
    let mut psi = DVector::zeros(basis.dim());
    for (h, amp) in qubit.iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let i = basis
            .vacuum_index(h)
            .ok_or_else(|| Error::InvalidArgument(format!("qubit level {h} with empty bath is outside the basis sector")))?;
        psi[i] = *amp;
    }
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("qubit amplitudes have norm {n}")));
    }
    Ok(psi)
}

pub const NORM_TOL: f64 = 1e-10;

/// `exp(-i H t) psi0` on the grid by Lanczos substeps.
pub fn schrodinger_propagate(
    h: &Operator,
    psi0: &DVector<C64>,
    t_grid: &[f64],
    cfg: &KrylovConfig,
) -> Result<Vec<DVector<C64>>> {
    let mut out = Vec::with_capacity(t_grid.len());
    schrodinger_visit(h, psi0, t_grid, cfg, |_, psi| {
        out.push(DVector::from_column_slice(psi));
        Ok(())
    })?;
    Ok(out)
}

/// As [`schrodinger_propagate`], handing each sample to `visit` instead of
/// keeping it.
pub fn schrodinger_visit<F>(h: &Operator, psi0: &DVector<C64>, t_grid: &[f64], cfg: &KrylovConfig, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &[C64]) -> Result<()>,
{
    if psi0.len() != h.dim() {
        return Err(Error::Signature(format!("state of length {} for an operator of dimension {}", psi0.len(), h.dim())));
    }
    if (psi0.norm() - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("initial state has norm {}", psi0.norm())));
    }
    crate::lindblad::check_grid(t_grid, false)?;
    let csr = h.to_csr();
    let mut memory = StepMemory::default();
    let mut current: Vec<C64> = psi0.as_slice().to_vec();
    let mut t_prev = 0.0;
    for (i, &t) in t_grid.iter().enumerate() {
        let dt = t - t_prev;
        current = match expm_action(&csr, C64::new(0.0, -1.0), Structure::Hermitian, &current, dt, cfg, &mut memory, t_prev) {
            Ok(v) => v,
            Err(Error::Breakdown { .. }) => {
                // retry once from scratch with a smaller subspace step
                let mut retry = StepMemory { tau: Some(dt / 16.0), substeps: memory.substeps };
                let r = expm_action(&csr, C64::new(0.0, -1.0), Structure::Hermitian, &current, dt, cfg, &mut retry, t_prev)?;
                memory = retry;
                r
            }
            Err(e) => return Err(e),
        };
        visit(i, &current)?;
        t_prev = t;
    }
    Ok(())
}

/// Reduced head-factor states along a unitary run.
pub fn reduced_head_trajectory(
    states: &[DVector<C64>],
    basis: &ExcitationBasis,
    head_sig: DimSignature,
    t_grid: &[f64],
) -> Result<Trajectory> {
    if head_sig.total() != basis.head_dim() {
        return Err(Error::Signature(format!("head signature {head_sig} vs head dimension {}", basis.head_dim())));
    }
    let reduced = states
        .iter()
        .map(|psi| DensityMatrix::new_unchecked(head_sig.clone(), star::reduce_to_head(basis, psi)))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(t_grid.to_vec(), reduced)
}

pub fn reduced_qubit_trajectory(states: &[DVector<C64>], basis: &ExcitationBasis, t_grid: &[f64]) -> Result<Trajectory> {
    reduced_head_trajectory(states, basis, DimSignature::single(2)?, t_grid)
}

/// Single-excitation sector states `(a_e, a_1..a_N)` to qubit density
/// matrices; the missing ground-state-with-vacuum amplitude is zero.
pub fn reduced_qubit_from_sector(states: &[DVector<C64>], t_grid: &[f64]) -> Result<Trajectory> {
    let sig = DimSignature::single(2)?;
    let reduced = states
        .iter()
        .map(|psi| {
            let pe = psi[0].norm_sqr();
            let pg: f64 = psi.iter().skip(1).map(|a| a.norm_sqr()).sum();
            let m = DMatrix::from_row_slice(2, 2, &[C64::new(pg, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(pe, 0.0)]);
            DensityMatrix::new_unchecked(sig.clone(), m)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(t_grid.to_vec(), reduced)
}

/// `<psi|D|psi>` for a diagonal operator.
pub fn diagonal_expectation(diag: &[f64], psi: &DVector<C64>) -> f64 {
    diag.iter().zip(psi.iter()).map(|(d, a)| d * a.norm_sqr()).sum()
}

/// Total excitation number as a diagonal sparse operator.
pub fn excitation_operator(basis: &ExcitationBasis) -> CsrMatrix {
    let d: Vec<C64> = star::excitation_numbers(basis).into_iter().map(|x| C64::new(x, 0.0)).collect();
    CsrMatrix::from_diagonal(&d)
}
