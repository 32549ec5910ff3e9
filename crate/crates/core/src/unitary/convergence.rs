//! Refinement study of the discretized-bath reference in `(N, K_max)`.

use nalgebra::DVector;

use super::bath::{discretize_bath_with_tol, DiscretizedBath, Rule, DEFAULT_TAIL_TOL};
use super::basis::Parity;
use super::{build_truncated_hamiltonian, product_vacuum_state, schrodinger_visit, star};
use crate::bath_fit::SpectrumSpec;
use crate::error::{Error, Result};
use crate::hilbert::{pauli, DensityMatrix, DimSignature, Operator, Pauli};
use crate::linalg::krylov::KrylovConfig;
use crate::lindblad::spin_boson::Coupling;
use crate::lindblad::Trajectory;
use crate::C64;

/// Certification threshold on successive-refinement deviations.
pub const CONVERGENCE_TOL: f64 = 5e-3;

#[derive(Clone, Debug)]
pub struct UnitaryScenario {
    pub omega: f64,
    pub spectrum: SpectrumSpec,
    pub coupling: Coupling,
    /// Initial qubit amplitudes in `(|0>, |1>)`; the bath starts in vacuum.
    pub qubit: [C64; 2],
    pub t_grid: Vec<f64>,
    pub window: Option<(f64, f64)>,
    pub rule: Rule,
    pub tail_tol: f64,
    pub krylov: KrylovConfig,
}

impl UnitaryScenario {
    pub fn new(omega: f64, spectrum: SpectrumSpec, coupling: Coupling, qubit: [C64; 2], t_grid: Vec<f64>) -> Self {
        Self {
            omega,
            spectrum,
            coupling,
            qubit,
            t_grid,
            window: None,
            rule: Rule::Uniform,
            tail_tol: DEFAULT_TAIL_TOL,
            krylov: KrylovConfig::default(),
        }
    }

    /// The conserved parity sector of a basis-state start under sigma_x
    /// coupling.
    fn sector(&self) -> Option<Parity> {
        if self.coupling != Coupling::SigmaX {
            return None;
        }
        match (self.qubit[0].norm() == 0.0, self.qubit[1].norm() == 0.0) {
            (true, false) => Some(Parity::Odd),
            (false, true) => Some(Parity::Even),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct UnitaryRun {
    pub n: usize,
    pub k_max: usize,
    pub dim: usize,
    pub tail_mass: f64,
    pub recurrence_time: f64,
    pub trajectory: Trajectory,
    pub sz: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    /// `max_t | ||psi(t)|| - 1 |`.
    pub norm_error: f64,
    /// `max_t |<H>(t) - <H>(0)|`.
    pub energy_drift: f64,
    /// `max_t |<N_exc>(t) - <N_exc>(0)|`.
    pub excitation_drift: f64,
}

fn expectation(h: &Operator, psi: &DVector<C64>) -> f64 {
    psi.dotc(&h.apply(psi)).re
}

pub fn discretize(scn: &UnitaryScenario, n: usize) -> Result<DiscretizedBath> {
    discretize_bath_with_tol(&scn.spectrum, scn.window, n, scn.rule, scn.tail_tol)
}

/// One propagated `(N, K_max)` cell.
pub fn run_unitary(scn: &UnitaryScenario, n: usize, k_max: usize) -> Result<UnitaryRun> {
    let bath = discretize(scn, n)?;
    let t_end = scn.t_grid.last().copied().unwrap_or(0.0);
    let recurrence_time = bath.recurrence_time();
    if t_end >= recurrence_time {
        return Err(Error::InvalidArgument(format!(
            "t = {t_end} reaches the bath recurrence time {recurrence_time:.4}; increase N"
        )));
    }
    let (basis, h) = build_truncated_hamiltonian(scn.omega, &bath, scn.coupling, k_max, scn.sector())?;
    let psi0 = product_vacuum_state(&basis, scn.qubit)?;
    let exc = star::excitation_numbers(&basis);
    let e0 = expectation(&h, &psi0);
    let x0 = super::diagonal_expectation(&exc, &psi0);
    let (mut norm_error, mut energy_drift, mut excitation_drift) = (0.0f64, 0.0f64, 0.0f64);
    let head_sig = DimSignature::single(2)?;
    let mut reduced = Vec::with_capacity(scn.t_grid.len());
    schrodinger_visit(&h, &psi0, &scn.t_grid, &scn.krylov, |_, v| {
        let psi = DVector::from_column_slice(v);
        norm_error = norm_error.max((psi.norm() - 1.0).abs());
        energy_drift = energy_drift.max((expectation(&h, &psi) - e0).abs());
        excitation_drift = excitation_drift.max((super::diagonal_expectation(&exc, &psi) - x0).abs());
        reduced.push(DensityMatrix::new_unchecked(head_sig.clone(), star::reduce_to_head(&basis, &psi))?);
        Ok(())
    })?;
    let trajectory = Trajectory::new(scn.t_grid.clone(), reduced)?;
    let real = |p| -> Result<Vec<f64>> { Ok(trajectory.expectation(&pauli(p))?.iter().map(|c| c.re).collect()) };
    let (sz, sx, sy) = (real(Pauli::Z)?, real(Pauli::X)?, real(Pauli::Y)?);
    Ok(UnitaryRun {
        n,
        k_max,
        dim: basis.dim(),
        tail_mass: bath.tail_mass(),
        recurrence_time,
        trajectory,
        sz,
        sx,
        sy,
        norm_error,
        energy_drift,
        excitation_drift,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathRefinement {
    pub n: usize,
    pub k_max: usize,
    pub dim: usize,
    /// Deviations from the previous cell of the path; absent for the first.
    pub dev_sz: Option<f64>,
    pub dev_sx: Option<f64>,
    /// Why the cell could not be run, when it could not.
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct BathConvergenceReport {
    pub refinements: Vec<BathRefinement>,
    pub certified: bool,
    /// The finest cell that ran.
    pub finest: Option<UnitaryRun>,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Doubles `N` over `n_list` at the first `K_max`, then raises `K_max` over
/// the rest of `k_list` at the last `N`. Certified when the last step in
/// each direction moved `<sigma_z>` and `<sigma_x>` by at most
/// [`CONVERGENCE_TOL`]. A cell that exceeds resources ends the study.
pub fn certify_bath_convergence(scn: &UnitaryScenario, n_list: &[usize], k_list: &[usize]) -> Result<BathConvergenceReport> {
    if n_list.is_empty() || k_list.is_empty() {
        return Err(Error::InvalidArgument("empty refinement lists".into()));
    }
    let n_last = *n_list.last().unwrap();
    let mut path: Vec<(usize, usize)> = n_list.iter().map(|&n| (n, k_list[0])).collect();
    path.extend(k_list[1..].iter().map(|&k| (n_last, k)));
    let n_steps = n_list.len() - 1;

    let mut refinements = Vec::with_capacity(path.len());
    let mut prev: Option<UnitaryRun> = None;
    let mut ok = vec![false; path.len()];
    let mut completed = true;
    for (i, &(n, k)) in path.iter().enumerate() {
        match run_unitary(scn, n, k) {
            Ok(run) => {
                let (dz, dx) = match &prev {
                    Some(p) => (Some(max_dev(&p.sz, &run.sz)), Some(max_dev(&p.sx, &run.sx))),
                    None => (None, None),
                };
                ok[i] = matches!((dz, dx), (Some(a), Some(b)) if a <= CONVERGENCE_TOL && b <= CONVERGENCE_TOL);
                refinements.push(BathRefinement { n, k_max: k, dim: run.dim, dev_sz: dz, dev_sx: dx, failure: None });
                prev = Some(run);
            }
            Err(e @ (Error::DimensionLimit { .. } | Error::Breakdown { .. })) => {
                refinements.push(BathRefinement { n, k_max: k, dim: 0, dev_sz: None, dev_sx: None, failure: Some(e.to_string()) });
                completed = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    // the last N step and the last K step must both be converged
    let n_ok = n_steps == 0 || ok[n_steps];
    let k_ok = k_list.len() == 1 || ok[path.len() - 1];
    let single = path.len() == 1;
    let certified = completed && !single && n_ok && k_ok;
    Ok(BathConvergenceReport { refinements, certified, finest: prev })
}
