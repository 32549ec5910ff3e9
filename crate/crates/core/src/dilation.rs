//! Unitary dilation of a Lindblad model: each damped channel `(L_j, gamma_j)`
//! is coupled to a flat band of `M` bosonic modes of total width `W`,
//!
//! `V = sum_j sum_m i sqrt(gamma_j / 2 pi) sqrt(W / M) (L_j b_{jm}^+ - L_j^+ b_{jm})`,
//!
//! and the bands start in vacuum. As `W` and `M / W` grow the reduced
//! dynamics approaches the Lindblad solution.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;

use crate::correlation::{correlation_distance, two_time_lindblad, CorrelationTable, DistanceReport, Provenance};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, DimSignature, Operator};
use crate::linalg::krylov::KrylovConfig;
use crate::linalg::CsrMatrix;
use crate::lindblad::{build_hamiltonian, propagate, EnvironmentModel, LindbladModel, PropagatorConfig};
use crate::unitary::star::{build_star_hamiltonian, reduce_to_head, Channel, StarSpec};
use crate::unitary::{reduced_head_trajectory, schrodinger_propagate, ExcitationBasis};
use crate::C64;

/// Threshold on the best refinement error for a certified study.
pub const CERTIFY_TOL: f64 = 1e-3;

/// Allowed relative growth of the error between successive refinements.
pub const MONOTONE_SLACK: f64 = 0.10;

#[derive(Clone, Debug)]
pub struct DilationConfig {
    pub bandwidth: f64,
    pub modes_per_channel: usize,
    /// Band centre of each damped channel.
    pub centers: Vec<f64>,
}

impl DilationConfig {
    pub fn new(bandwidth: f64, modes_per_channel: usize, centers: Vec<f64>) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if modes_per_channel < 1 {
            return Err(Error::InvalidArgument("need at least one mode per channel".into()));
        }
        Ok(Self { bandwidth, modes_per_channel, centers })
    }

    /// `sqrt(gamma / 2 pi) sqrt(W / M)`.
    pub fn coupling(&self, gamma: f64) -> f64 {
        (gamma / (2.0 * PI)).sqrt() * (self.bandwidth / self.modes_per_channel as f64).sqrt()
    }

    pub fn frequencies(&self, channel: usize) -> Vec<f64> {
        let m = self.modes_per_channel;
        let dw = self.bandwidth / m as f64;
        let c = self.centers[channel];
        (0..m).map(|k| c - 0.5 * self.bandwidth + (k as f64 + 0.5) * dw).collect()
    }

    /// Revival time of the discrete bands, `2 pi M / W`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI * self.modes_per_channel as f64 / self.bandwidth
    }
}

/// Excitation count of each product basis state: the sum of local level
/// indices, which is the qubit bit plus the Fock occupations.
pub fn ladder_excitations(sig: &DimSignature) -> Vec<usize> {
    let dims = sig.dims();
    (0..sig.total())
        .map(|mut i| {
            let mut e = 0;
            for &d in dims.iter().rev() {
                e += i % d;
                i /= d;
            }
            e
        })
        .collect()
}

/// A head Hamiltonian plus damped channels, all on the same head space.
struct Head {
    sig: DimSignature,
    h: Operator,
    channels: Vec<(Operator, f64)>,
}

fn dilate(head: &Head, cfg: &DilationConfig, k_max: usize) -> Result<(ExcitationBasis, Operator)> {
    if cfg.centers.len() != head.channels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} band centres for {} damped channels",
            cfg.centers.len(),
            head.channels.len()
        )));
    }
    let m = cfg.modes_per_channel;
    let modes = m * head.channels.len();
    let basis = ExcitationBasis::new(ladder_excitations(&head.sig), modes, k_max, None).map_err(|e| match e {
        Error::DimensionLimit { dim, limit, .. } => Error::DimensionLimit {
            dim,
            limit,
            hint: format!("reduce modes_per_channel below {m}"),
        },
        other => other,
    })?;
    let mut frequencies = Vec::with_capacity(modes);
    let mut channels = Vec::with_capacity(head.channels.len());
    for (j, (l, gamma)) in head.channels.iter().enumerate() {
        frequencies.extend(cfg.frequencies(j));
        let c = C64::new(0.0, cfg.coupling(*gamma));
        channels.push(Channel { head_op: l.to_csr(), modes: (j * m..(j + 1) * m).map(|k| (k, c)).collect() });
    }
    let spec = StarSpec { head_h: head.h.to_csr(), frequencies, channels };
    let h = build_star_hamiltonian(&basis, &spec)?;
    let op = Operator::from_csr(DimSignature::single(basis.dim())?, h)?;
    Ok((basis, op))
}

/// `H_SR + H_E + V` on `S (x) R (x) E`, excitation-truncated at `k_max`.
pub fn build_dilation(model: &LindbladModel, cfg: &DilationConfig, k_max: usize) -> Result<(ExcitationBasis, Operator)> {
    let head = Head { sig: model.sig().clone(), h: build_hamiltonian(model)?, channels: model.full_lindblad_ops()? };
    dilate(&head, cfg, k_max)
}

/// The same construction for an environment alone (`R (x) E`).
pub fn build_environment_dilation(env: &EnvironmentModel, cfg: &DilationConfig, k_max: usize) -> Result<(ExcitationBasis, Operator)> {
    let head = Head { sig: env.sig().clone(), h: env.h_r().clone(), channels: env.lindblad_ops().to_vec() };
    dilate(&head, cfg, k_max)
}

/// Embeds a head vector with all bands empty.
pub fn head_state_with_vacuum(basis: &ExcitationBasis, head_psi: &DVector<C64>) -> Result<DVector<C64>> {
    if head_psi.len() != basis.head_dim() {
        return Err(Error::Signature(format!("head vector of length {} for head dimension {}", head_psi.len(), basis.head_dim())));
    }
    let mut psi = DVector::zeros(basis.dim());
    for (h, a) in head_psi.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let i = basis
            .vacuum_index(h)
            .ok_or_else(|| Error::InvalidArgument(format!("head state {h} exceeds the excitation cutoff")))?;
        psi[i] = *a;
    }
    Ok(psi)
}

/// `(A (x) I_E) psi`, dropping components that leave the truncated basis.
pub fn apply_head_operator(basis: &ExcitationBasis, op: &CsrMatrix, psi: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(basis.dim());
    for &(h, k, start) in basis.blocks() {
        for (h2, v) in op.row(h) {
            // out[(h, m)] += A[h, h2] psi[(h2, m)]
            if let Some(src) = basis.block_offset(h2, k) {
                for r in 0..basis.block_len(k) {
                    out[start + r] += v * psi[src + r];
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceCell {
    pub bandwidth: f64,
    pub modes_per_channel: usize,
    /// Largest trace distance of the reduced states over the grid.
    pub err_state: Option<f64>,
    /// Largest deviation of the correlation function over the grid.
    pub err_corr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub cells: Vec<ConvergenceCell>,
    pub certified: bool,
}

impl ConvergenceReport {
    fn assess(cells: Vec<ConvergenceCell>, pick: impl Fn(&ConvergenceCell) -> Option<f64>) -> Self {
        let errs: Vec<f64> = cells.iter().filter_map(&pick).collect();
        let best = errs.iter().copied().fold(f64::INFINITY, f64::min);
        let trend = errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK));
        let certified = !errs.is_empty() && best <= CERTIFY_TOL && trend;
        Self { cells, certified }
    }

    /// `W,M,err_state,err_corr`; missing metrics are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "W,M,err_state,err_corr")?;
        let f = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for c in &self.cells {
            writeln!(w, "{:.16e},{},{},{}", c.bandwidth, c.modes_per_channel, f(c.err_state), f(c.err_corr))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Lemma1Scenario {
    pub model: LindbladModel,
    /// Pure initial state on `S (x) R`.
    pub psi0: DVector<C64>,
    pub t_grid: Vec<f64>,
    /// Excitation cutoff of the dilated basis.
    pub k_max: usize,
    pub propagator: PropagatorConfig,
    pub krylov: KrylovConfig,
}

/// Largest trace distance between the dilated and Lindblad `S-R` states.
pub fn lemma1_error(scn: &Lemma1Scenario, cfg: &DilationConfig) -> Result<f64> {
    let rho0 = DensityMatrix::pure(scn.model.sig().clone(), &scn.psi0)?;
    let lind = propagate(&scn.model.generator()?, &rho0, &scn.t_grid, &scn.propagator)?;
    let (basis, h) = build_dilation(&scn.model, cfg, scn.k_max)?;
    let psi = head_state_with_vacuum(&basis, &(&scn.psi0 / C64::new(scn.psi0.norm(), 0.0)))?;
    let states = schrodinger_propagate(&h, &psi, &scn.t_grid, &scn.krylov)?;
    let dil = reduced_head_trajectory(&states, &basis, scn.model.sig().clone(), &scn.t_grid)?;
    let mut worst: f64 = 0.0;
    for (a, b) in lind.states().iter().zip(dil.states()) {
        worst = worst.max(a.trace_distance(b)?);
    }
    Ok(worst)
}

/// Runs the refinement path `(W_i, M_i)`.
pub fn lemma1_check(scn: &Lemma1Scenario, centers: &[f64], path: &[(f64, usize)]) -> Result<ConvergenceReport> {
    let mut cells = Vec::with_capacity(path.len());
    for &(w, m) in path {
        let cfg = DilationConfig::new(w, m, centers.to_vec())?;
        cells.push(ConvergenceCell { bandwidth: w, modes_per_channel: m, err_state: Some(lemma1_error(scn, &cfg)?), err_corr: None });
    }
    Ok(ConvergenceReport::assess(cells, |c| c.err_state))
}

#[derive(Clone, Debug)]
pub struct Lemma2Result {
    pub dilated: CorrelationTable,
    pub lindblad: CorrelationTable,
    pub distance: DistanceReport,
}

/// `C^X(t + s, s)` from the dilated `R-E` evolution of a pure initial
/// environment state, compared with the regression result.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_check(
    env: &EnvironmentModel,
    psi_r0: &DVector<C64>,
    f_j: &Operator,
    f_jp: &Operator,
    s: f64,
    t_grid: &[f64],
    cfg: &DilationConfig,
    k_max: usize,
    krylov: &KrylovConfig,
    propagator: &PropagatorConfig,
) -> Result<Lemma2Result> {
    let rho0 = DensityMatrix::pure(env.sig().clone(), psi_r0)?;
    let lindblad = two_time_lindblad(env, &rho0, f_j, f_jp, s, t_grid, propagator)?;
    let (basis, h) = build_environment_dilation(env, cfg, k_max)?;
    let psi0 = head_state_with_vacuum(&basis, &(psi_r0 / C64::new(psi_r0.norm(), 0.0)))?;
    let psi_s = if s == 0.0 {
        psi0
    } else {
        schrodinger_propagate(&h, &psi0, &[s], krylov)?.pop().expect("one sample")
    };
    // e^{-iHt} F' |psi(s)><psi(s)| e^{iHt} = |phi(t)><chi(t)|
    let phi0 = apply_head_operator(&basis, &f_jp.to_csr(), &psi_s);
    let grid_has_zero = t_grid.first() == Some(&0.0);
    let mut grid = t_grid.to_vec();
    if !grid_has_zero {
        grid.insert(0, 0.0);
    }
    let evolve = |v: &DVector<C64>| -> Result<Vec<DVector<C64>>> {
        let n = v.norm();
        if n == 0.0 {
            return Ok(vec![v.clone(); grid.len()]);
        }
        let unit = v / C64::new(n, 0.0);
        Ok(schrodinger_propagate(&h, &unit, &grid, krylov)?
            .into_iter()
            .map(|x| x * C64::new(n, 0.0))
            .collect())
    };
    let phis = evolve(&phi0)?;
    let chis = evolve(&psi_s)?;
    let fj = f_j.to_csr();
    let skip = usize::from(!grid_has_zero);
    let values = phis
        .iter()
        .zip(&chis)
        .skip(skip)
        .map(|(phi, chi)| chi.dotc(&apply_head_operator(&basis, &fj, phi)))
        .collect();
    let mut dilated = CorrelationTable::new(t_grid.to_vec(), s, values, Provenance::DilationNumeric)?;
    dilated.error_estimate = None;
    let distance = correlation_distance(&dilated, &lindblad)?;
    Ok(Lemma2Result { dilated, lindblad, distance })
}

/// Lemma-2 deviations along a refinement path.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_study(
    env: &EnvironmentModel,
    psi_r0: &DVector<C64>,
    f_j: &Operator,
    f_jp: &Operator,
    s: f64,
    t_grid: &[f64],
    centers: &[f64],
    path: &[(f64, usize)],
    k_max: usize,
    krylov: &KrylovConfig,
    propagator: &PropagatorConfig,
) -> Result<ConvergenceReport> {
    let mut cells = Vec::with_capacity(path.len());
    for &(w, m) in path {
        let cfg = DilationConfig::new(w, m, centers.to_vec())?;
        let r = lemma2_check(env, psi_r0, f_j, f_jp, s, t_grid, &cfg, k_max, krylov, propagator)?;
        cells.push(ConvergenceCell { bandwidth: w, modes_per_channel: m, err_state: None, err_corr: Some(r.distance.max_abs) });
    }
    Ok(ConvergenceReport::assess(cells, |c| c.err_corr))
}

/// Reduced `S-R` state of a dilated pure state.
pub fn reduce_dilated(basis: &ExcitationBasis, psi: &DVector<C64>, sig: DimSignature) -> Result<DensityMatrix> {
    DensityMatrix::new_unchecked(sig, reduce_to_head(basis, psi))
}
