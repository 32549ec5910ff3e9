use nalgebra::DVector;
use pseudomode_core::bath_fit::lorentzian_spectrum;
use pseudomode_core::correlation::{correlation_from_spectrum, PseudomodeSet};
use pseudomode_core::hilbert::{pauli, Pauli};
use pseudomode_core::lindblad::spin_boson::Coupling;
use pseudomode_core::linalg::krylov::KrylovConfig;
use pseudomode_core::unitary::{
    build_rwa_hamiltonian, build_truncated_hamiltonian, certify_bath_convergence, discretize_bath, excitation_operator,
    product_vacuum_state, reduced_qubit_from_sector, run_unitary, schrodinger_propagate, BathMode, DiscretizedBath, ExcitationBasis,
    Parity, Rule, UnitaryScenario,
};
use pseudomode_core::unitary::star::reduce_to_head;
use pseudomode_core::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const EXCITED: [C64; 2] = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt).collect()
}

#[test]
fn resonant_single_mode_rabi() {
    // |1, 0> and |0, 1_k> are degenerate when w_k = 2 omega
    let (omega, g) = (0.7, 0.3);
    let bath = DiscretizedBath::from_modes(vec![BathMode { omega: 2.0 * omega, g }], (0.0, 2.0), Rule::Uniform).unwrap();
    let (basis, h) = build_truncated_hamiltonian(omega, &bath, Coupling::Rwa, 1, None).unwrap();
    let psi0 = product_vacuum_state(&basis, EXCITED).unwrap();
    let t = grid(41, 0.25);
    let states = schrodinger_propagate(&h, &psi0, &t, &KrylovConfig::default()).unwrap();
    let sz = pauli(Pauli::Z).to_dense();
    for (&ti, psi) in t.iter().zip(&states) {
        let rho = reduce_to_head(&basis, psi);
        let got = (sz.clone() * rho).trace().re;
        assert!((got - (2.0 * g * ti).cos()).abs() < 1e-9, "t = {ti}");
    }
}

#[test]
fn rwa_sector_matches_truncated_basis() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let bath = discretize_bath(&spec, None, 60, Rule::Uniform).unwrap();
    let t = grid(21, 0.5);
    let sector = build_rwa_hamiltonian(0.7, &bath);
    let mut e = DVector::zeros(61);
    e[0] = c(1.0, 0.0);
    let kr = KrylovConfig { tol: 1e-12, ..KrylovConfig::default() };
    let a = reduced_qubit_from_sector(&schrodinger_propagate(&sector, &e, &t, &kr).unwrap(), &t).unwrap();
    let (basis, h) = build_truncated_hamiltonian(0.7, &bath, Coupling::Rwa, 2, None).unwrap();
    let psi0 = product_vacuum_state(&basis, EXCITED).unwrap();
    let states = schrodinger_propagate(&h, &psi0, &t, &kr).unwrap();
    for (x, psi) in a.states().iter().zip(&states) {
        let rho = reduce_to_head(&basis, psi);
        let d = x.matrix().iter().zip(rho.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(d < 1e-9);
    }
}

#[test]
fn sigma_x_coupling_is_hermitian_and_parity_closed() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let bath = discretize_bath(&spec, None, 12, Rule::Uniform).unwrap();
    let (full, h) = build_truncated_hamiltonian(0.7, &bath, Coupling::SigmaX, 3, None).unwrap();
    assert!(h.hermiticity_residual() == 0.0);
    let (odd, ho) = build_truncated_hamiltonian(0.7, &bath, Coupling::SigmaX, 3, Some(Parity::Odd)).unwrap();
    let (even, _) = build_truncated_hamiltonian(0.7, &bath, Coupling::SigmaX, 3, Some(Parity::Even)).unwrap();
    assert_eq!(odd.dim() + even.dim(), full.dim());
    // the odd sector propagates the excited start exactly like the full basis
    let t = grid(6, 1.0);
    let a = schrodinger_propagate(&h, &product_vacuum_state(&full, EXCITED).unwrap(), &t, &KrylovConfig::default()).unwrap();
    let b = schrodinger_propagate(&ho, &product_vacuum_state(&odd, EXCITED).unwrap(), &t, &KrylovConfig::default()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let (rx, ry) = (reduce_to_head(&full, x), reduce_to_head(&odd, y));
        assert!(rx.iter().zip(ry.iter()).all(|(p, q)| (p - q).norm() < 1e-9));
    }
}

#[test]
fn excitation_number_commutes_with_rwa() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let bath = discretize_bath(&spec, None, 10, Rule::Uniform).unwrap();
    let (basis, h) = build_truncated_hamiltonian(0.7, &bath, Coupling::Rwa, 3, None).unwrap();
    let n = excitation_operator(&basis);
    let hc = h.to_csr();
    let comm = hc.matmul(&n).add_scaled(&n.matmul(&hc), c(-1.0, 0.0));
    assert!(comm.max_abs() < 1e-14);
    let (basis_x, hx) = build_truncated_hamiltonian(0.7, &bath, Coupling::SigmaX, 3, None).unwrap();
    let nx = excitation_operator(&basis_x);
    let hxc = hx.to_csr();
    assert!(hxc.matmul(&nx).add_scaled(&nx.matmul(&hxc), c(-1.0, 0.0)).max_abs() > 0.1);
}

#[test]
fn rwa_cutoff_is_irrelevant_for_one_excitation() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let scn = UnitaryScenario::new(0.7, spec, Coupling::Rwa, EXCITED, grid(21, 0.5));
    let a = run_unitary(&scn, 100, 1).unwrap();
    let b = run_unitary(&scn, 100, 2).unwrap();
    let d = a.sz.iter().zip(&b.sz).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d < 1e-10, "{d}");
    assert!(a.norm_error < 1e-10 && a.excitation_drift < 1e-10);
    assert!(b.norm_error < 1e-10 && b.excitation_drift < 1e-10);
}

#[test]
fn decoupled_qubit_precesses_freely() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [c(s, 0.0), c(s, 0.0)];
    let t = grid(21, 0.5);
    let scn = UnitaryScenario::new(0.7, spec, Coupling::SigmaX, plus, t.clone());
    let report = certify_bath_convergence(&scn, &[40, 80], &[1, 2]).unwrap();
    assert!(report.certified);
    assert!(report.refinements.iter().skip(1).all(|r| r.dev_sz.unwrap() < 1e-12 && r.dev_sx.unwrap() < 1e-12));
    let run = report.finest.unwrap();
    for (k, &ti) in t.iter().enumerate() {
        // H = omega sigma_z: <sigma_x> = cos(2 omega t)
        assert!((run.sx[k] - (1.4 * ti).cos()).abs() < 1e-9);
        assert!(run.sz[k].abs() < 1e-12);
    }
}

#[test]
fn recurrence_time_bounds_the_window() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let scn = UnitaryScenario::new(0.7, spec, Coupling::Rwa, EXCITED, grid(101, 0.5));
    // 10 modes over 20 units of bandwidth recur after about 2 pi
    assert!(matches!(run_unitary(&scn, 10, 1), Err(Error::InvalidArgument(_))));
}

#[test]
fn oversized_basis_stops_the_study() {
    let spec = lorentzian_spectrum(&PseudomodeSet::single(0.7, 0.4, 0.6));
    let scn = UnitaryScenario::new(0.7, spec, Coupling::SigmaX, EXCITED, grid(11, 0.5));
    let report = certify_bath_convergence(&scn, &[20], &[1, 40]).unwrap();
    assert!(!report.certified);
    assert!(report.refinements.last().unwrap().failure.is_some());
    assert!(report.finest.is_some());
    assert!(ExcitationBasis::new(vec![0, 1], 2000, 40, None).is_err());
}

#[test]
fn discretization_preserves_the_window_mass() {
    let pm = PseudomodeSet::single(0.7, 0.4, 0.6);
    let spec = lorentzian_spectrum(&pm);
    let bath = discretize_bath(&spec, None, 400, Rule::Uniform).unwrap();
    let inside = 0.36 * (1.0 - bath.tail_mass());
    assert!((bath.total_weight() - inside).abs() < 1e-12);
    let (lo, hi) = bath.window();
    assert!((lo - (0.7 - 10.0)).abs() < 1e-12 && (hi - (0.7 + 10.0)).abs() < 1e-12);
    // the discrete correlation approximates the band-limited transform
    let analytic_tail: f64 = 0.36 * bath.tail_mass();
    let err = grid(101, 0.1)
        .iter()
        .map(|&t| (bath.correlation_at(t) - pm.correlation_at(t)).norm())
        .fold(0.0, f64::max);
    assert!(err <= analytic_tail + 1e-3, "{err} vs tail {analytic_tail}");
    let t = grid(101, 0.1);
    let banded = correlation_from_spectrum(&spec.restricted(lo, hi).unwrap(), &t).unwrap();
    let err = t.iter().zip(&banded.values).map(|(&ti, v)| (bath.correlation_at(ti) - v).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-3, "{err}");
}
