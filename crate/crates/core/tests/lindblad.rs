use nalgebra::DMatrix;
use proptest::prelude::*;
use pseudomode_core::correlation::{Pseudomode, PseudomodeSet};
use pseudomode_core::hilbert::{bosonic_ops, embed, embed_block, pauli, DensityMatrix, DimSignature, Pauli};
use pseudomode_core::lindblad::spin_boson::{excited, product_with_vacuum, spin_boson_model, Coupling};
use pseudomode_core::lindblad::{
    build_liouvillian, certify_truncation, propagate, reduced_trajectory, Method, PropagatorConfig, TruncationConfig,
};
use pseudomode_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Excited-state population of the damped Jaynes–Cummings pair from the
/// non-Hermitian effective Hamiltonian on `{|1,0>, |0,1>}`.
fn excited_population(omega: f64, eta: f64, gamma: f64, lambda: f64, t: f64) -> f64 {
    let h = DMatrix::from_row_slice(2, 2, &[c(omega, 0.0), c(lambda, 0.0), c(lambda, 0.0), c(eta - omega, -gamma / 2.0)]);
    let u = (h * c(0.0, -t)).exp();
    u[(0, 0)].norm_sqr()
}

#[test]
fn rwa_single_excitation_matches_effective_hamiltonian() {
    let (omega, eta, gamma, lambda) = (0.7, 0.9, 0.4, 0.6);
    let pm = PseudomodeSet::single(eta, gamma, lambda);
    let t: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
    for n_max in [1, 3] {
        let model = spin_boson_model(omega, &pm, Coupling::Rwa, n_max).unwrap();
        let rho0 = product_with_vacuum(&model, &excited()).unwrap();
        let traj = propagate(&model.generator().unwrap(), &rho0, &t, &PropagatorConfig::with_tolerances(1e-11, 1e-14)).unwrap();
        let sz = reduced_trajectory(&traj, &[0]).unwrap().expectation(&pauli(Pauli::Z)).unwrap();
        for (k, &ti) in t.iter().enumerate() {
            let want = 2.0 * excited_population(omega, eta, gamma, lambda, ti) - 1.0;
            assert!((sz[k].re - want).abs() < 1e-8, "n_max {n_max}, t {ti}: {} vs {want}", sz[k].re);
        }
    }
}

#[test]
fn propagation_methods_agree() {
    let pm = PseudomodeSet::new(vec![Pseudomode::real(0.5, 0.3, 0.4), Pseudomode::real(-0.8, 0.9, 0.5)]).unwrap();
    let model = spin_boson_model(0.7, &pm, Coupling::SigmaX, 3).unwrap();
    let rho0 = product_with_vacuum(&model, &excited()).unwrap();
    let gen = model.generator().unwrap();
    let t = [0.0, 1.0, 4.0, 8.0];
    let mut rk = PropagatorConfig::with_tolerances(1e-11, 1e-14);
    rk.method = Method::Rk45;
    let mut kr = rk;
    kr.method = Method::Krylov;
    kr.krylov.tol = 1e-12;
    let a = propagate(&gen, &rho0, &t, &rk).unwrap();
    let b = propagate(&gen, &rho0, &t, &kr).unwrap();
    for (x, y) in a.states().iter().zip(b.states()) {
        assert!(x.trace_distance(y).unwrap() < 1e-8);
    }
    let d = a.worst_diagnostics();
    assert!(d.trace_error < 1e-10 && d.hermiticity < 1e-10 && d.min_eigenvalue > -1e-8, "{d:?}");
}

#[test]
fn truncation_certificate_settles() {
    let pm = PseudomodeSet::single(0.7, 0.4, 0.6);
    let t: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
    let build = |n: usize| {
        let m = spin_boson_model(0.7, &pm, Coupling::SigmaX, n)?;
        let rho = product_with_vacuum(&m, &excited())?;
        Ok((m, rho))
    };
    let cfg = TruncationConfig { initial_n_max: 2, tol: 1e-4, ..TruncationConfig::default() };
    let cert = certify_truncation(build, &t, &pauli(Pauli::Z), &cfg).unwrap();
    assert!(cert.deviation <= 1e-4);
    assert!(cert.history.windows(2).all(|w| w[1].0 == 2 * w[0].0));
    assert_eq!(cert.history.last().unwrap().0, cert.n_max);

    let tight = TruncationConfig { initial_n_max: 2, tol: 1e-30, max_dim: 40, ..TruncationConfig::default() };
    assert!(certify_truncation(build, &t, &pauli(Pauli::Z), &tight).is_err());
}

#[test]
fn pure_dephasing_closed_form() {
    let sig = DimSignature::single(2).unwrap();
    let h = pauli(Pauli::Z).scale_re(0.5);
    let gen = build_liouvillian(&h, &[(pauli(Pauli::Z), 0.3)]).unwrap();
    let plus = DensityMatrix::new(sig, DMatrix::from_element(2, 2, c(0.5, 0.0))).unwrap();
    let traj = propagate(&gen, &plus, &[0.0, 1.0, 2.5], &PropagatorConfig::default()).unwrap();
    for (t, rho) in traj.t_grid().iter().zip(traj.states()) {
        // rho_01 rotates at 2 * 0.5 and decays at 2 * 0.3
        let want = C64::from_polar(0.5 * (-0.6 * t).exp(), *t);
        assert!((rho.matrix()[(0, 1)] - want).norm() < 1e-8, "t = {t}");
    }
}

fn small_model() -> impl Strategy<Value = (f64, f64, f64, f64, f64, bool)> {
    (0.0f64..1.5, -1.5f64..1.5, 0.05f64..1.5, 0.05f64..1.0, 0.0f64..1.0, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spin_boson_trajectories_stay_physical((omega, eta, gamma, lambda, theta, rwa) in small_model()) {
        let pm = PseudomodeSet::single(eta, gamma, lambda);
        let coupling = if rwa { Coupling::Rwa } else { Coupling::SigmaX };
        let model = spin_boson_model(omega, &pm, coupling, 3).unwrap();
        let (s, k) = (theta.sin(), theta.cos());
        let psi = nalgebra::DVector::from_vec(vec![c(k, 0.0), c(0.0, s)]);
        let rho_s = DensityMatrix::pure(DimSignature::single(2).unwrap(), &psi).unwrap();
        let rho0 = product_with_vacuum(&model, &rho_s).unwrap();
        let t: Vec<f64> = (0..=8).map(|i| i as f64 * 0.75).collect();
        let traj = propagate(&model.generator().unwrap(), &rho0, &t, &PropagatorConfig::default()).unwrap();
        let d = traj.worst_diagnostics();
        prop_assert!(d.trace_error <= 1e-10 && d.hermiticity <= 1e-10 && d.min_eigenvalue >= -1e-8, "{:?}", d);
        if rwa {
            // the excitation number only leaks through the damping: never grows
            let n_exc = embed_block(&pauli(Pauli::Plus).mul(&pauli(Pauli::Minus)).unwrap(), 0, model.sig())
                .unwrap()
                .add(&embed(&bosonic_ops(3).unwrap().number, 1, model.sig()).unwrap())
                .unwrap();
            let vals = traj.expectation(&n_exc).unwrap();
            prop_assert!((vals[0].re - s * s).abs() < 1e-12);
            prop_assert!(vals.windows(2).all(|w| w[1].re <= w[0].re + 1e-9));
        }
    }
}
