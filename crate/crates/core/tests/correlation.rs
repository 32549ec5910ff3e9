use std::sync::Arc;

use pseudomode_core::bath_fit::{
    fit_correlation, lorentzian_spectrum, prony_decompose, to_pseudomodes, RefineConfig, SpectrumSpec,
};
use pseudomode_core::correlation::{
    correlation_distance, correlation_from_spectrum, pseudomode_correlation_analytic, two_time_lindblad, CorrelationTable,
    Provenance, Pseudomode, PseudomodeSet,
};
use pseudomode_core::hilbert::DensityMatrix;
use pseudomode_core::lindblad::spin_boson::{pseudomode_environment, vacuum};
use pseudomode_core::lindblad::PropagatorConfig;
use pseudomode_core::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt).collect()
}

fn three_modes() -> PseudomodeSet {
    PseudomodeSet::new(vec![
        Pseudomode::new(0.5, 0.3, c(0.6, 0.0)),
        Pseudomode::new(-1.2, 0.8, c(0.0, 0.4)),
        Pseudomode::new(2.0, 0.15, c(0.3, -0.3)),
    ])
    .unwrap()
}

fn direct(pm: &PseudomodeSet, t: f64) -> C64 {
    pm.modes().iter().map(|m| c(m.lambda.norm_sqr(), 0.0) * (c(-m.gamma / 2.0, -m.eta) * t).exp()).sum()
}

#[test]
fn analytic_correlation_is_the_closed_form() {
    let pm = three_modes();
    let t = grid(50, 0.3);
    let table = pseudomode_correlation_analytic(&pm, &t).unwrap();
    for (&ti, v) in t.iter().zip(&table.values) {
        assert!((v - direct(&pm, ti)).norm() < 1e-15);
    }
    assert_eq!(table.provenance, Provenance::AnalyticPseudomode);
    assert!((table.values[0] - c(pm.total_weight(), 0.0)).norm() < 1e-15);
}

#[test]
fn regression_is_offset_invariant_for_the_vacuum() {
    let pm = three_modes();
    let (env, g) = pseudomode_environment(&pm, 1).unwrap();
    let rho0 = vacuum(env.sig()).unwrap();
    let t = grid(81, 0.25);
    let cfg = PropagatorConfig::with_tolerances(1e-12, 1e-15);
    for s in [0.0, 1.5] {
        let table = two_time_lindblad(&env, &rho0, &g, &g.adjoint(), s, &t, &cfg).unwrap();
        assert_eq!(table.s_offset, s);
        for (&ti, v) in t.iter().zip(&table.values) {
            assert!((v - direct(&pm, ti)).norm() < 1e-10, "s = {s}, t = {ti}");
        }
    }
}

#[test]
fn regression_from_an_excited_environment() {
    // one quantum in the mode: <c(t) c^+(0)> = (n + 1) exp((-i eta - gamma/2) t), exact at n_max = 2
    let (eta, gamma) = (0.4, 0.5);
    let pm = PseudomodeSet::single(eta, gamma, 1.0);
    let (env, g) = pseudomode_environment(&pm, 2).unwrap();
    let rho0 = DensityMatrix::basis_state(3, 1).unwrap();
    let t = grid(41, 0.25);
    let table = two_time_lindblad(&env, &rho0, &g, &g.adjoint(), 0.0, &t, &PropagatorConfig::with_tolerances(1e-12, 1e-15)).unwrap();
    for (&ti, v) in t.iter().zip(&table.values) {
        let free = (c(-gamma / 2.0, -eta) * ti).exp();
        let want = free * 2.0;
        assert!((v - want).norm() < 1e-9, "t = {ti}: {v} vs {want}");
    }
}

#[test]
fn spectrum_transform_closes_for_several_modes() {
    let pm = three_modes();
    let t = grid(101, 0.1);
    let table = correlation_from_spectrum(&lorentzian_spectrum(&pm), &t).unwrap();
    let exact = pseudomode_correlation_analytic(&pm, &t).unwrap();
    let d = correlation_distance(&table, &exact).unwrap();
    assert!(d.max_abs < 1e-6, "{d:?}");
}

#[test]
fn tabulated_and_callable_spectra_agree() {
    let pm = PseudomodeSet::single(0.0, 1.0, 1.0);
    let lor = lorentzian_spectrum(&pm);
    let f = Arc::new(move |w: f64| 1.0 / (2.0 * std::f64::consts::PI) / (w * w + 0.25));
    let callable = SpectrumSpec::callable("lorentzian", (-200.0, 200.0), f).unwrap();
    let omega: Vec<f64> = (0..=40_000).map(|i| -200.0 + i as f64 * 0.01).collect();
    let values: Vec<f64> = omega.iter().map(|&w| lor.eval(w)).collect();
    let tab = SpectrumSpec::tabulated(omega, values).unwrap();
    let t = grid(21, 0.5);
    let a = correlation_from_spectrum(&callable, &t).unwrap();
    let b = correlation_from_spectrum(&tab, &t).unwrap();
    let exact = pseudomode_correlation_analytic(&pm, &t).unwrap();
    // the finite support drops about 1.6e-3 of the mass
    assert!(correlation_distance(&a, &exact).unwrap().max_abs < 2e-3);
    // linear interpolation at spacing 0.01 across a peak of half-width 0.5
    assert!(correlation_distance(&a, &b).unwrap().max_abs < 5e-5);
}

#[test]
fn pencil_recovers_exact_exponentials() {
    let pm = three_modes();
    let t = grid(200, 0.05);
    let samples = pseudomode_correlation_analytic(&pm, &t).unwrap();
    let fit = prony_decompose(&samples, 3).unwrap();
    assert!(fit.residual.max_abs < 1e-9, "{:?}", fit.residual);
    let refined = fit_correlation(&samples, 3, &RefineConfig::default()).unwrap();
    let got = to_pseudomodes(&refined).unwrap();
    for m in pm.modes() {
        let best = got
            .modes()
            .iter()
            .min_by(|a, b| (a.eta - m.eta).abs().total_cmp(&(b.eta - m.eta).abs()))
            .unwrap();
        assert!((best.eta - m.eta).abs() < 1e-9 && (best.gamma - m.gamma).abs() < 1e-9);
        assert!((best.weight() - m.weight()).abs() < 1e-9);
    }
}

#[test]
fn excess_order_is_rank_deficient() {
    let pm = PseudomodeSet::single(0.3, 0.6, 0.5);
    let samples = pseudomode_correlation_analytic(&pm, &grid(120, 0.05)).unwrap();
    assert!(matches!(
        fit_correlation(&samples, 2, &RefineConfig::default()),
        Err(Error::RankDeficient { rank: 1, order: 2 })
    ));
}

#[test]
fn unphysical_data_is_rejected() {
    // a negative weight cannot come from a pseudomode
    let t = grid(100, 0.05);
    let values = t.iter().map(|&ti| c(0.5, 0.0) * (c(-0.2, -1.0) * ti).exp() - c(0.3, 0.0) * (c(-0.4, 0.5) * ti).exp()).collect();
    let samples = CorrelationTable::new(t, 0.0, values, Provenance::AnalyticPseudomode).unwrap();
    let fit = fit_correlation(&samples, 2, &RefineConfig::default()).unwrap();
    assert!(matches!(to_pseudomodes(&fit), Err(Error::NonPhysicalFit { .. })));
}

#[test]
fn pencil_needs_enough_samples() {
    let samples = pseudomode_correlation_analytic(&PseudomodeSet::single(0.0, 1.0, 1.0), &grid(4, 0.1)).unwrap();
    assert!(prony_decompose(&samples, 3).is_err());
    assert!(prony_decompose(&samples, 0).is_err());
}
