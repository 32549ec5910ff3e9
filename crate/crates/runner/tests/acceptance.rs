//! Acceptance criteria, one line each. Runs without the test harness so the
//! report prints in order; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pseudomode_core::bath_fit::{fit_correlation, lorentzian_spectrum, to_pseudomodes, RefineConfig};
use pseudomode_core::correlation::{correlation_from_spectrum, two_time_lindblad, CorrelationTable, Provenance, Pseudomode, PseudomodeSet};
use pseudomode_core::hilbert::{DensityMatrix, DimSignature, Operator};
use pseudomode_core::lindblad::spin_boson::{pseudomode_environment, vacuum};
use pseudomode_core::lindblad::{build_liouvillian, propagate, Method, PropagatorConfig, Trajectory};
use pseudomode_core::C64;
use pseudomode_runner::presets::{preset, FIG2_MODE, FIT_MODES};
use pseudomode_runner::{compare, execute, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG2_TOL: f64 = 2e-2;
const FIG2_MIN_BATH_MODES: usize = 200;
const FIG2_MIN_K_MAX: usize = 3;
const LEMMA2_TOL: f64 = 1e-10;
const LEMMA2_SETS: usize = 20;
const FOURIER_TOL: f64 = 1e-6;
const LEMMA1_TOL: f64 = 1e-3;
const FIT_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-8;
const ORACLE_MODELS: usize = 50;
const TRACE_TOL: f64 = 1e-10;
const HERM_TOL: f64 = 1e-10;
const POS_TOL: f64 = -1e-8;
const NORM_TOL: f64 = 1e-10;
const EXCITATION_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn c_re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

#[derive(Default)]
struct Invariants {
    trace: f64,
    herm: f64,
    min_eig: f64,
    norm: f64,
    excitation: f64,
    trajectories: usize,
}

impl Invariants {
    fn new() -> Self {
        Self { min_eig: f64::INFINITY, ..Default::default() }
    }

    fn states(&mut self, states: &[DensityMatrix]) {
        for rho in states {
            let d = rho.diagnostics();
            self.trace = self.trace.max(d.trace_error);
            self.herm = self.herm.max(d.hermiticity);
            self.min_eig = self.min_eig.min(d.min_eigenvalue);
        }
        self.trajectories += 1;
    }

    fn trajectory(&mut self, t: &Trajectory) {
        self.states(t.states());
    }

    fn summary(&mut self, o: &Outcome, prefix: &str) {
        let get = |k: &str| o.get(&format!("{prefix}{k}")).map(|v| v.parse::<f64>().expect("number"));
        if let (Some(t), Some(h), Some(e)) = (get("trace_error"), get("hermiticity"), get("min_eigenvalue")) {
            self.trace = self.trace.max(t);
            self.herm = self.herm.max(h);
            self.min_eig = self.min_eig.min(e);
        }
    }
}

fn num(o: &Outcome, key: &str) -> f64 {
    o.get(key).unwrap_or_else(|| panic!("summary lacks {key}")).parse().expect("number")
}

fn run(name: &str) -> Outcome {
    let t0 = Instant::now();
    let o = execute(&preset(name).expect("preset")).unwrap_or_else(|e| panic!("{name}: {e}"));
    eprintln!("  ran {name} in {:.1} s", t0.elapsed().as_secs_f64());
    o
}

fn fig2(r: &mut Report, inv: &mut Invariants) {
    let lind = run("fig2-lindblad");
    let unit = run("fig2-unitary");
    inv.summary(&lind, "");
    inv.trajectory(lind.trajectory.as_ref().unwrap());
    inv.trajectory(unit.trajectory.as_ref().unwrap());
    inv.norm = inv.norm.max(num(&unit, "norm_error"));
    let cmp = compare(&lind, &unit, FIG2_TOL).expect("comparable runs");
    let n = num(&unit, "bath_modes") as usize;
    let k = num(&unit, "k_max") as usize;
    let lind_ok = lind.get("truncation") == Some("certified");
    let unit_ok = unit.get("bath_certified") == Some("true");
    let pass = cmp.dev_sz <= FIG2_TOL && cmp.dev_sx <= FIG2_TOL && lind_ok && unit_ok && n >= FIG2_MIN_BATH_MODES && k >= FIG2_MIN_K_MAX;
    r.line(
        "fig2 equivalence",
        pass,
        format!(
            "dev_sz={:.3e} dev_sx={:.3e} (tol {FIG2_TOL:.0e}); lindblad truncation {} (n_max={}); unitary N={n} K={k} certified={} \
             tail_mass={}",
            cmp.dev_sz,
            cmp.dev_sx,
            lind.get("truncation").unwrap_or("?"),
            lind.get("n_max").unwrap_or("?"),
            unit_ok,
            unit.get("tail_mass").unwrap_or("?"),
        ),
    );
    for line in unit.table("convergence.csv").unwrap_or("").lines().skip(1) {
        eprintln!("  unitary refinement N,K,dim,dev_sz,dev_sx,failure: {line}");
    }
}

fn random_set(rng: &mut ChaCha8Rng) -> PseudomodeSet {
    let len = rng.gen_range(1..=4);
    let modes = (0..len)
        .map(|_| {
            let eta = rng.gen_range(-2.0..=2.0);
            let gamma = rng.gen_range(0.05..=2.0);
            let mag: f64 = rng.gen_range(0.1..=1.0);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Pseudomode::new(eta, gamma, C64::from_polar(mag, phase))
        })
        .collect();
    PseudomodeSet::new(modes).expect("valid set")
}

fn closed_form(pm: &PseudomodeSet, t: f64) -> C64 {
    pm.modes()
        .iter()
        .map(|m| c_re(m.lambda.norm_sqr()) * (c(-m.gamma / 2.0, -m.eta) * t).exp())
        .sum()
}

fn lemma2(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
    let cfg = PropagatorConfig::with_tolerances(1e-12, 1e-15);
    let mut worst: f64 = 0.0;
    for _ in 0..LEMMA2_SETS {
        let pm = random_set(&mut rng);
        // one excitation per mode is exact: G^+ lifts the vacuum into the single-excitation sector
        let (env, g) = pseudomode_environment(&pm, 1).expect("environment");
        let rho0 = vacuum(env.sig()).expect("vacuum");
        let corr = two_time_lindblad(&env, &rho0, &g, &g.adjoint(), 0.0, &t, &cfg).expect("regression");
        for (&ti, v) in t.iter().zip(&corr.values) {
            worst = worst.max((v - closed_form(&pm, ti)).norm());
        }
    }
    r.line(
        "lemma2 identity",
        worst <= LEMMA2_TOL,
        format!("{LEMMA2_SETS} random sets, max_abs={worst:.3e} (tol {LEMMA2_TOL:.0e}) on t in [0, 20]"),
    );
}

fn fourier(r: &mut Report) {
    let pm = PseudomodeSet::single(FIG2_MODE.eta, FIG2_MODE.gamma, FIG2_MODE.lambda);
    let t: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
    let table = correlation_from_spectrum(&lorentzian_spectrum(&pm), &t).expect("transform");
    let worst = t.iter().zip(&table.values).map(|(&ti, v)| (v - closed_form(&pm, ti)).norm()).fold(0.0, f64::max);
    r.line("fourier closure", worst <= FOURIER_TOL, format!("max_abs={worst:.3e} (tol {FOURIER_TOL:.0e})"));
}

fn lemma1(r: &mut Report) {
    let o = run("lemma1-study");
    let errs: Vec<(String, f64)> = o
        .table("convergence.csv")
        .expect("convergence table")
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (format!("W={} M={}", f[0].parse::<f64>().expect("W"), f[1]), f[2].parse().expect("err_state"))
        })
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1].1 < w[0].1);
    let last = errs.last().expect("non-empty").1;
    let path: Vec<String> = errs.iter().map(|(k, e)| format!("{k}:{e:.2e}")).collect();
    r.line(
        "lemma1 convergence",
        decreasing && last <= LEMMA1_TOL,
        format!("strictly decreasing={decreasing}, final={last:.3e} (tol {LEMMA1_TOL:.0e}); {}", path.join(" ")),
    );
}

fn fit(r: &mut Report) {
    let truth: Vec<(f64, f64, f64)> = FIT_MODES.iter().map(|m| (m.eta, m.gamma, m.lambda * m.lambda)).collect();
    let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
    let values = t
        .iter()
        .map(|&ti| truth.iter().map(|&(eta, gamma, w)| c_re(w) * (c(-gamma / 2.0, -eta) * ti).exp()).sum())
        .collect();
    let samples = CorrelationTable::new(t, 0.0, values, Provenance::AnalyticPseudomode).expect("table");
    let fitted = fit_correlation(&samples, truth.len(), &RefineConfig::default()).and_then(|f| to_pseudomodes(&f));
    let (pass, detail) = match fitted {
        Ok(pm) => {
            let mut got: Vec<(f64, f64, f64)> = pm.modes().iter().map(|m| (m.eta, m.gamma, m.weight())).collect();
            got.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut want = truth.clone();
            want.sort_by(|a, b| a.0.total_cmp(&b.0));
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            let worst = got
                .iter()
                .zip(&want)
                .map(|(g, w)| rel(g.0, w.0).max(rel(g.1, w.1)).max(rel(g.2, w.2)))
                .fold(if got.len() == want.len() { 0.0 } else { f64::INFINITY }, f64::max);
            (worst <= FIT_TOL, format!("max relative parameter error={worst:.3e} (tol {FIT_TOL:.0e})"))
        }
        Err(e) => (false, format!("fit failed: {e}")),
    };
    r.line("fit round trip", pass, detail);
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Column-stacked generator built from scratch: `vec(A X B) = (B^T (x) A) vec(X)`.
fn dense_generator(h: &DMatrix<C64>, ops: &[(DMatrix<C64>, f64)]) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let mi = c(0.0, -1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * mi;
    for (a, rate) in ops {
        let ad = a.adjoint();
        let ada = &ad * a;
        l += (a.conjugate().kronecker(a) - id.kronecker(&ada) * c_re(0.5) - ada.transpose().kronecker(&id) * c_re(0.5)) * c_re(*rate);
    }
    l
}

fn oracle(r: &mut Report, inv: &mut Invariants) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    // t = 0 plus ten sample times
    let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.4).collect();
    let splits: [&[usize]; 6] = [&[2], &[4], &[2, 2], &[2, 3], &[4, 4], &[2, 2, 2, 2]];
    let mut worst: f64 = 0.0;
    for k in 0..ORACLE_MODELS {
        let dims = splits[rng.gen_range(0..splits.len())].to_vec();
        let sig = DimSignature::new(dims).expect("signature");
        let d = sig.total();
        let a = random_matrix(&mut rng, d);
        let h = (&a + a.adjoint()) * c_re(0.5);
        let ops: Vec<(DMatrix<C64>, f64)> =
            (0..rng.gen_range(1..=3)).map(|_| (random_matrix(&mut rng, d), rng.gen_range(0.05..1.0))).collect();
        let b = random_matrix(&mut rng, d);
        let m0 = &b * b.adjoint();
        let tr = m0.trace();
        let rho0 = DensityMatrix::new(sig.clone(), m0 / tr).expect("state");
        let h_op = Operator::from_dense(sig.clone(), h.clone()).expect("hamiltonian");
        let l_ops: Vec<(Operator, f64)> =
            ops.iter().map(|(m, g)| (Operator::from_dense(sig.clone(), m.clone()).expect("jump"), *g)).collect();
        let gen = build_liouvillian(&h_op, &l_ops).expect("generator");
        let mut cfg = PropagatorConfig::with_tolerances(1e-11, 1e-14);
        cfg.krylov.tol = 1e-12;
        cfg.method = if k % 2 == 0 { Method::Rk45 } else { Method::Krylov };
        let traj = propagate(&gen, &rho0, &t, &cfg).expect("propagation");
        inv.trajectory(&traj);
        let l = dense_generator(&h, &ops);
        let v0 = DVector::from_column_slice(rho0.matrix().as_slice());
        for (&ti, rho) in t.iter().zip(traj.states()) {
            let v = (&l * c_re(ti)).exp() * &v0;
            let diff = rho.matrix().iter().zip(v.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            worst = worst.max(diff);
        }
    }
    r.line(
        "propagator oracle",
        worst <= ORACLE_TOL,
        format!("{ORACLE_MODELS} random models, max entry deviation={worst:.3e} (tol {ORACLE_TOL:.0e})"),
    );
}

fn invariants(r: &mut Report, inv: &mut Invariants) {
    let rwa = run("fig2-rwa");
    inv.trajectory(rwa.trajectory.as_ref().unwrap());
    inv.norm = inv.norm.max(num(&rwa, "norm_error"));
    inv.excitation = inv.excitation.max(num(&rwa, "excitation_drift"));
    let pass = inv.trace <= TRACE_TOL && inv.herm <= HERM_TOL && inv.min_eig >= POS_TOL && inv.norm <= NORM_TOL && inv.excitation <= EXCITATION_TOL;
    r.line(
        "physical invariants",
        pass,
        format!(
            "{} trajectories: trace={:.2e} (tol {TRACE_TOL:.0e}) herm={:.2e} (tol {HERM_TOL:.0e}) min_eig={:.2e} (tol {POS_TOL:.0e}) \
             norm={:.2e} (tol {NORM_TOL:.0e}) rwa_excitation={:.2e} (tol {EXCITATION_TOL:.0e})",
            inv.trajectories, inv.trace, inv.herm, inv.min_eig, inv.norm, inv.excitation
        ),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    let mut inv = Invariants::new();
    let start = Instant::now();
    lemma2(&mut r);
    fourier(&mut r);
    fit(&mut r);
    oracle(&mut r, &mut inv);
    lemma1(&mut r);
    fig2(&mut r, &mut inv);
    invariants(&mut r, &mut inv);
    println!("acceptance: {} failed, {:.0} s", r.failed, start.elapsed().as_secs_f64());
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
