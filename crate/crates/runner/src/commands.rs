//! Scenario execution, comparison and fitting. Everything here is pure:
//! results come back as rendered CSV tables for [`crate::output`] to write.

use std::fs::File;

use nalgebra::DVector;
use pseudomode_core::bath_fit::{fit_correlation, lorentzian_spectrum, to_pseudomodes, ExponentialFit, RefineConfig, SpectrumSpec};
use pseudomode_core::correlation::{
    correlation_distance, correlation_from_spectrum_with_tol, pseudomode_correlation_analytic, CorrelationTable, PseudomodeSet,
};
use pseudomode_core::dilation::{lemma1_check, lemma2_check, lemma2_study, ConvergenceReport, DilationConfig, Lemma1Scenario};
use pseudomode_core::hilbert::{pauli, DensityMatrix, DimSignature, Pauli};
use pseudomode_core::linalg::krylov::KrylovConfig;
use pseudomode_core::lindblad::spin_boson::{product_with_vacuum, pseudomode_environment, spin_boson_model};
use pseudomode_core::lindblad::{certify_truncation, propagate, reduced_trajectory, PropagatorConfig, Trajectory, TruncationConfig};
use pseudomode_core::unitary::{certify_bath_convergence, discretize, UnitaryScenario};
use pseudomode_core::C64;

use crate::error::{RunnerError, RunnerResult};
use crate::scenario::{pseudomode_set, Environment, ModeSpec, Scenario, Study, Task};

/// Result of one scenario.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    pub hash: String,
    /// Reduced qubit states, for dynamics runs.
    pub trajectory: Option<Trajectory>,
    /// Ordered `(key, value)` metrics and flags.
    pub summary: Vec<(String, String)>,
    /// `(file name, CSV text)`.
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub(crate) struct Summary(Vec<(String, String)>);

impl Summary {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }
    fn num(&mut self, k: &str, v: f64) {
        self.put(k, fmt(v));
    }
}

fn propagator(scn: &Scenario) -> PropagatorConfig {
    let mut cfg = PropagatorConfig::with_tolerances(scn.numerics.rel_tol, scn.numerics.abs_tol);
    cfg.krylov.tol = scn.numerics.krylov_tol;
    cfg
}

fn krylov(scn: &Scenario) -> KrylovConfig {
    KrylovConfig { tol: scn.numerics.krylov_tol, ..KrylovConfig::default() }
}

fn qubit_state(scn: &Scenario) -> RunnerResult<DensityMatrix> {
    let a = DVector::from_column_slice(&scn.system.initial.amplitudes());
    Ok(DensityMatrix::pure(DimSignature::single(2)?, &a)?)
}

/// `t,sz,sx,sy,purity`.
pub fn trajectory_csv(traj: &Trajectory) -> RunnerResult<String> {
    let sz = traj.expectation(&pauli(Pauli::Z))?;
    let sx = traj.expectation(&pauli(Pauli::X))?;
    let sy = traj.expectation(&pauli(Pauli::Y))?;
    let mut s = String::from("t,sz,sx,sy,purity\n");
    for (i, (t, rho)) in traj.t_grid().iter().zip(traj.states()).enumerate() {
        s.push_str(&format!("{},{},{},{},{}\n", fmt(*t), fmt(sz[i].re), fmt(sx[i].re), fmt(sy[i].re), fmt(rho.purity())));
    }
    Ok(s)
}

fn table_csv(t: &CorrelationTable) -> RunnerResult<String> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

fn report_csv(r: &ConvergenceReport) -> RunnerResult<String> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

fn put_diagnostics(s: &mut Summary, prefix: &str, traj: &Trajectory) {
    let d = traj.worst_diagnostics();
    s.num(&format!("{prefix}trace_error"), d.trace_error);
    s.num(&format!("{prefix}hermiticity"), d.hermiticity);
    s.num(&format!("{prefix}min_eigenvalue"), d.min_eigenvalue);
}

pub fn execute(scn: &Scenario) -> RunnerResult<Outcome> {
    scn.validate()?;
    let mut s = Summary(Vec::new());
    s.put("scenario", &scn.name);
    s.put("scenario_hash", scn.hash());
    let (trajectory, tables) = match (&scn.task, &scn.environment) {
        (Task::Fit, _) => (None, fit_task(scn, &mut s)?),
        (Task::Dynamics, Environment::Pseudomodes { modes }) => lindblad_dynamics(scn, modes, &mut s)?,
        (Task::Dynamics, Environment::Spectrum { .. }) => unitary_dynamics(scn, &mut s)?,
        (Task::Dynamics, Environment::Dilation { modes, study, path, s_offset }) => {
            (None, dilation_study(scn, modes, *study, path, *s_offset, &mut s)?)
        }
    };
    s.put("scenario_json", scn.canonical_json());
    Ok(Outcome { scenario: scn.clone(), hash: scn.hash(), trajectory, summary: s.0, tables })
}

fn lindblad_dynamics(scn: &Scenario, modes: &[ModeSpec], s: &mut Summary) -> RunnerResult<(Option<Trajectory>, Vec<(String, String)>)> {
    let pm = pseudomode_set(modes)?;
    let t = scn.time.grid();
    let prop = propagator(scn);
    let rho_s = qubit_state(scn)?;
    let coupling = scn.coupling.into();
    let build = |n: usize| {
        let m = spin_boson_model(scn.system.omega, &pm, coupling, n)?;
        let rho0 = product_with_vacuum(&m, &rho_s)?;
        Ok((m, rho0))
    };
    let mut tables = Vec::new();
    s.put("engine", "lindblad");
    let n_max = match scn.numerics.n_max {
        Some(n) => {
            s.put("truncation", "fixed");
            n
        }
        None => {
            let cfg = TruncationConfig { tol: scn.numerics.truncation_tol, propagator: prop, ..TruncationConfig::default() };
            let cert = certify_truncation(build, &t, &pauli(Pauli::Z), &cfg)?;
            s.put("truncation", "certified");
            s.num("truncation_deviation", cert.deviation);
            let mut csv = String::from("n_max,deviation\n");
            for (n, d) in &cert.history {
                csv.push_str(&format!("{n},{}\n", fmt(*d)));
            }
            tables.push(("truncation.csv".to_string(), csv));
            cert.n_max
        }
    };
    s.put("n_max", n_max);
    let (model, rho0) = build(n_max)?;
    s.put("hilbert_dim", model.sig().total());
    let full = propagate(&model.generator()?, &rho0, &t, &prop)?;
    put_diagnostics(s, "", &full);
    let red = reduced_trajectory(&full, &[0])?;
    tables.insert(0, ("trajectory.csv".to_string(), trajectory_csv(&red)?));
    Ok((Some(red), tables))
}

fn spectrum_of(scn: &Scenario) -> RunnerResult<SpectrumSpec> {
    let Environment::Spectrum { lorentzian, table, positive_only, .. } = &scn.environment else {
        return Err(RunnerError::validation("not a spectrum environment"));
    };
    let spec = match (lorentzian, table) {
        (Some(m), _) => lorentzian_spectrum(&pseudomode_set(m)?),
        (None, Some(path)) => {
            let f = File::open(path).map_err(|e| RunnerError::Io(format!("{path}: {e}")))?;
            SpectrumSpec::from_csv(f)?
        }
        (None, None) => return Err(RunnerError::validation("spectrum environment without a source")),
    };
    Ok(if *positive_only { spec.restricted(0.0, f64::INFINITY)? } else { spec })
}

fn unitary_dynamics(scn: &Scenario, s: &mut Summary) -> RunnerResult<(Option<Trajectory>, Vec<(String, String)>)> {
    let Environment::Spectrum { window, rule, .. } = &scn.environment else { unreachable!() };
    let t = scn.time.grid();
    let mut us = UnitaryScenario::new(scn.system.omega, spectrum_of(scn)?, scn.coupling.into(), scn.system.initial.amplitudes(), t.clone());
    us.window = window.map(|[a, b]| (a, b));
    us.rule = (*rule).into();
    us.tail_tol = scn.numerics.tail_tol;
    us.krylov = krylov(scn);
    let n = &scn.numerics;
    let report = certify_bath_convergence(&us, &n.bath_modes, &n.k_max)?;
    let finest = report
        .finest
        .ok_or_else(|| RunnerError::Numerical(format!("no refinement cell could be run: {:?}", report.refinements.first().and_then(|r| r.failure.clone()))))?;
    s.put("engine", "unitary");
    s.put("bath_certified", report.certified);
    s.put("bath_modes", finest.n);
    s.put("k_max", finest.k_max);
    s.put("basis_dim", finest.dim);
    s.num("tail_mass", finest.tail_mass);
    s.num("recurrence_time", finest.recurrence_time);
    s.num("norm_error", finest.norm_error);
    s.num("energy_drift", finest.energy_drift);
    s.num("excitation_drift", finest.excitation_drift);
    // discrete bath correlation against the target spectrum
    let bath = discretize(&us, finest.n)?;
    let target = correlation_from_spectrum_with_tol(&us.spectrum, &t, n.quad_tol)?;
    let bath_err = t
        .iter()
        .zip(&target.values)
        .map(|(&ti, c)| (bath.correlation_at(ti) - c).norm())
        .fold(0.0, f64::max);
    s.num("bath_correlation_error", bath_err);
    put_diagnostics(s, "reduced_", &finest.trajectory);
    let mut conv = String::from("N,K_max,dim,dev_sz,dev_sx,failure\n");
    for r in &report.refinements {
        let failure = r.failure.clone().unwrap_or_default().replace([',', '\n'], ";");
        conv.push_str(&format!("{},{},{},{},{},{}\n", r.n, r.k_max, r.dim, opt(r.dev_sz), opt(r.dev_sx), failure));
    }
    let tables = vec![
        ("trajectory.csv".to_string(), trajectory_csv(&finest.trajectory)?),
        ("convergence.csv".to_string(), conv),
    ];
    Ok((Some(finest.trajectory), tables))
}

fn vacuum_vector(dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[0] = C64::new(1.0, 0.0);
    v
}

fn dilation_study(
    scn: &Scenario,
    modes: &[ModeSpec],
    study: Study,
    path: &[(f64, usize)],
    s_offset: f64,
    s: &mut Summary,
) -> RunnerResult<Vec<(String, String)>> {
    let pm = pseudomode_set(modes)?;
    let t = scn.time.grid();
    let n_max = scn.numerics.n_max.unwrap_or(1);
    let centers: Vec<f64> = pm.modes().iter().map(|m| m.eta).collect();
    let prop = propagator(scn);
    let kry = krylov(scn);
    let k_max = scn.numerics.dilation_k_max;
    s.put("engine", "dilation");
    s.put("n_max", n_max);
    s.put("dilation_k_max", k_max);
    let mut tables = Vec::new();
    let (report, pick): (ConvergenceReport, fn(&pseudomode_core::dilation::ConvergenceCell) -> Option<f64>) = match study {
        Study::Lemma1 => {
            let model = spin_boson_model(scn.system.omega, &pm, scn.coupling.into(), n_max)?;
            // qubit (x) vacuum: the qubit is the leading factor
            let env_dim = model.sig().total() / 2;
            let amps = scn.system.initial.amplitudes();
            let mut psi0 = DVector::zeros(model.sig().total());
            psi0[0] = amps[0];
            psi0[env_dim] = amps[1];
            let lscn = Lemma1Scenario { model, psi0, t_grid: t.clone(), k_max, propagator: prop, krylov: kry };
            s.put("study", "lemma1");
            (lemma1_check(&lscn, &centers, path)?, |c| c.err_state)
        }
        Study::Lemma2 => {
            let (env, g) = pseudomode_environment(&pm, n_max)?;
            let f = g.add(&g.adjoint())?;
            let psi = vacuum_vector(env.sig().total());
            s.put("study", "lemma2");
            s.num("s_offset", s_offset);
            let report = lemma2_study(&env, &psi, &f, &f, s_offset, &t, &centers, path, k_max, &kry, &prop)?;
            let &(w, m) = path.last().expect("validated path");
            let finest = lemma2_check(&env, &psi, &f, &f, s_offset, &t, &DilationConfig::new(w, m, centers.clone())?, k_max, &kry, &prop)?;
            // the vacuum is stationary, so the closed form holds at any offset
            let analytic = pseudomode_correlation_analytic(&pm, &t)?;
            let mut shifted = finest.dilated.clone();
            shifted.s_offset = 0.0;
            s.num("analytic_max_abs", correlation_distance(&shifted, &analytic)?.max_abs);
            tables.push(("correlation_dilation.csv".to_string(), table_csv(&finest.dilated)?));
            tables.push(("correlation_lindblad.csv".to_string(), table_csv(&finest.lindblad)?));
            (report, |c| c.err_corr)
        }
    };
    let errs: Vec<f64> = report.cells.iter().filter_map(pick).collect();
    s.put("certified", report.certified);
    s.num("best_error", errs.iter().copied().fold(f64::INFINITY, f64::min));
    s.num("final_error", *errs.last().expect("non-empty path"));
    tables.insert(0, ("convergence.csv".to_string(), report_csv(&report)?));
    Ok(tables)
}

/// Correlation samples of a scenario's environment on its time grid.
fn correlation_samples(scn: &Scenario) -> RunnerResult<(CorrelationTable, Option<PseudomodeSet>)> {
    let t = scn.time.grid();
    match &scn.environment {
        Environment::Pseudomodes { modes } => {
            let pm = pseudomode_set(modes)?;
            Ok((pseudomode_correlation_analytic(&pm, &t)?, Some(pm)))
        }
        Environment::Spectrum { .. } => Ok((correlation_from_spectrum_with_tol(&spectrum_of(scn)?, &t, scn.numerics.quad_tol)?, None)),
        Environment::Dilation { .. } => Err(RunnerError::validation("the fit task needs a pseudomode or spectrum environment")),
    }
}

fn fit_task(scn: &Scenario, s: &mut Summary) -> RunnerResult<Vec<(String, String)>> {
    let (samples, truth) = correlation_samples(scn)?;
    let (tables, pm) = fit_tables(&samples, scn.numerics.fit_order, s)?;
    if let Some(truth) = truth {
        s.num("parameter_max_rel_error", parameter_error(&truth, &pm));
    }
    Ok(tables)
}

/// Fits `samples` and renders `pseudomodes.csv` and `residual.csv`.
pub(crate) fn fit_tables(samples: &CorrelationTable, order: usize, s: &mut Summary) -> RunnerResult<(Vec<(String, String)>, PseudomodeSet)> {
    if order == 0 {
        return Err(RunnerError::validation("fit order must be >= 1"));
    }
    let fit: ExponentialFit = fit_correlation(samples, order, &RefineConfig::default())?;
    let pm = to_pseudomodes(&fit)?;
    s.put("engine", "fit");
    s.put("order", order);
    s.put("converged", fit.converged);
    s.put("iterations", fit.iterations);
    s.num("residual_max_abs", fit.residual.max_abs);
    s.num("residual_l2", fit.residual.l2);
    s.num("residual_l1", fit.residual.l1);
    let mut modes = String::from("eta,gamma,lambda_re,lambda_im,weight\n");
    for m in pm.modes() {
        modes.push_str(&format!("{},{},{},{},{}\n", fmt(m.eta), fmt(m.gamma), fmt(m.lambda.re), fmt(m.lambda.im), fmt(m.weight())));
    }
    let residual = format!(
        "metric,value\nmax_abs,{}\nl2,{}\nl1,{}\n",
        fmt(fit.residual.max_abs),
        fmt(fit.residual.l2),
        fmt(fit.residual.l1)
    );
    Ok((vec![("pseudomodes.csv".into(), modes), ("residual.csv".into(), residual)], pm))
}

pub(crate) fn summary_for_fit() -> Summary {
    Summary(Vec::new())
}

pub(crate) fn into_pairs(s: Summary) -> Vec<(String, String)> {
    s.0
}

/// Largest relative error in `(eta, gamma, |lambda|^2)` after pairing each
/// true term with the nearest fitted exponent.
pub fn parameter_error(truth: &PseudomodeSet, fit: &PseudomodeSet) -> f64 {
    if truth.len() != fit.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; fit.len()];
    let mut worst: f64 = 0.0;
    for a in truth.modes() {
        let (j, b) = fit
            .modes()
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|(_, x), (_, y)| (x.exponent() - a.exponent()).norm().total_cmp(&(y.exponent() - a.exponent()).norm()))
            .expect("same length");
        used[j] = true;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        worst = worst.max(rel(b.eta, a.eta)).max(rel(b.gamma, a.gamma)).max(rel(b.weight(), a.weight()));
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub trace_distance: f64,
    pub dev_sz: f64,
    pub dev_sx: f64,
    pub dev_sy: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Comparison {
    pub fn max_observable_deviation(&self) -> f64 {
        self.dev_sz.max(self.dev_sx).max(self.dev_sy)
    }

    pub fn csv(&self) -> String {
        format!(
            "metric,value\ntrace_distance,{}\ndev_sz,{}\ndev_sx,{}\ndev_sy,{}\nthreshold,{}\npass,{}\n",
            fmt(self.trace_distance),
            fmt(self.dev_sz),
            fmt(self.dev_sx),
            fmt(self.dev_sy),
            fmt(self.threshold),
            self.pass
        )
    }
}

/// Trajectory comparison; the metrics are symmetric in `a` and `b`.
pub fn compare(a: &Outcome, b: &Outcome, threshold: f64) -> RunnerResult<Comparison> {
    let (ta, tb) = match (&a.trajectory, &b.trajectory) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(RunnerError::validation("compare needs two dynamics scenarios")),
    };
    if ta.t_grid() != tb.t_grid() {
        return Err(RunnerError::validation(format!(
            "grid mismatch: {} samples to t = {} vs {} samples to t = {}",
            ta.len(),
            ta.t_grid().last().unwrap(),
            tb.len(),
            tb.t_grid().last().unwrap()
        )));
    }
    if a.scenario.system.initial.amplitudes() != b.scenario.system.initial.amplitudes() {
        return Err(RunnerError::validation("initial system states differ"));
    }
    if !(threshold >= 0.0) {
        return Err(RunnerError::validation("threshold must be >= 0"));
    }
    let mut td: f64 = 0.0;
    for (x, y) in ta.states().iter().zip(tb.states()) {
        td = td.max(x.trace_distance(y)?);
    }
    let dev = |p| -> RunnerResult<f64> {
        let op = pauli(p);
        let (x, y) = (ta.expectation(&op)?, tb.expectation(&op)?);
        Ok(x.iter().zip(&y).map(|(u, v)| (u.re - v.re).abs()).fold(0.0, f64::max))
    };
    let (dz, dx, dy) = (dev(Pauli::Z)?, dev(Pauli::X)?, dev(Pauli::Y)?);
    let pass = dz.max(dx).max(dy) <= threshold;
    Ok(Comparison { trace_distance: td, dev_sz: dz, dev_sx: dx, dev_sy: dy, threshold, pass })
}

/// Reads `t,re,im` correlation samples or an `omega,S` spectrum (sampled on
/// `[0, t_end]`).
pub fn load_fit_input(text: &str, t_end: f64, samples: usize, quad_tol: f64) -> RunnerResult<CorrelationTable> {
    let header = text.lines().next().unwrap_or("").trim().to_ascii_lowercase();
    if header.starts_with("t,") {
        Ok(CorrelationTable::read_csv(text.as_bytes(), pseudomode_core::correlation::Provenance::UnitarySpectrum)?)
    } else if header.starts_with("omega,") {
        if !(t_end > 0.0) || samples < 2 {
            return Err(RunnerError::validation("spectrum input needs t_end > 0 and >= 2 samples"));
        }
        let spec = SpectrumSpec::from_csv(text.as_bytes())?;
        let t: Vec<f64> = (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64).collect();
        Ok(correlation_from_spectrum_with_tol(&spec, &t, quad_tol)?)
    } else {
        Err(RunnerError::validation(format!("unrecognized input header `{header}`; expected `t,re,im` or `omega,S`")))
    }
}
