//! Scenario files: a JSON tree describing one simulation.

use pseudomode_core::correlation::{Pseudomode, PseudomodeSet};
use pseudomode_core::lindblad::spin_boson::Coupling;
use pseudomode_core::unitary::{Rule, DEFAULT_TAIL_TOL};
use pseudomode_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{RunnerError, RunnerResult};

pub const REQUIRED_KEYS: [&str; 5] = ["name", "system", "environment", "coupling", "time"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub environment: Environment,
    pub coupling: CouplingSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub omega: f64,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|1>`.
    #[default]
    Excited,
    /// `|0>`.
    Ground,
    /// `(|0>, |1>)` amplitudes as `[re, im]` pairs.
    Amplitudes([[f64; 2]; 2]),
}

impl InitialState {
    pub fn amplitudes(&self) -> [C64; 2] {
        match self {
            InitialState::Excited => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            InitialState::Ground => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            InitialState::Amplitudes(a) => [C64::new(a[0][0], a[0][1]), C64::new(a[1][0], a[1][1])],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub eta: f64,
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default)]
    pub lambda_im: f64,
}

impl ModeSpec {
    pub fn to_pseudomode(self) -> Pseudomode {
        Pseudomode::new(self.eta, self.gamma, C64::new(self.lambda, self.lambda_im))
    }
}

pub fn pseudomode_set(modes: &[ModeSpec]) -> RunnerResult<PseudomodeSet> {
    Ok(PseudomodeSet::new(modes.iter().map(|m| m.to_pseudomode()).collect())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Lemma1,
    Lemma2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    #[default]
    Uniform,
    GaussLegendre,
}

impl From<RuleSpec> for Rule {
    fn from(r: RuleSpec) -> Self {
        match r {
            RuleSpec::Uniform => Rule::Uniform,
            RuleSpec::GaussLegendre => Rule::GaussLegendre,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment {
    /// Damped modes: Lindblad dynamics.
    Pseudomodes { modes: Vec<ModeSpec> },
    /// A continuous bath: discretized unitary dynamics. Exactly one of
    /// `lorentzian` and `table` (path to an `omega,S` CSV).
    Spectrum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lorentzian: Option<Vec<ModeSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
        #[serde(default)]
        rule: RuleSpec,
        /// Drop the spectrum below zero frequency.
        #[serde(default)]
        positive_only: bool,
    },
    /// White-noise dilation of the damped modes along a `(W, M)` path.
    Dilation {
        modes: Vec<ModeSpec>,
        study: Study,
        path: Vec<(f64, usize)>,
        #[serde(default)]
        s_offset: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSpec {
    Rwa,
    SigmaX,
}

impl From<CouplingSpec> for Coupling {
    fn from(c: CouplingSpec) -> Self {
        match c {
            CouplingSpec::Rwa => Coupling::Rwa,
            CouplingSpec::SigmaX => Coupling::SigmaX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub samples: usize,
}

impl TimeSpec {
    /// `samples` equally spaced points on `[0, t_end]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n).map(|i| self.t_end * i as f64 / n as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub krylov_tol: f64,
    /// Fixed per-mode cutoff; certified by doubling when absent.
    pub n_max: Option<usize>,
    pub truncation_tol: f64,
    /// Bath sizes of the unitary refinement path.
    pub bath_modes: Vec<usize>,
    /// Excitation cutoffs of the unitary refinement path.
    pub k_max: Vec<usize>,
    /// Excitation cutoff of the dilated bands.
    pub dilation_k_max: usize,
    pub tail_tol: f64,
    pub quad_tol: f64,
    pub fit_order: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            krylov_tol: 1e-10,
            n_max: None,
            truncation_tol: 1e-6,
            bath_modes: vec![100, 200],
            k_max: vec![3],
            dilation_k_max: 1,
            tail_tol: DEFAULT_TAIL_TOL,
            quad_tol: 1e-8,
            fit_order: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[default]
    Dynamics,
    /// Exponential fit of the environment correlation on the time grid.
    Fit,
}

fn finite(x: f64, what: &str) -> RunnerResult<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(RunnerError::validation(format!("{what} must be finite")))
    }
}

fn check_modes(modes: &[ModeSpec], what: &str) -> RunnerResult<()> {
    if modes.is_empty() {
        return Err(RunnerError::validation(format!("{what} needs at least one mode")));
    }
    for (i, m) in modes.iter().enumerate() {
        for (x, n) in [(m.eta, "eta"), (m.gamma, "gamma"), (m.lambda, "lambda"), (m.lambda_im, "lambda_im")] {
            finite(x, &format!("{what}[{i}].{n}"))?;
        }
        if m.gamma < 0.0 {
            return Err(RunnerError::validation(format!("{what}[{i}].gamma = {} is negative", m.gamma)));
        }
    }
    Ok(())
}

impl Scenario {
    /// Parses and validates a scenario document; an empty document counts
    /// as `{}`.
    pub fn from_json(text: &str) -> RunnerResult<Self> {
        let text = if text.trim().is_empty() { "{}" } else { text };
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RunnerError::validation(format!("scenario is not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| RunnerError::validation("scenario must be a JSON object"))?;
        let missing: Vec<String> = REQUIRED_KEYS.iter().filter(|k| !obj.contains_key(**k)).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(RunnerError::Validation {
                message: format!("scenario is missing required keys: {}", missing.join(", ")),
                missing_keys: missing,
            });
        }
        let scn: Scenario =
            serde_json::from_value(value).map_err(|e| RunnerError::validation(format!("invalid scenario: {e}")))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn validate(&self) -> RunnerResult<()> {
        if self.name.trim().is_empty() {
            return Err(RunnerError::validation("name must not be empty"));
        }
        finite(self.system.omega, "system.omega")?;
        let amps = self.system.initial.amplitudes();
        let norm = (amps[0].norm_sqr() + amps[1].norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(RunnerError::validation(format!("initial amplitudes have norm {norm}, expected 1")));
        }
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return Err(RunnerError::validation(format!("time.t_end must be positive, got {}", self.time.t_end)));
        }
        if self.time.samples < 2 {
            return Err(RunnerError::validation(format!("time.samples must be >= 2, got {}", self.time.samples)));
        }
        let n = &self.numerics;
        for (x, what) in [
            (n.rel_tol, "numerics.rel_tol"),
            (n.abs_tol, "numerics.abs_tol"),
            (n.krylov_tol, "numerics.krylov_tol"),
            (n.truncation_tol, "numerics.truncation_tol"),
            (n.tail_tol, "numerics.tail_tol"),
            (n.quad_tol, "numerics.quad_tol"),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(RunnerError::validation(format!("{what} must be positive")));
            }
        }
        if n.n_max == Some(0) {
            return Err(RunnerError::validation("numerics.n_max must be >= 1"));
        }
        match &self.environment {
            Environment::Pseudomodes { modes } => check_modes(modes, "environment.modes")?,
            Environment::Spectrum { lorentzian, table, window, .. } => {
                match (lorentzian, table) {
                    (Some(m), None) => check_modes(m, "environment.lorentzian")?,
                    (None, Some(_)) => {}
                    _ => {
                        return Err(RunnerError::validation(
                            "a spectrum environment needs exactly one of `lorentzian` and `table`",
                        ))
                    }
                }
                if let Some([a, b]) = window {
                    if !(a.is_finite() && b.is_finite() && b > a) {
                        return Err(RunnerError::validation(format!("invalid window [{a}, {b}]")));
                    }
                }
                if self.task == Task::Dynamics {
                    if n.bath_modes.is_empty() || n.bath_modes.contains(&0) {
                        return Err(RunnerError::validation("numerics.bath_modes must list positive sizes"));
                    }
                    if n.k_max.is_empty() || n.k_max.contains(&0) {
                        return Err(RunnerError::validation("numerics.k_max must list positive cutoffs"));
                    }
                }
            }
            Environment::Dilation { modes, path, s_offset, study } => {
                check_modes(modes, "environment.modes")?;
                if path.is_empty() {
                    return Err(RunnerError::validation("environment.path must list (W, M) pairs"));
                }
                if let Some((w, m)) = path.iter().find(|(w, m)| !(*w > 0.0 && w.is_finite()) || *m == 0) {
                    return Err(RunnerError::validation(format!("invalid refinement cell (W = {w}, M = {m})")));
                }
                if !(*s_offset >= 0.0 && s_offset.is_finite()) {
                    return Err(RunnerError::validation("environment.s_offset must be >= 0"));
                }
                if *study == Study::Lemma1 && self.coupling == CouplingSpec::SigmaX && n.dilation_k_max < 2 {
                    return Err(RunnerError::validation(
                        "sigma_x coupling does not conserve excitations; raise numerics.dilation_k_max",
                    ));
                }
                if self.task == Task::Fit {
                    return Err(RunnerError::validation("the fit task needs a pseudomode or spectrum environment"));
                }
            }
        }
        if self.task == Task::Fit && n.fit_order == 0 {
            return Err(RunnerError::validation("numerics.fit_order must be >= 1"));
        }
        Ok(())
    }

    /// Canonical serialization: fields in declaration order, defaults
    /// filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_lists_every_missing_key() {
        for text in ["", "  \n", "{}"] {
            match Scenario::from_json(text) {
                Err(RunnerError::Validation { missing_keys, .. }) => assert_eq!(missing_keys, REQUIRED_KEYS),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn partial_document_lists_the_rest() {
        let err = Scenario::from_json(r#"{"name": "x", "time": {"t_end": 1, "samples": 3}}"#).unwrap_err();
        match err {
            RunnerError::Validation { missing_keys, .. } => assert_eq!(missing_keys, ["system", "environment", "coupling"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults_are_filled_and_hash_is_stable() {
        let text = r#"{
            "name": "t", "system": {"omega": 0.7}, "coupling": "rwa",
            "environment": {"kind": "pseudomodes", "modes": [{"eta": 0.7, "gamma": 0.4, "lambda": 0.6}]},
            "time": {"t_end": 2, "samples": 5}
        }"#;
        let a = Scenario::from_json(text).unwrap();
        assert_eq!(a.numerics, Numerics::default());
        assert_eq!(a.system.initial, InitialState::Excited);
        let b = Scenario::from_json(&a.canonical_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.time.t_end = 3.0;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.time.grid(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rejects_bad_values() {
        let base = r#"{"name": "t", "system": {"omega": 0.7}, "coupling": "rwa",
            "environment": {"kind": "pseudomodes", "modes": [{"eta": 0.7, "gamma": GAMMA, "lambda": 0.6}]},
            "time": {"t_end": TEND, "samples": SAMPLES}}"#;
        let make = |g: &str, t: &str, s: &str| base.replace("GAMMA", g).replace("TEND", t).replace("SAMPLES", s);
        assert!(Scenario::from_json(&make("0.4", "1", "3")).is_ok());
        for text in [make("-0.1", "1", "3"), make("0.4", "0", "3"), make("0.4", "1", "1")] {
            assert_eq!(Scenario::from_json(&text).unwrap_err().exit_code(), 1);
        }
        let unknown = make("0.4", "1", "3").replacen("\"name\"", "\"bogus\": 1, \"name\"", 1);
        assert!(Scenario::from_json(&unknown).is_err());
    }
}
