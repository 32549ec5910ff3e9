//! Built-in scenarios.

use crate::scenario::{
    CouplingSpec, Environment, InitialState, ModeSpec, Numerics, RuleSpec, Scenario, Study, SystemSpec, Task, TimeSpec,
};

pub const PRESETS: [&str; 6] = ["fig2-lindblad", "fig2-unitary", "fig2-rwa", "lemma1-study", "lemma2-study", "fit-roundtrip"];

/// The damped mode of the strong-coupling example: `eta = omega = 0.7`,
/// `gamma = 0.4`, `lambda = 0.6`.
pub const FIG2_MODE: ModeSpec = ModeSpec { eta: 0.7, gamma: 0.4, lambda: 0.6, lambda_im: 0.0 };
pub const FIG2_OMEGA: f64 = 0.7;

/// Synthetic three-term bath for the fit round trip.
pub const FIT_MODES: [ModeSpec; 3] = [
    ModeSpec { eta: 0.5, gamma: 0.3, lambda: 0.6, lambda_im: 0.0 },
    ModeSpec { eta: -1.2, gamma: 0.8, lambda: 0.4, lambda_im: 0.0 },
    ModeSpec { eta: 2.0, gamma: 0.15, lambda: 0.3, lambda_im: 0.0 },
];

/// `(5, 40), (10, 80), ..., (640, 5120)`.
pub fn dilation_path() -> Vec<(f64, usize)> {
    (0..8).map(|i| (5.0 * f64::from(1u32 << i), 40usize << i)).collect()
}

fn fig2_time() -> TimeSpec {
    TimeSpec { t_end: 10.0, samples: 101 }
}

fn system() -> SystemSpec {
    SystemSpec { omega: FIG2_OMEGA, initial: InitialState::Excited }
}

fn lorentzian(coupling: CouplingSpec, name: &str, numerics: Numerics) -> Scenario {
    Scenario {
        name: name.into(),
        system: system(),
        environment: Environment::Spectrum {
            lorentzian: Some(vec![FIG2_MODE]),
            table: None,
            window: None,
            rule: RuleSpec::Uniform,
            positive_only: false,
        },
        coupling,
        time: fig2_time(),
        numerics,
        task: Task::Dynamics,
    }
}

fn dilation(study: Study, name: &str) -> Scenario {
    Scenario {
        name: name.into(),
        system: system(),
        environment: Environment::Dilation { modes: vec![FIG2_MODE], study, path: dilation_path(), s_offset: 0.0 },
        coupling: CouplingSpec::Rwa,
        time: fig2_time(),
        numerics: Numerics { n_max: Some(1), rel_tol: 1e-10, abs_tol: 1e-13, ..Numerics::default() },
        task: Task::Dynamics,
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    Some(match name {
        "fig2-lindblad" => Scenario {
            name: name.into(),
            system: system(),
            environment: Environment::Pseudomodes { modes: vec![FIG2_MODE] },
            coupling: CouplingSpec::SigmaX,
            time: fig2_time(),
            numerics: Numerics::default(),
            task: Task::Dynamics,
        },
        "fig2-unitary" => lorentzian(
            CouplingSpec::SigmaX,
            name,
            Numerics { bath_modes: vec![100, 200], k_max: vec![3, 5], ..Numerics::default() },
        ),
        "fig2-rwa" => lorentzian(
            CouplingSpec::Rwa,
            name,
            Numerics { bath_modes: vec![200, 400], k_max: vec![1, 2], ..Numerics::default() },
        ),
        "lemma1-study" => dilation(Study::Lemma1, name),
        "lemma2-study" => dilation(Study::Lemma2, name),
        "fit-roundtrip" => Scenario {
            name: name.into(),
            system: system(),
            environment: Environment::Pseudomodes { modes: FIT_MODES.to_vec() },
            coupling: CouplingSpec::SigmaX,
            // 200 samples at spacing 0.05
            time: TimeSpec { t_end: 9.95, samples: 200 },
            numerics: Numerics { fit_order: 3, ..Numerics::default() },
            task: Task::Fit,
        },
        _ => return None,
    })
}
