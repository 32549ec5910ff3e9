use super::{propagate, LindbladModel, PropagatorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{embed_block, DensityMatrix, Operator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationConfig {
    pub initial_n_max: usize,
    pub tol: f64,
    /// Largest Hilbert dimension attempted.
    pub max_dim: usize,
    pub propagator: PropagatorConfig,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            initial_n_max: 8,
            tol: 1e-6,
            max_dim: 4096,
            propagator: PropagatorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationCertificate {
    pub n_max: usize,
    pub deviation: f64,
    /// `(n, max_t |<O>_n - <O>_2n|)` for every comparison made.
    pub history: Vec<(usize, f64)>,
}

fn observable_series(model: &LindbladModel, rho0: &DensityMatrix, t_grid: &[f64], obs: &Operator, cfg: &PropagatorConfig) -> Result<Vec<f64>> {
    let full = embed_block(obs, 0, model.sig())?;
    let traj = propagate(&model.generator()?, rho0, t_grid, cfg)?;
    Ok(traj.expectation(&full)?.into_iter().map(|c| c.re).collect())
}

/// Doubles the per-mode cutoff until a system observable stops moving.
///
/// `build(n_max)` returns the model and initial state at that cutoff. The
/// returned `n_max` is the smaller member of the first pair that agrees
/// within `cfg.tol`.
pub fn certify_truncation<F>(build: F, t_grid: &[f64], observable: &Operator, cfg: &TruncationConfig) -> Result<TruncationCertificate>
where
    F: Fn(usize) -> Result<(LindbladModel, DensityMatrix)>,
{
    if cfg.initial_n_max < 1 {
        return Err(Error::InvalidTruncation("initial n_max must be >= 1".into()));
    }
    let mut history = Vec::new();
    let mut n = cfg.initial_n_max;
    let (model, rho0) = build(n)?;
    let mut coarse = observable_series(&model, &rho0, t_grid, observable, &cfg.propagator)?;
    loop {
        let fine_n = 2 * n;
        let (model, rho0) = match build(fine_n) {
            Ok(m) if m.0.sig().total() <= cfg.max_dim => m,
            Ok(m) => {
                return Err(Error::NonConvergence(format!(
                    "n_max = {fine_n} needs dimension {} > {}; history {history:?}",
                    m.0.sig().total(),
                    cfg.max_dim
                )))
            }
            Err(Error::DimensionLimit { dim, limit, .. }) => {
                return Err(Error::NonConvergence(format!(
                    "n_max = {fine_n} needs dimension {dim} > {limit}; history {history:?}"
                )))
            }
            Err(e) => return Err(e),
        };
        let fine = observable_series(&model, &rho0, t_grid, observable, &cfg.propagator)?;
        let dev = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push((n, dev));
        if dev <= cfg.tol {
            return Ok(TruncationCertificate { n_max: n, deviation: dev, history });
        }
        n = fine_n;
        coarse = fine;
    }
}
