use nalgebra::DMatrix;

use super::Superoperator;
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, DensityMatrix, Operator, StateDiagnostics};
use crate::linalg::krylov::{expm_action, KrylovConfig, StepMemory, Structure};
use crate::linalg::rk45::{Rk45, Rk45Config};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Runge–Kutta up to `krylov_threshold` vectorized entries, Krylov above.
    Auto,
    Rk45,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    pub rk: Rk45Config,
    pub krylov: KrylovConfig,
    /// Largest `d^2` handled by Runge–Kutta under [`Method::Auto`].
    pub krylov_threshold: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            rk: Rk45Config::default(),
            krylov: KrylovConfig::default(),
            krylov_threshold: 4096,
        }
    }
}

impl PropagatorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        let mut cfg = Self::default();
        cfg.rk.rel_tol = rel_tol;
        cfg.rk.abs_tol = abs_tol;
        cfg.krylov.tol = rel_tol.min(cfg.krylov.tol);
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    t_grid: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn new(t_grid: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if t_grid.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times but {} states",
                t_grid.len(),
                states.len()
            )));
        }
        check_grid(&t_grid, false)?;
        Ok(Self { t_grid, states })
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn expectation(&self, op: &Operator) -> Result<Vec<C64>> {
        self.states.iter().map(|s| s.expectation(op)).collect()
    }

    /// Worst trace error, Hermiticity residual and minimum eigenvalue over
    /// all states.
    pub fn worst_diagnostics(&self) -> StateDiagnostics {
        let mut worst = StateDiagnostics {
            trace_error: 0.0,
            hermiticity: 0.0,
            min_eigenvalue: f64::INFINITY,
        };
        for s in &self.states {
            let d = s.diagnostics();
            worst.trace_error = worst.trace_error.max(d.trace_error);
            worst.hermiticity = worst.hermiticity.max(d.hermiticity);
            worst.min_eigenvalue = worst.min_eigenvalue.min(d.min_eigenvalue);
        }
        worst
    }
}

pub fn check_grid(t_grid: &[f64], must_start_at_zero: bool) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if must_start_at_zero && t_grid[0] != 0.0 {
        return Err(Error::InvalidArgument(format!("time grid must start at 0, starts at {}", t_grid[0])));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Evolves an arbitrary `d x d` matrix under `gen`; used both for states
/// and for the non-Hermitian operators of the regression recipe.
pub fn propagate_operator(
    gen: &Superoperator,
    m0: &DMatrix<C64>,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<Vec<DMatrix<C64>>> {
    check_grid(t_grid, true)?;
    let d = gen.hilbert_dim();
    if m0.nrows() != d || m0.ncols() != d {
        return Err(Error::Signature(format!("initial matrix is {}x{}, generator acts on {d}x{d}", m0.nrows(), m0.ncols())));
    }
    let use_krylov = match cfg.method {
        Method::Auto => d * d > cfg.krylov_threshold,
        Method::Rk45 => false,
        Method::Krylov => true,
    };
    let mut y: Vec<C64> = m0.as_slice().to_vec();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t_prev = 0.0;
    if use_krylov {
        let mut memory = StepMemory::default();
        for &t in t_grid {
            y = expm_action(gen, C64::new(1.0, 0.0), Structure::General, &y, t - t_prev, &cfg.krylov, &mut memory, t_prev)?;
            out.push(DMatrix::from_column_slice(d, d, &y));
            t_prev = t;
        }
    } else {
        let mut rk = Rk45::new(gen, cfg.rk);
        for &t in t_grid {
            rk.advance(&mut y, t_prev, t)?;
            out.push(DMatrix::from_column_slice(d, d, &y));
            t_prev = t;
        }
    }
    Ok(out)
}

/// `e^{gen t}[rho0]` on the grid. States are returned as computed; their
/// physicality can be audited with [`Trajectory::worst_diagnostics`].
pub fn propagate(gen: &Superoperator, rho0: &DensityMatrix, t_grid: &[f64], cfg: &PropagatorConfig) -> Result<Trajectory> {
    if rho0.sig() != gen.sig() {
        return Err(Error::Signature(format!("state on {}, generator on {}", rho0.sig(), gen.sig())));
    }
    let mats = propagate_operator(gen, rho0.matrix(), t_grid, cfg)?;
    let states = mats
        .into_iter()
        .map(|m| DensityMatrix::new_unchecked(gen.sig().clone(), m))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(t_grid.to_vec(), states)
}

/// Reference propagation by the dense exponential of the vectorized
/// generator; only sensible for small `d`.
pub fn dense_oracle(gen: &Superoperator, m0: &DMatrix<C64>, t_grid: &[f64]) -> Vec<DMatrix<C64>> {
    let d = gen.hilbert_dim();
    let l = gen.to_dense();
    let v = nalgebra::DVector::from_column_slice(m0.as_slice());
    t_grid
        .iter()
        .map(|&t| {
            let e = (&l * C64::new(t, 0.0)).exp();
            DMatrix::from_column_slice(d, d, (e * &v).as_slice())
        })
        .collect()
}

pub fn reduced_trajectory(traj: &Trajectory, keep: &[usize]) -> Result<Trajectory> {
    let states = traj
        .states()
        .iter()
        .map(|s| partial_trace(s, keep))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(traj.t_grid().to_vec(), states)
}
