//! Environment expectation values and two-time correlation functions.

mod pseudomode;
mod spectral;
mod table;

pub use pseudomode::{Pseudomode, PseudomodeSet};
pub use spectral::{correlation_from_spectrum, correlation_from_spectrum_with_tol, DEFAULT_QUAD_TOL};
pub use table::{correlation_distance, CorrelationTable, DistanceReport, Provenance};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, Repr};
use crate::lindblad::{propagate_operator, EnvironmentModel, PropagatorConfig};
use crate::C64;

/// `Tr{O M}` for an operator and an arbitrary matrix.
pub fn trace_product(op: &Operator, m: &DMatrix<C64>) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    match op.repr() {
        Repr::Dense(o) => {
            for i in 0..o.nrows() {
                for j in 0..o.ncols() {
                    s += o[(i, j)] * m[(j, i)];
                }
            }
        }
        Repr::Sparse(o) => {
            for (i, j, v) in o.iter() {
                s += v * m[(j, i)];
            }
        }
    }
    s
}

fn check_env_op(env: &EnvironmentModel, op: &Operator, what: &str) -> Result<()> {
    if op.sig() != env.sig() {
        return Err(Error::Signature(format!("{what} acts on {}, environment is {}", op.sig(), env.sig())));
    }
    Ok(())
}

/// Grid with a leading zero added when missing, and the offset of the
/// caller's first sample in it.
fn grid_from_zero(t_grid: &[f64]) -> Result<(Vec<f64>, usize)> {
    crate::lindblad::check_grid(t_grid, false)?;
    if t_grid[0] < 0.0 {
        return Err(Error::InvalidArgument("correlation times must be >= 0".into()));
    }
    if t_grid[0] == 0.0 {
        Ok((t_grid.to_vec(), 0))
    } else {
        let mut g = vec![0.0];
        g.extend_from_slice(t_grid);
        Ok((g, 1))
    }
}

/// `F_j(t) = Tr{F_j e^{L_R t}[rho_R(0)]}` for each operator.
pub fn env_expectation(
    env: &EnvironmentModel,
    rho0: &DensityMatrix,
    f_ops: &[Operator],
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<Vec<Vec<C64>>> {
    if rho0.sig() != env.sig() {
        return Err(Error::Signature(format!("state on {}, environment is {}", rho0.sig(), env.sig())));
    }
    for f in f_ops {
        check_env_op(env, f, "F")?;
    }
    let (grid, skip) = grid_from_zero(t_grid)?;
    let states = propagate_operator(&env.generator()?, rho0.matrix(), &grid, cfg)?;
    Ok(f_ops
        .iter()
        .map(|f| states[skip..].iter().map(|m| trace_product(f, m)).collect())
        .collect())
}

/// `C(t + s, s) = Tr{F_j e^{L t}[F_j' e^{L s}[rho_R(0)]]}` by propagating the
/// operator `F_j' rho(s)` with the same generator.
#[allow(clippy::too_many_arguments)]
pub fn two_time_lindblad(
    env: &EnvironmentModel,
    rho0: &DensityMatrix,
    f_j: &Operator,
    f_jp: &Operator,
    s: f64,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<CorrelationTable> {
    if rho0.sig() != env.sig() {
        return Err(Error::Signature(format!("state on {}, environment is {}", rho0.sig(), env.sig())));
    }
    check_env_op(env, f_j, "F_j")?;
    check_env_op(env, f_jp, "F_j'")?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("offset s = {s} must be finite and >= 0")));
    }
    let gen = env.generator()?;
    let rho_s = if s == 0.0 {
        rho0.matrix().clone()
    } else {
        propagate_operator(&gen, rho0.matrix(), &[0.0, s], cfg)?.pop().expect("two samples")
    };
    let x0 = f_jp.to_dense() * rho_s;
    let (grid, skip) = grid_from_zero(t_grid)?;
    let xs = propagate_operator(&gen, &x0, &grid, cfg)?;
    let values = xs[skip..].iter().map(|x| trace_product(f_j, x)).collect();
    CorrelationTable::new(t_grid.to_vec(), s, values, Provenance::LindbladRegression)
}

/// Closed form `sum_j |lambda_j|^2 exp((-i eta_j - gamma_j/2) t)`.
pub fn pseudomode_correlation_analytic(pm: &PseudomodeSet, t_grid: &[f64]) -> Result<CorrelationTable> {
    let values = t_grid.iter().map(|&t| pm.correlation_at(t)).collect();
    CorrelationTable::new(t_grid.to_vec(), 0.0, values, Provenance::AnalyticPseudomode)
}
