//! System–environment Lindblad models, their generators and propagation.

mod propagate;
mod superop;
mod truncation;

pub mod spin_boson;

pub use propagate::{
    check_grid, dense_oracle, propagate, propagate_operator, reduced_trajectory, Method, PropagatorConfig, Trajectory,
};
pub use superop::{build_liouvillian, Superoperator};
pub use truncation::{certify_truncation, TruncationCertificate, TruncationConfig};

use crate::error::{Error, Result};
use crate::hilbert::{embed_block, DimSignature, Operator, HERMITIAN_TOL};

/// The environment part alone: `H_R` and damped channels `(L_j, gamma_j)`.
#[derive(Clone, Debug)]
pub struct EnvironmentModel {
    sig: DimSignature,
    h_r: Operator,
    lindblad_ops: Vec<(Operator, f64)>,
}

impl EnvironmentModel {
    pub fn new(h_r: Operator, lindblad_ops: Vec<(Operator, f64)>) -> Result<Self> {
        let sig = h_r.sig().clone();
        check_hermitian("H_R", &h_r)?;
        for (j, (l, g)) in lindblad_ops.iter().enumerate() {
            if l.sig() != &sig {
                return Err(Error::ModelValidation(format!(
                    "Lindblad operator {j} acts on {}, environment is {sig}",
                    l.sig()
                )));
            }
            check_rate(j, *g)?;
        }
        Ok(Self { sig, h_r, lindblad_ops })
    }

    pub fn sig(&self) -> &DimSignature {
        &self.sig
    }

    pub fn h_r(&self) -> &Operator {
        &self.h_r
    }

    pub fn lindblad_ops(&self) -> &[(Operator, f64)] {
        &self.lindblad_ops
    }

    pub fn generator(&self) -> Result<Superoperator> {
        build_liouvillian(&self.h_r, &self.lindblad_ops)
    }
}

fn check_hermitian(name: &str, op: &Operator) -> Result<()> {
    let r = op.hermiticity_residual();
    if r > HERMITIAN_TOL {
        return Err(Error::ModelValidation(format!("{name} is not Hermitian (residual {r:.3e})")));
    }
    Ok(())
}

fn check_rate(j: usize, g: f64) -> Result<()> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::ModelValidation(format!("rate gamma_{j} = {g} must be finite and >= 0")));
    }
    Ok(())
}

/// `H_S + H_R + sum_j A_j (x) F_j` with dissipation acting on the
/// environment factors only.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    sig: DimSignature,
    h_s: Operator,
    couplings: Vec<(Operator, Operator)>,
    env: EnvironmentModel,
}

impl LindbladModel {
    pub fn new(h_s: Operator, couplings: Vec<(Operator, Operator)>, env: EnvironmentModel) -> Result<Self> {
        check_hermitian("H_S", &h_s)?;
        let d_s = h_s.dim();
        if couplings.len() > d_s * d_s {
            return Err(Error::ModelValidation(format!(
                "{} coupling terms exceed d_S^2 = {}",
                couplings.len(),
                d_s * d_s
            )));
        }
        for (j, (a, f)) in couplings.iter().enumerate() {
            if a.sig() != h_s.sig() {
                return Err(Error::ModelValidation(format!("A_{j} acts on {}, system is {}", a.sig(), h_s.sig())));
            }
            if f.sig() != env.sig() {
                return Err(Error::ModelValidation(format!("F_{j} acts on {}, environment is {}", f.sig(), env.sig())));
            }
        }
        let sig = h_s.sig().concat(env.sig())?;
        Ok(Self { sig, h_s, couplings, env })
    }

    pub fn sig(&self) -> &DimSignature {
        &self.sig
    }

    pub fn system_sig(&self) -> &DimSignature {
        self.h_s.sig()
    }

    /// Number of leading factors that belong to the system.
    pub fn system_factors(&self) -> usize {
        self.h_s.sig().len()
    }

    pub fn h_s(&self) -> &Operator {
        &self.h_s
    }

    pub fn couplings(&self) -> &[(Operator, Operator)] {
        &self.couplings
    }

    pub fn env(&self) -> &EnvironmentModel {
        &self.env
    }

    /// Lindblad operators lifted to the full space.
    pub fn full_lindblad_ops(&self) -> Result<Vec<(Operator, f64)>> {
        let first = self.system_factors();
        self.env
            .lindblad_ops
            .iter()
            .map(|(l, g)| Ok((embed_block(l, first, &self.sig)?, *g)))
            .collect()
    }

    pub fn generator(&self) -> Result<Superoperator> {
        build_liouvillian(&build_hamiltonian(self)?, &self.full_lindblad_ops()?)
    }
}

pub fn build_hamiltonian(model: &LindbladModel) -> Result<Operator> {
    let sig = &model.sig;
    let first = model.system_factors();
    let mut h = embed_block(&model.h_s, 0, sig)?.add(&embed_block(&model.env.h_r, first, sig)?)?;
    for (a, f) in &model.couplings {
        h = h.add(&a.kron(f)?)?;
    }
    let r = h.hermiticity_residual();
    if r > HERMITIAN_TOL {
        return Err(Error::ModelValidation(format!(
            "coupling terms do not sum to a Hermitian operator (residual {r:.3e})"
        )));
    }
    Ok(h)
}
