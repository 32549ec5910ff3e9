//! The qubit-plus-pseudomodes model: `H_S = omega sigma_z`, one damped
//! mode per pseudomode with `H_R = sum_j eta_j c_j^+ c_j` and `L_j = c_j`.

use nalgebra::DMatrix;

use super::{EnvironmentModel, LindbladModel};
use crate::correlation::PseudomodeSet;
use crate::error::Result;
use crate::hilbert::{bosonic_ops, embed, pauli, DensityMatrix, DimSignature, Operator, Pauli};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coupling {
    /// `sigma_+ G + sigma_- G^+` with `G = sum_j lambda_j c_j`.
    Rwa,
    /// `sigma_x (G + G^+)`.
    SigmaX,
}

impl Coupling {
    pub fn name(&self) -> &'static str {
        match self {
            Coupling::Rwa => "rwa",
            Coupling::SigmaX => "sigma_x",
        }
    }
}

/// Environment operators of the pseudomode set on `[n_max + 1; len]`:
/// the damped environment and `G = sum_j lambda_j c_j`.
pub fn pseudomode_environment(pm: &PseudomodeSet, n_max: usize) -> Result<(EnvironmentModel, Operator)> {
    let ops = bosonic_ops(n_max)?;
    let sig = DimSignature::new(vec![n_max + 1; pm.len()])?;
    let mut h_r = Operator::zeros(sig.clone());
    let mut g = Operator::zeros(sig.clone());
    let mut lindblad = Vec::with_capacity(pm.len());
    for (j, m) in pm.modes().iter().enumerate() {
        let c = embed(&ops.annihilation, j, &sig)?;
        h_r = h_r.add_scaled(&embed(&ops.number, j, &sig)?, C64::new(m.eta, 0.0))?;
        g = g.add_scaled(&c, m.lambda)?;
        lindblad.push((c, m.gamma));
    }
    Ok((EnvironmentModel::new(h_r, lindblad)?, g))
}

pub fn spin_boson_model(omega: f64, pm: &PseudomodeSet, coupling: Coupling, n_max: usize) -> Result<LindbladModel> {
    let (env, g) = pseudomode_environment(pm, n_max)?;
    let h_s = pauli(Pauli::Z).scale_re(omega);
    let gd = g.adjoint();
    let couplings = match coupling {
        Coupling::Rwa => vec![(pauli(Pauli::Plus), g), (pauli(Pauli::Minus), gd)],
        Coupling::SigmaX => vec![(pauli(Pauli::X), g.add(&gd)?)],
    };
    LindbladModel::new(h_s, couplings, env)
}

/// `|0...0><0...0|` on an environment signature.
pub fn vacuum(sig: &DimSignature) -> Result<DensityMatrix> {
    let d = sig.total();
    let mut m = DMatrix::zeros(d, d);
    m[(0, 0)] = C64::new(1.0, 0.0);
    DensityMatrix::new(sig.clone(), m)
}

/// `rho_S (x) vacuum` for a model built by [`spin_boson_model`].
pub fn product_with_vacuum(model: &LindbladModel, rho_s: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::product(&[rho_s, &vacuum(model.env().sig())?])
}

/// `|1><1|`, the excited qubit state.
pub fn excited() -> DensityMatrix {
    DensityMatrix::basis_state(2, 1).expect("qubit basis state")
}
