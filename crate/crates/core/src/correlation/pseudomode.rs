use crate::error::{Error, Result};
use crate::C64;

/// One damped bosonic mode: frequency `eta`, rate `gamma`, coupling `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pseudomode {
    pub eta: f64,
    pub gamma: f64,
    pub lambda: C64,
}

impl Pseudomode {
    pub fn new(eta: f64, gamma: f64, lambda: C64) -> Self {
        Self { eta, gamma, lambda }
    }

    pub fn real(eta: f64, gamma: f64, lambda: f64) -> Self {
        Self::new(eta, gamma, C64::new(lambda, 0.0))
    }

    pub fn weight(&self) -> f64 {
        self.lambda.norm_sqr()
    }

    /// Exponent `s` with `C(t) = |lambda|^2 e^{s t}`.
    pub fn exponent(&self) -> C64 {
        C64::new(-0.5 * self.gamma, -self.eta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudomodeSet {
    modes: Vec<Pseudomode>,
}

impl PseudomodeSet {
    pub fn new(modes: Vec<Pseudomode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("a pseudomode set needs at least one mode".into()));
        }
        for (j, m) in modes.iter().enumerate() {
            if !(m.gamma >= 0.0) || !m.gamma.is_finite() || !m.eta.is_finite() || !m.lambda.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "mode {j}: need finite parameters and gamma >= 0, got eta = {}, gamma = {}, lambda = {}",
                    m.eta, m.gamma, m.lambda
                )));
            }
        }
        Ok(Self { modes })
    }

    pub fn single(eta: f64, gamma: f64, lambda: f64) -> Self {
        Self::new(vec![Pseudomode::real(eta, gamma, lambda)]).expect("valid single mode")
    }

    pub fn modes(&self) -> &[Pseudomode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(Pseudomode::weight).sum()
    }

    /// `C(t) = sum_j |lambda_j|^2 exp((-i eta_j - gamma_j / 2) t)`.
    pub fn correlation_at(&self, t: f64) -> C64 {
        self.modes.iter().map(|m| (m.exponent() * t).exp() * m.weight()).sum()
    }
}
