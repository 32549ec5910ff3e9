//! Spectra and exponential-sum fits of bath correlation functions.

mod prony;
mod refine;
mod spectrum;

pub use prony::{prony_decompose, ExpTerm, ExponentialFit, RANK_TOL, STABILITY_TOL};
pub use refine::{refine_fit, RefineConfig};
pub use spectrum::{lorentzian_spectrum, SpectrumFn, SpectrumKind, SpectrumSpec};

use crate::correlation::{Pseudomode, PseudomodeSet};
use crate::error::{Error, Result};

/// Largest tolerated imaginary part of a fitted weight.
pub const PHYS_TOL: f64 = 1e-8;

/// `eta = -Im s`, `gamma = -2 Re s`, `|lambda|^2 = weight`, with
/// `lambda = sqrt(weight)` taken real.
pub fn to_pseudomodes(fit: &ExponentialFit) -> Result<PseudomodeSet> {
    let mut modes = Vec::with_capacity(fit.terms.len());
    for (index, term) in fit.terms.iter().enumerate() {
        let reason = if term.weight.im.abs() > PHYS_TOL {
            Some("weight has an imaginary part")
        } else if term.weight.re < 0.0 {
            Some("weight is negative")
        } else if term.exponent.re > STABILITY_TOL {
            Some("exponent grows in time")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::NonPhysicalFit {
                index,
                weight: term.weight,
                exponent: term.exponent,
                reason: reason.into(),
            });
        }
        let gamma = (-2.0 * term.exponent.re).max(0.0);
        modes.push(Pseudomode::real(-term.exponent.im, gamma, term.weight.re.sqrt()));
    }
    PseudomodeSet::new(modes)
}

/// Matrix pencil followed by Levenberg–Marquardt.
pub fn fit_correlation(samples: &crate::correlation::CorrelationTable, order: usize, cfg: &RefineConfig) -> Result<ExponentialFit> {
    let init = prony_decompose(samples, order)?;
    refine_fit(&init, samples, cfg)
}
