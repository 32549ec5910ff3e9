//! Levenberg–Marquardt refinement of an exponential sum on stacked real and
//! imaginary residuals, with `Re(exponent) <= 0` enforced by projection.

use nalgebra::{DMatrix, DVector};

use super::prony::{eval_terms, residual_of, ExpTerm, ExponentialFit};
use crate::correlation::CorrelationTable;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineConfig {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub rel_cost_tol: f64,
    pub initial_damping: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { max_iter: 200, rel_cost_tol: 1e-14, initial_damping: 1e-3 }
    }
}

fn pack(terms: &[ExpTerm]) -> Vec<f64> {
    terms
        .iter()
        .flat_map(|e| [e.weight.re, e.weight.im, e.exponent.re, e.exponent.im])
        .collect()
}

fn unpack(p: &[f64]) -> Vec<ExpTerm> {
    p.chunks(4)
        .map(|c| ExpTerm { weight: C64::new(c[0], c[1]), exponent: C64::new(c[2].min(0.0), c[3]) })
        .collect()
}

fn cost(terms: &[ExpTerm], samples: &CorrelationTable) -> f64 {
    samples
        .t_grid
        .iter()
        .zip(&samples.values)
        .map(|(&t, &c)| (eval_terms(terms, t) - c).norm_sqr())
        .sum()
}

fn residual_and_jacobian(terms: &[ExpTerm], samples: &CorrelationTable) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len();
    let np = 4 * terms.len();
    let mut r = DVector::zeros(2 * n);
    let mut j = DMatrix::zeros(2 * n, np);
    for (i, (&t, &c)) in samples.t_grid.iter().zip(&samples.values).enumerate() {
        let d = eval_terms(terms, t) - c;
        r[2 * i] = d.re;
        r[2 * i + 1] = d.im;
        for (k, e) in terms.iter().enumerate() {
            let ex = (e.exponent * t).exp();
            let dw = t * e.weight * ex;
            let cols = [ex, C64::new(0.0, 1.0) * ex, dw, C64::new(0.0, 1.0) * dw];
            for (q, v) in cols.iter().enumerate() {
                j[(2 * i, 4 * k + q)] = v.re;
                j[(2 * i + 1, 4 * k + q)] = v.im;
            }
        }
    }
    (r, j)
}

/// Returns the best iterate; `converged` is false when the iteration cap
/// was reached while the cost was still decreasing.
pub fn refine_fit(init: &ExponentialFit, samples: &CorrelationTable, cfg: &RefineConfig) -> Result<ExponentialFit> {
    if init.terms.is_empty() {
        return Err(Error::InvalidArgument("cannot refine an empty fit".into()));
    }
    let mut p = pack(&unpack(&pack(&init.terms)));
    let mut terms = unpack(&p);
    let mut c = cost(&terms, samples);
    let mut mu = cfg.initial_damping;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (r, j) = residual_and_jacobian(&terms, samples);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-300 || c == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while mu < 1e20 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += mu * jtj[(d, d)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let trial_terms = unpack(&trial);
            let tc = cost(&trial_terms, samples);
            if tc < c {
                let rel = (c - tc) / c;
                p = pack(&trial_terms);
                terms = trial_terms;
                c = tc;
                mu = (mu * 0.3).max(1e-15);
                accepted = true;
                if rel < cfg.rel_cost_tol {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            // no descent direction left at working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    let residual = residual_of(&terms, samples);
    Ok(ExponentialFit { terms, residual, model_order: init.model_order, converged, iterations })
}
