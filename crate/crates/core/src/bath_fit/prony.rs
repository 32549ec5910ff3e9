//! Matrix-pencil estimation of complex exponential sums.

use nalgebra::{DMatrix, DVector, SVD};

use crate::correlation::{correlation_distance, CorrelationTable, DistanceReport, Provenance};
use crate::error::{Error, Result};
use crate::C64;

/// Largest admissible real part of a fitted exponent.
pub const STABILITY_TOL: f64 = 1e-10;

/// Singular values below this fraction of the largest are noise.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub weight: C64,
    pub exponent: C64,
}

/// `C(t) ~ sum_i weight_i exp(exponent_i t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialFit {
    pub terms: Vec<ExpTerm>,
    pub residual: DistanceReport,
    pub model_order: usize,
    /// Always true for pencil estimates; set by the refinement otherwise.
    pub converged: bool,
    pub iterations: usize,
}

impl ExponentialFit {
    pub fn eval(&self, t: f64) -> C64 {
        eval_terms(&self.terms, t)
    }

    pub fn table(&self, t_grid: &[f64]) -> CorrelationTable {
        let values = t_grid.iter().map(|&t| self.eval(t)).collect();
        CorrelationTable::new(t_grid.to_vec(), 0.0, values, Provenance::AnalyticPseudomode).expect("matching lengths")
    }
}

pub(crate) fn eval_terms(terms: &[ExpTerm], t: f64) -> C64 {
    terms.iter().map(|e| e.weight * (e.exponent * t).exp()).sum()
}

pub(crate) fn residual_of(terms: &[ExpTerm], samples: &CorrelationTable) -> DistanceReport {
    let values = samples.t_grid.iter().map(|&t| eval_terms(terms, t)).collect();
    let model = CorrelationTable::new(samples.t_grid.clone(), samples.s_offset, values, samples.provenance).expect("same length");
    correlation_distance(&model, samples).expect("same grid")
}

/// Least-squares weights for fixed exponents.
pub(crate) fn fit_weights(exponents: &[C64], samples: &CorrelationTable) -> Result<Vec<C64>> {
    let n = samples.len();
    let m = exponents.len();
    let a = DMatrix::from_fn(n, m, |i, j| (exponents[j] * samples.t_grid[i]).exp());
    let b = DVector::from_column_slice(&samples.values);
    let svd = SVD::new(a, true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("weight least squares failed: {e}")))?;
    Ok(x.iter().copied().collect())
}

fn eigenvalues(a: &DMatrix<C64>) -> Vec<C64> {
    if a.nrows() == 1 {
        return vec![a[(0, 0)]];
    }
    let (_, t) = a.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn prony_decompose(samples: &CorrelationTable, order: usize) -> Result<ExponentialFit> {
    if order < 1 {
        return Err(Error::InvalidArgument("model order must be >= 1".into()));
    }
    let n = samples.len();
    if 2 * order > n {
        return Err(Error::InvalidArgument(format!("order {order} needs at least {} samples, got {n}", 2 * order)));
    }
    let dt = samples
        .uniform_step()
        .ok_or_else(|| Error::InvalidArgument("matrix pencil needs a uniform time grid".into()))?;
    let l = n / 2;
    let rows = n - l;
    let y = DMatrix::from_fn(rows, l + 1, |i, j| samples.values[i + j]);
    let svd = SVD::new(y, false, true);
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().enumerate().map(|(i, s)| (s, i)).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = sv.first().map(|s| s.0).unwrap_or(0.0);
    let rank = sv.iter().filter(|s| s.0 > RANK_TOL * smax).count();
    if rank < order {
        return Err(Error::RankDeficient { rank, order });
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    // dominant right-singular subspace as rows of V^H
    let w = DMatrix::from_fn(order, l + 1, |r, j| v_t[(sv[r].1, j)]);
    let w0 = w.columns(0, l).clone_owned();
    let w1 = w.columns(1, l).clone_owned();
    let gram = &w0 * w0.adjoint();
    let gram_inv = gram
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: order - 1, order })?;
    let pencil = &w1 * w0.adjoint() * gram_inv;
    let mut exponents: Vec<C64> = eigenvalues(&pencil).into_iter().map(|z| z.ln() / dt).collect();
    for e in &mut exponents {
        if e.re > STABILITY_TOL {
            e.re = 0.0;
        }
    }
    exponents.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let weights = fit_weights(&exponents, samples)?;
    let terms: Vec<ExpTerm> = weights
        .into_iter()
        .zip(exponents)
        .map(|(weight, exponent)| ExpTerm { weight, exponent })
        .collect();
    let residual = residual_of(&terms, samples);
    Ok(ExponentialFit { terms, residual, model_order: order, converged: true, iterations: 0 })
}
