//! `C(t) = int S(w) e^{-i w t} dw` by adaptive quadrature.
//!
//! Lorentzian terms are integrated in the shifted variable `u = w - eta`;
//! infinite tails beyond `|u| = A` use the closed form of
//! `int_A^inf e^{-i u t} / u^2 du`, leaving a remainder of at most
//! `h^2 / (3 A^3)` per side relative to the term's `w h / pi` prefactor.

use std::f64::consts::PI;

use super::table::{CorrelationTable, Provenance};
use crate::bath_fit::{SpectrumKind, SpectrumSpec};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, sici};
use crate::C64;

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

const MAX_INTERVALS: usize = 200_000;

/// `int_A^inf e^{-i u t} / u^2 du` for `A > 0`, `t >= 0`.
fn inverse_square_tail(a: f64, t: f64) -> C64 {
    let x = a * t;
    if x == 0.0 {
        return C64::new(1.0 / a, 0.0);
    }
    let (si, ci) = sici(x);
    let e1 = C64::new(-ci, si - 0.5 * PI);
    C64::from_polar(1.0 / a, -x) - C64::new(0.0, t) * e1
}

/// Breakpoints splitting `[lo, hi]` into pieces of at most about one
/// oscillation, with extra points at `marks`.
fn breakpoints(lo: f64, hi: f64, t: f64, marks: &[f64]) -> Vec<f64> {
    let pieces = ((hi - lo) * t / (2.0 * PI)).ceil().clamp(1.0, 50_000.0) as usize;
    let mut pts: Vec<f64> = (0..=pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect();
    pts.extend(marks.iter().copied().filter(|&m| m > lo && m < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    pts
}

fn lorentzian_term(w: f64, eta: f64, gamma: f64, support: (f64, f64), t: f64, tol: f64) -> Result<(C64, f64)> {
    let h = 0.5 * gamma;
    if h == 0.0 {
        let inside = eta >= support.0 && eta <= support.1;
        return Ok((if inside { C64::from_polar(w, -eta * t) } else { C64::new(0.0, 0.0) }, 0.0));
    }
    let pref = w * h / PI;
    let (ulo, uhi) = (support.0 - eta, support.1 - eta);
    // cutoff with tail remainder below a tenth of the budget
    let a = (20.0 * pref * h * h / (3.0 * tol)).cbrt().max(50.0 * h);
    let lo = if ulo.is_finite() { ulo } else { -a };
    let hi = if uhi.is_finite() { uhi } else { a };
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    if hi > lo {
        let marks = [-10.0 * h, -h, 0.0, h, 10.0 * h];
        let pts = breakpoints(lo, hi, t, &marks);
        let core = integrate(
            |u| C64::from_polar(1.0 / (h * h + u * u), -u * t),
            &pts,
            0.5 * tol / pref,
            MAX_INTERVALS,
        )?;
        value += core.value;
        error += core.error * pref;
    }
    let tail_bound = h * h / (3.0 * a * a * a);
    if !uhi.is_finite() {
        value += inverse_square_tail(hi, t);
        error += pref * tail_bound;
    }
    if !ulo.is_finite() {
        value += inverse_square_tail(-lo, t).conj();
        error += pref * tail_bound;
    }
    Ok((value * pref * C64::from_polar(1.0, -eta * t), error))
}

fn correlation_at(spec: &SpectrumSpec, t: f64, tol: f64) -> Result<(C64, f64)> {
    let support = spec.support();
    match spec.kind() {
        SpectrumKind::LorentzianSum(pm) => {
            let per = tol / pm.len() as f64;
            let mut v = C64::new(0.0, 0.0);
            let mut e = 0.0;
            for m in pm.modes() {
                let (x, err) = lorentzian_term(m.weight(), m.eta, m.gamma, support, t, per)?;
                v += x;
                e += err;
            }
            Ok((v, e))
        }
        SpectrumKind::Tabulated { omega, .. } => {
            let pts = breakpoints(support.0, support.1, t, omega);
            let r = integrate(|w| C64::from_polar(spec.eval(w), -w * t), &pts, tol, MAX_INTERVALS)?;
            Ok((r.value, r.error))
        }
        SpectrumKind::Callable { f, .. } => {
            let pts = breakpoints(support.0, support.1, t, &[]);
            let r = integrate(|w| C64::from_polar(f(w), -w * t), &pts, tol, MAX_INTERVALS)?;
            Ok((r.value, r.error))
        }
    }
}

pub fn correlation_from_spectrum(spec: &SpectrumSpec, t_grid: &[f64]) -> Result<CorrelationTable> {
    correlation_from_spectrum_with_tol(spec, t_grid, DEFAULT_QUAD_TOL)
}

/// Fourier integral of the spectrum with an absolute error budget `tol`
/// per time sample; the largest estimate is stored on the table.
pub fn correlation_from_spectrum_with_tol(spec: &SpectrumSpec, t_grid: &[f64], tol: f64) -> Result<CorrelationTable> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    let mut values = Vec::with_capacity(t_grid.len());
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        if t < 0.0 {
            return Err(Error::InvalidArgument("correlation times must be >= 0".into()));
        }
        let (v, e) = correlation_at(spec, t, tol)?;
        if e > tol {
            return Err(Error::Accuracy { estimate: e, tol });
        }
        values.push(v);
        worst = worst.max(e);
    }
    let mut table = CorrelationTable::new(t_grid.to_vec(), 0.0, values, Provenance::UnitarySpectrum)?;
    table.error_estimate = Some(worst);
    Ok(table)
}
