use std::f64::consts::PI;

use crate::bath_fit::{SpectrumKind, SpectrumSpec};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::C64;

/// Half-width of the default window around each Lorentzian term, in units
/// of its rate.
pub const DEFAULT_WINDOW_WIDTHS: f64 = 25.0;

/// Largest tolerated fraction of spectral mass outside the window.
///
/// A Lorentzian of rate `gamma` leaves `gamma / (pi a)` of its mass beyond
/// `|omega - eta| > a`, about 1.3e-2 for the default 25-rate window.
pub const DEFAULT_TAIL_TOL: f64 = 2e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Midpoint rule on `N` equal cells.
    Uniform,
    GaussLegendre,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Uniform => "uniform",
            Rule::GaussLegendre => "gauss_legendre",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedBath {
    modes: Vec<BathMode>,
    window: (f64, f64),
    rule: Rule,
    /// Fraction of the spectral mass outside the window.
    tail_mass: f64,
}

impl DiscretizedBath {
    pub fn from_modes(modes: Vec<BathMode>, window: (f64, f64), rule: Rule) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("a bath needs at least one mode".into()));
        }
        if modes.windows(2).any(|w| !(w[1].omega > w[0].omega)) {
            return Err(Error::InvalidArgument("bath frequencies must be strictly increasing".into()));
        }
        if modes.iter().any(|m| !(m.g >= 0.0) || !m.g.is_finite()) {
            return Err(Error::InvalidArgument("bath couplings must be finite and nonnegative".into()));
        }
        Ok(Self { modes, window, rule, tail_mass: 0.0 })
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.g * m.g).sum()
    }

    /// `sum_k g_k^2 exp(-i omega_k t)`.
    pub fn correlation_at(&self, t: f64) -> C64 {
        self.modes.iter().map(|m| C64::from_polar(m.g * m.g, -m.omega * t)).sum()
    }

    /// Time after which the discrete bath revives, `2 pi / d_omega` for the
    /// smallest spacing.
    pub fn recurrence_time(&self) -> f64 {
        let min_gap = self
            .modes
            .windows(2)
            .map(|w| w[1].omega - w[0].omega)
            .fold(f64::INFINITY, f64::min);
        2.0 * PI / min_gap
    }
}

/// Union of `[eta_j - 25 gamma_j, eta_j + 25 gamma_j]` for Lorentzian sums,
/// intersected with the support; the support itself otherwise.
pub fn default_window(spec: &SpectrumSpec) -> (f64, f64) {
    let (lo, hi) = spec.support();
    match spec.kind() {
        SpectrumKind::LorentzianSum(pm) => {
            let a = pm
                .modes()
                .iter()
                .map(|m| m.eta - DEFAULT_WINDOW_WIDTHS * m.gamma)
                .fold(f64::INFINITY, f64::min);
            let b = pm
                .modes()
                .iter()
                .map(|m| m.eta + DEFAULT_WINDOW_WIDTHS * m.gamma)
                .fold(f64::NEG_INFINITY, f64::max);
            (a.max(lo), b.min(hi))
        }
        _ => (lo, hi),
    }
}

/// Star discretization `g_k^2 = S(omega_k) w_k`, scaled so that the
/// couplings carry exactly the spectral mass inside the window.
pub fn discretize_bath(spec: &SpectrumSpec, window: Option<(f64, f64)>, n: usize, rule: Rule) -> Result<DiscretizedBath> {
    discretize_bath_with_tol(spec, window, n, rule, DEFAULT_TAIL_TOL)
}

pub fn discretize_bath_with_tol(
    spec: &SpectrumSpec,
    window: Option<(f64, f64)>,
    n: usize,
    rule: Rule,
    tail_tol: f64,
) -> Result<DiscretizedBath> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one bath mode".into()));
    }
    let (a, b) = window.unwrap_or_else(|| default_window(spec));
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidArgument(format!("invalid frequency window [{a}, {b}]")));
    }
    let total = spec.total_mass()?;
    if !(total >= 0.0 && total.is_finite()) {
        return Err(Error::InvalidArgument(format!("spectral mass {total} is not a finite nonnegative number")));
    }
    let tail_mass = if total > 0.0 { (1.0 - spec.mass_in(a, b)? / total).max(0.0) } else { 0.0 };
    if tail_mass > tail_tol {
        return Err(Error::Coverage { tail_mass, tol: tail_tol });
    }
    let mut nodes = Vec::with_capacity(n);
    match rule {
        Rule::Uniform => {
            let dw = (b - a) / n as f64;
            for k in 0..n {
                nodes.push((a + (k as f64 + 0.5) * dw, dw));
            }
        }
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push((0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi));
            }
        }
    }
    let raw: Vec<f64> = nodes.iter().map(|&(w, dw)| (spec.eval(w) * dw).max(0.0)).collect();
    let raw_sum: f64 = raw.iter().sum();
    // rescale to the window mass; a no-op up to quadrature error once the
    // spectrum is resolved, and exact for a single mode
    let scale = if raw_sum > 0.0 { spec.mass_in(a, b)? / raw_sum } else { 0.0 };
    let modes = nodes
        .iter()
        .zip(&raw)
        .map(|(&(omega, _), &g2)| BathMode { omega, g: (g2 * scale).sqrt() })
        .collect();
    let mut bath = DiscretizedBath::from_modes(modes, (a, b), rule)?;
    bath.tail_mass = tail_mass;
    Ok(bath)
}
