use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use crate::correlation::PseudomodeSet;
use crate::error::{Error, Result};
use crate::quadrature::integrate_real;

pub type SpectrumFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SpectrumKind {
    LorentzianSum(PseudomodeSet),
    /// Piecewise-linear interpolation of samples, zero outside the table.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
    /// A closure with bounded support.
    Callable { label: String, f: SpectrumFn },
}

impl fmt::Debug for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumKind::LorentzianSum(pm) => f.debug_tuple("LorentzianSum").field(pm).finish(),
            SpectrumKind::Tabulated { omega, .. } => write!(f, "Tabulated({} samples)", omega.len()),
            SpectrumKind::Callable { label, .. } => write!(f, "Callable({label})"),
        }
    }
}

/// A correlation spectrum `S(omega) >= 0` restricted to `support`.
#[derive(Clone, Debug)]
pub struct SpectrumSpec {
    kind: SpectrumKind,
    support: (f64, f64),
}

impl SpectrumSpec {
    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != values.len() {
            return Err(Error::InvalidArgument("a tabulated spectrum needs >= 2 (omega, S) pairs".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("omega samples must be strictly increasing".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("S value at omega = {} is not finite", omega[i])));
        }
        let support = (omega[0], omega[omega.len() - 1]);
        Ok(Self { kind: SpectrumKind::Tabulated { omega, values }, support })
    }

    pub fn callable(label: impl Into<String>, support: (f64, f64), f: SpectrumFn) -> Result<Self> {
        if !(support.0.is_finite() && support.1.is_finite() && support.1 > support.0) {
            return Err(Error::InvalidArgument("callable spectra need a bounded support".into()));
        }
        Ok(Self { kind: SpectrumKind::Callable { label: label.into(), f }, support })
    }

    /// Reads an `omega,S` CSV table.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse(format!("missing column `{name}` in spectrum table")))
        };
        let (iw, is) = (col("omega")?, col("S")?);
        let mut omega = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("row {}: bad number in column {i}", line + 2)))
            };
            omega.push(parse(iw)?);
            values.push(parse(is)?);
        }
        Self::tabulated(omega, values)
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Same spectrum, set to zero outside `[lo, hi]` (intersected with the
    /// current support).
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<Self> {
        let lo = lo.max(self.support.0);
        let hi = hi.min(self.support.1);
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self { kind: self.kind.clone(), support: (lo, hi) })
    }

    pub fn as_pseudomodes(&self) -> Option<&PseudomodeSet> {
        match &self.kind {
            SpectrumKind::LorentzianSum(pm) => Some(pm),
            _ => None,
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        if w < self.support.0 || w > self.support.1 {
            return 0.0;
        }
        match &self.kind {
            SpectrumKind::LorentzianSum(pm) => pm
                .modes()
                .iter()
                .map(|m| {
                    let h = 0.5 * m.gamma;
                    if h == 0.0 {
                        0.0
                    } else {
                        m.weight() / PI * h / (h * h + (w - m.eta).powi(2))
                    }
                })
                .sum(),
            SpectrumKind::Tabulated { omega, values } => {
                let i = omega.partition_point(|&x| x <= w);
                if i == 0 {
                    values[0]
                } else if i == omega.len() {
                    values[omega.len() - 1]
                } else {
                    let s = (w - omega[i - 1]) / (omega[i] - omega[i - 1]);
                    values[i - 1] + s * (values[i] - values[i - 1])
                }
            }
            SpectrumKind::Callable { f, .. } => f(w),
        }
    }

    /// `int_a^b S(omega) d omega` over the part of `[a, b]` inside the support.
    pub fn mass_in(&self, a: f64, b: f64) -> Result<f64> {
        let a = a.max(self.support.0);
        let b = b.min(self.support.1);
        if !(b > a) {
            return Ok(0.0);
        }
        match &self.kind {
            SpectrumKind::LorentzianSum(pm) => Ok(pm
                .modes()
                .iter()
                .map(|m| {
                    let h = 0.5 * m.gamma;
                    if h == 0.0 {
                        if m.eta >= a && m.eta <= b {
                            m.weight()
                        } else {
                            0.0
                        }
                    } else {
                        m.weight() / PI * (((b - m.eta) / h).atan() - ((a - m.eta) / h).atan())
                    }
                })
                .sum()),
            SpectrumKind::Tabulated { omega, .. } => {
                let mut pts = vec![a];
                pts.extend(omega.iter().copied().filter(|&x| x > a && x < b));
                pts.push(b);
                // trapezoid is exact on the linear interpolant
                Ok(pts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1]))).sum())
            }
            SpectrumKind::Callable { f, .. } => {
                let scale = integrate_real(|x| f(x).abs(), &[a, b], 1e-10, 20_000)?.0.max(1e-300);
                Ok(integrate_real(|x| f(x), &[a, b], 1e-13 * scale.max(1.0), 20_000)?.0)
            }
        }
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.mass_in(self.support.0, self.support.1)
    }
}

/// `S(w) = sum_j (|lambda_j|^2 / pi) (gamma_j/2) / ((gamma_j/2)^2 + (w - eta_j)^2)`,
/// whose Fourier transform is the pseudomode correlation function.
pub fn lorentzian_spectrum(pm: &PseudomodeSet) -> SpectrumSpec {
    SpectrumSpec {
        kind: SpectrumKind::LorentzianSum(pm.clone()),
        support: (f64::NEG_INFINITY, f64::INFINITY),
    }
}
