use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    LindbladRegression,
    AnalyticPseudomode,
    UnitarySpectrum,
    DilationNumeric,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::LindbladRegression => "lindblad_regression",
            Provenance::AnalyticPseudomode => "analytic_pseudomode",
            Provenance::UnitarySpectrum => "unitary_spectrum",
            Provenance::DilationNumeric => "dilation_numeric",
        }
    }
}

/// Samples of `C(t + s, s)` on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub t_grid: Vec<f64>,
    pub s_offset: f64,
    pub values: Vec<C64>,
    pub provenance: Provenance,
    /// Numerical error estimate, when the producer has one.
    pub error_estimate: Option<f64>,
}

impl CorrelationTable {
    pub fn new(t_grid: Vec<f64>, s_offset: f64, values: Vec<C64>, provenance: Provenance) -> Result<Self> {
        if t_grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!("{} times but {} values", t_grid.len(), values.len())));
        }
        Ok(Self { t_grid, s_offset, values, provenance, error_estimate: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Constant spacing of the grid, if it has one (relative tolerance 1e-9).
    pub fn uniform_step(&self) -> Option<f64> {
        if self.t_grid.len() < 2 {
            return None;
        }
        let dt = (self.t_grid[self.t_grid.len() - 1] - self.t_grid[0]) / (self.t_grid.len() - 1) as f64;
        let ok = self.t_grid.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs());
        ok.then_some(dt)
    }

    /// `t,re,im` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, provenance: Provenance) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("missing column `{name}` in correlation table")))
        };
        let (it, ir, ii) = (col("t")?, col("re")?, col("im")?);
        let mut t_grid = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("row {}: bad number in column {i}", line + 2)))
            };
            t_grid.push(num(it)?);
            values.push(C64::new(num(ir)?, num(ii)?));
        }
        Self::new(t_grid, 0.0, values, provenance)
    }
}

/// Discrete norms of the pointwise difference of two tables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceReport {
    pub max_abs: f64,
    /// `sqrt(sum_i |a_i - b_i|^2)`.
    pub l2: f64,
    /// `sum_i |a_i - b_i|`.
    pub l1: f64,
}

pub fn correlation_distance(a: &CorrelationTable, b: &CorrelationTable) -> Result<DistanceReport> {
    if a.t_grid.len() != b.t_grid.len()
        || a.t_grid.iter().zip(&b.t_grid).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::InvalidArgument("correlation tables are sampled on different grids".into()));
    }
    let mut r = DistanceReport { max_abs: 0.0, l2: 0.0, l1: 0.0 };
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = (x - y).norm();
        r.max_abs = r.max_abs.max(d);
        r.l2 += d * d;
        r.l1 += d;
    }
    r.l2 = r.l2.sqrt();
    Ok(r)
}
