//! Quadrature rules and special functions used by the spectral routines.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 0 {
                break;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate and its distance to the embedded
/// 7-point Gauss estimate.
pub fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: C64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss–Kronrod integration starting from the given
/// breakpoints; the interval with the largest error estimate is bisected
/// until the summed estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> C64>(f: F, breakpoints: &[f64], abs_tol: f64, max_intervals: usize) -> Result<Integral> {
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("integration breakpoints must be increasing".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= abs_tol || heap.len() >= max_intervals {
            let mut pieces = heap.into_vec();
            // fixed summation order regardless of heap layout
            pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = pieces.iter().map(|p| p.value).sum();
            let intervals = pieces.len();
            if total_err > abs_tol {
                return Err(Error::Accuracy { estimate: total_err, tol: abs_tol });
            }
            return Ok(Integral { value, error: total_err, intervals });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Accuracy { estimate: total_err, tol: abs_tol });
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            heap.push(Piece { a, b, value, error });
        }
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], abs_tol: f64, max_intervals: usize) -> Result<(f64, f64)> {
    let r = integrate(|x| C64::new(f(x), 0.0), breakpoints, abs_tol, max_intervals)?;
    Ok((r.value.re, r.error))
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sine and cosine integrals `(Si(x), Ci(x))` for `x > 0`.
pub fn sici(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "sici needs x > 0");
    if x > 2.0 {
        let e1 = exp_integral_imag(x);
        (std::f64::consts::FRAC_PI_2 + e1.im, -e1.re)
    } else {
        let mut si = 0.0;
        let mut ci = 0.0;
        // term_n = (-1)^n x^n / n!
        let mut term = 1.0;
        for n in 1..60usize {
            term *= x / n as f64;
            let signed = if (n / 2) % 2 == 0 { term } else { -term };
            if n % 2 == 1 {
                si += signed / n as f64;
            } else {
                ci += signed / n as f64;
            }
            if term < 1e-18 * (si.abs() + 1.0) && n > 4 {
                break;
            }
        }
        (si, EULER_GAMMA + x.ln() + ci)
    }
}

/// `E1(i x) = int_x^inf e^{-i u} / u du` for `x > 2`, by the continued
/// fraction evaluated with the modified Lentz method.
pub fn exp_integral_imag(x: f64) -> C64 {
    let tiny = 1e-300;
    let mut b = C64::new(1.0, x);
    let mut c = C64::new(1.0 / tiny, 0.0);
    let mut d = C64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..100_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = C64::new(1.0, 0.0) / (d * a + b);
        c = b + C64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    C64::new(x.cos(), -x.sin()) * h
}
