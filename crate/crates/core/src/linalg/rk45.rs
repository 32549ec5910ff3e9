//! Dormand–Prince 5(4) integration of linear autonomous systems `y' = A y`.
//! The stage nodes never enter because the right-hand side has no explicit
//! time dependence.

use num_complex::Complex64 as C64;

use super::LinearMap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk45Config {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for Rk45Config {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for &(c, k) in terms {
            s += k[i] * c;
        }
        *o = y[i] + s * h;
    }
}

pub struct Rk45<'a, A: LinearMap + ?Sized> {
    map: &'a A,
    cfg: Rk45Config,
    h: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

impl<'a, A: LinearMap + ?Sized> Rk45<'a, A> {
    pub fn new(map: &'a A, cfg: Rk45Config) -> Self {
        Self {
            map,
            cfg,
            h: None,
            steps: 0,
            rejected: 0,
        }
    }

    fn initial_step(&self, y: &[C64], f0: &[C64], span: f64) -> f64 {
        let scale = |v: &[C64]| {
            (v.iter()
                .zip(y)
                .map(|(a, b)| (a.norm() / (self.cfg.abs_tol + self.cfg.rel_tol * b.norm())).powi(2))
                .sum::<f64>()
                / y.len() as f64)
                .sqrt()
        };
        let d0 = scale(y);
        let d1 = scale(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span)
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn advance(&mut self, y: &mut Vec<C64>, t0: f64, t1: f64) -> Result<()> {
        let n = y.len();
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let zero = C64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut k5 = vec![zero; n];
        let mut k6 = vec![zero; n];
        let mut k7 = vec![zero; n];
        let mut tmp = vec![zero; n];
        let mut ynew = vec![zero; n];
        self.map.apply(y, &mut k1);
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, &k1, span),
        };
        let mut t = t0;
        while t < t1 {
            let last = t + h >= t1 - 1e-14 * t1.abs().max(1.0);
            let step = if last { t1 - t } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::Stiffness { attained: t, target: t1 });
            }
            combine(&mut tmp, y, step, &[(A21, &k1)]);
            self.map.apply(&tmp, &mut k2);
            combine(&mut tmp, y, step, &[(A31, &k1), (A32, &k2)]);
            self.map.apply(&tmp, &mut k3);
            combine(&mut tmp, y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            self.map.apply(&tmp, &mut k4);
            combine(&mut tmp, y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            self.map.apply(&tmp, &mut k5);
            combine(&mut tmp, y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            self.map.apply(&tmp, &mut k6);
            combine(&mut ynew, y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            self.map.apply(&ynew, &mut k7);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].norm().max(ynew[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                h *= 0.1;
                self.rejected += 1;
                continue;
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                std::mem::swap(y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                self.steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped final step says nothing about the natural step length
                if !last || step >= h {
                    h = step * factor;
                }
            } else {
                self.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Stiffness { attained: t, target: t1 });
                }
            }
            if self.steps + self.rejected > self.cfg.max_steps {
                return Err(Error::Stiffness { attained: t, target: t1 });
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn scalar_decay_and_rotation() {
        let a = DMatrix::from_row_slice(1, 1, &[C64::new(-0.3, -2.0)]);
        let mut rk = Rk45::new(&a, Rk45Config::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        rk.advance(&mut y, 0.0, 5.0).unwrap();
        let exact = (C64::new(-0.3, -2.0) * 5.0).exp();
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn zero_generator_is_constant() {
        let a = DMatrix::<C64>::zeros(3, 3);
        let mut rk = Rk45::new(&a, Rk45Config::default());
        let mut y = vec![C64::new(0.2, 0.1), C64::new(0.0, 0.0), C64::new(-1.0, 3.0)];
        let y0 = y.clone();
        rk.advance(&mut y, 0.0, 10.0).unwrap();
        assert_eq!(y, y0);
    }
}
