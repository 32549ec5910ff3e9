//! Krylov-subspace approximations of `exp(z t A) v`.
//!
//! Hermitian maps use the Lanczos three-term recurrence; general maps use
//! Arnoldi with modified Gram–Schmidt. Each substep is accepted when the
//! leading term of the a-posteriori error expansion,
//! `beta |h_{m+1,m}| |tau z| |[phi_1(tau z H_m) e_1]_m|`, is below
//! `tol * beta`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{axpy, cdot, norm2, LinearMap};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    pub subspace_dim: usize,
    /// Local error per substep, relative to the norm of the propagated vector.
    pub tol: f64,
    pub max_substeps: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            subspace_dim: 30,
            tol: 1e-10,
            max_substeps: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Hermitian,
    General,
}

struct Basis {
    vectors: Vec<Vec<C64>>,
    hessenberg: DMatrix<C64>,
    size: usize,
    invariant: bool,
    norm_estimate: f64,
}

fn build_basis<A: LinearMap + ?Sized>(
    a: &A,
    structure: Structure,
    w: &[C64],
    beta: f64,
    m: usize,
) -> Basis {
    let n = w.len();
    let m = m.min(n).max(1);
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    vectors.push(w.iter().map(|x| x / beta).collect());
    let mut h = DMatrix::<C64>::zeros(m + 1, m);
    let mut u = vec![C64::new(0.0, 0.0); n];
    let mut norm_estimate: f64 = 0.0;
    for j in 0..m {
        a.apply(&vectors[j], &mut u);
        match structure {
            Structure::Hermitian => {
                if j > 0 {
                    let b = h[(j, j - 1)];
                    axpy(-b, &vectors[j - 1], &mut u);
                }
                let alpha = cdot(&vectors[j], &u).re;
                axpy(C64::new(-alpha, 0.0), &vectors[j], &mut u);
                // one local correction keeps the recurrence well conditioned
                let corr = cdot(&vectors[j], &u);
                axpy(-corr, &vectors[j], &mut u);
                h[(j, j)] = C64::new(alpha, 0.0);
            }
            Structure::General => {
                for i in 0..=j {
                    let hij = cdot(&vectors[i], &u);
                    axpy(-hij, &vectors[i], &mut u);
                    h[(i, j)] += hij;
                }
            }
        }
        let col_norm: f64 = (0..=j).map(|i| h[(i, j)].norm()).sum();
        norm_estimate = norm_estimate.max(col_norm);
        let hn = norm2(&u);
        if hn <= 1e-13 * norm_estimate.max(1e-300) || hn == 0.0 {
            return Basis {
                vectors,
                hessenberg: h,
                size: j + 1,
                invariant: true,
                norm_estimate,
            };
        }
        h[(j + 1, j)] = C64::new(hn, 0.0);
        if structure == Structure::Hermitian && j + 1 < m {
            h[(j, j + 1)] = C64::new(hn, 0.0);
        }
        norm_estimate = norm_estimate.max(col_norm + hn);
        vectors.push(u.iter().map(|x| x / hn).collect());
    }
    Basis {
        vectors,
        hessenberg: h,
        size: m,
        invariant: false,
        norm_estimate,
    }
}

/// Computes `(exp(s A) e_1, phi_1(s A) e_1)` for a small dense `A`.
fn exp_and_phi1(a: &DMatrix<C64>, s: C64) -> (Vec<C64>, Vec<C64>) {
    let k = a.nrows();
    let mut aug = DMatrix::<C64>::zeros(k + 1, k + 1);
    aug.view_mut((0, 0), (k, k)).copy_from(&(a * s));
    aug[(0, k)] = C64::new(1.0, 0.0);
    let e = aug.exp();
    let first: Vec<C64> = (0..k).map(|i| e[(i, 0)]).collect();
    let phi: Vec<C64> = (0..k).map(|i| e[(i, k)]).collect();
    (first, phi)
}

/// Substep state carried between successive calls so that a trajectory
/// reuses the last accepted substep length.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepMemory {
    pub tau: Option<f64>,
    pub substeps: usize,
}

/// Applies `exp(z t A)` to `v`, starting the clock at `t0` for error
/// reporting.
pub fn expm_action<A: LinearMap + ?Sized>(
    a: &A,
    z: C64,
    structure: Structure,
    v: &[C64],
    t: f64,
    cfg: &KrylovConfig,
    memory: &mut StepMemory,
    t0: f64,
) -> Result<Vec<C64>> {
    let mut w = v.to_vec();
    if t == 0.0 {
        return Ok(w);
    }
    let mut done = 0.0;
    while done < t {
        let beta = norm2(&w);
        if beta == 0.0 {
            return Ok(w);
        }
        let remaining = t - done;
        let basis = build_basis(a, structure, &w, beta, cfg.subspace_dim);
        let k = basis.size;
        let hm = basis.hessenberg.view((0, 0), (k, k)).clone_owned();
        let hnext = if basis.invariant {
            0.0
        } else {
            basis.hessenberg[(k, k - 1)].norm()
        };
        let cap = 3.0 * k as f64 / (z.norm() * basis.norm_estimate).max(1e-300);
        let mut tau = if basis.invariant {
            remaining
        } else {
            memory.tau.unwrap_or(remaining).min(remaining).min(cap)
        };
        let mut rejections = 0;
        let coeffs = loop {
            let s = z * tau;
            let (first, phi) = exp_and_phi1(&hm, s);
            let err = beta * hnext * s.norm() * phi[k - 1].norm();
            let allowed = cfg.tol * beta;
            if !err.is_finite() || first.iter().any(|c| !c.is_finite()) {
                tau *= 0.25;
            } else if err <= allowed {
                let factor = if err == 0.0 {
                    2.0
                } else {
                    (0.9 * (allowed / err).powf(1.0 / k as f64)).clamp(1.0, 2.0)
                };
                // keep the remembered length when the step was clipped to the target
                if tau < remaining || memory.tau.is_none() {
                    memory.tau = Some(tau * factor);
                }
                break first;
            } else {
                let factor = (0.9 * (allowed / err).powf(1.0 / k as f64)).clamp(0.1, 0.9);
                tau *= factor;
            }
            rejections += 1;
            if rejections > 60 || tau <= 1e-14 * t.max(1.0) {
                return Err(Error::Breakdown {
                    attained: t0 + done,
                    reason: format!("substep length underflow (tau = {tau:.3e})"),
                });
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); w.len()];
        for (i, c) in coeffs.iter().enumerate() {
            axpy(c * beta, &basis.vectors[i], &mut next);
        }
        w = next;
        done += tau;
        if remaining - tau <= 1e-14 * t.max(1.0) {
            done = t;
        }
        memory.substeps += 1;
        if memory.substeps > cfg.max_substeps {
            return Err(Error::Breakdown {
                attained: t0 + done,
                reason: format!("more than {} substeps", cfg.max_substeps),
            });
        }
    }
    Ok(w)
}

/// Samples `exp(z t A) v0` on an increasing time grid starting at zero.
pub fn expm_trajectory<A: LinearMap + ?Sized>(
    a: &A,
    z: C64,
    structure: Structure,
    v0: &[C64],
    t_grid: &[f64],
    cfg: &KrylovConfig,
) -> Result<Vec<Vec<C64>>> {
    let mut out = Vec::with_capacity(t_grid.len());
    let mut memory = StepMemory::default();
    let mut current = v0.to_vec();
    let mut t_prev = 0.0;
    for &t in t_grid {
        if t < t_prev {
            return Err(Error::InvalidArgument("time grid must be increasing".into()));
        }
        current = expm_action(a, z, structure, &current, t - t_prev, cfg, &mut memory, t_prev)?;
        out.push(current.clone());
        t_prev = t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_matrix(n: usize, hermitian: bool) -> DMatrix<C64> {
        let mut m = DMatrix::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5;
            let y = ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.5;
            c(x, y)
        });
        if hermitian {
            m = (&m + m.adjoint()) * c(0.5, 0.0);
        }
        m
    }

    #[test]
    fn hermitian_action_matches_dense_exponential() {
        let h = test_matrix(40, true) * c(3.0, 0.0);
        let v: Vec<C64> = (0..40).map(|i| c(1.0 / (1.0 + i as f64), 0.0)).collect();
        let t = 2.5;
        let cfg = KrylovConfig { subspace_dim: 12, ..Default::default() };
        let mut mem = StepMemory::default();
        let w = expm_action(&h, c(0.0, -1.0), Structure::Hermitian, &v, t, &cfg, &mut mem, 0.0).unwrap();
        let exact = (&h * c(0.0, -t)).exp() * nalgebra::DVector::from_vec(v);
        let err = w.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn general_action_matches_dense_exponential() {
        let a = test_matrix(30, false) - DMatrix::identity(30, 30) * c(0.5, 0.0);
        let v: Vec<C64> = (0..30).map(|i| c((i % 3) as f64, 1.0)).collect();
        let cfg = KrylovConfig { subspace_dim: 10, ..Default::default() };
        let traj = expm_trajectory(&a, c(1.0, 0.0), Structure::General, &v, &[0.0, 0.7, 3.0], &cfg).unwrap();
        for (k, &t) in [0.0, 0.7, 3.0].iter().enumerate() {
            let exact = (&a * c(t, 0.0)).exp() * nalgebra::DVector::from_vec(v.clone());
            let err = traj[k].iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8 * exact.norm().max(1.0), "t = {t}, err = {err}");
        }
    }

    #[test]
    fn invariant_subspace_is_exact() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]));
        let v = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let mut mem = StepMemory::default();
        let w = expm_action(&h, c(0.0, -1.0), Structure::Hermitian, &v, 10.0, &KrylovConfig::default(), &mut mem, 0.0)
            .unwrap();
        assert!((w[0] - C64::from_polar(1.0, -10.0)).norm() < 1e-13);
        assert_eq!(mem.substeps, 1);
    }
}
