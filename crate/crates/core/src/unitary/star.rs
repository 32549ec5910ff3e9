//! Hamiltonians of a head factor coupled linearly to independent bosonic
//! modes, restricted to an [`ExcitationBasis`]:
//!
//! `H = H_head + sum_k w_k b_k^+ b_k + sum_c sum_k (c_k A_c b_k^+ + c_k^* A_c^+ b_k)`.
//!
//! Matrix elements leaving the truncated basis are dropped.

use nalgebra::{DMatrix, DVector};

use super::basis::ExcitationBasis;
use crate::error::{Error, Result};
use crate::linalg::{CsrBuilder, CsrMatrix};
use crate::C64;

#[derive(Clone, Debug)]
pub struct Channel {
    /// `A_c`, acting on the head.
    pub head_op: CsrMatrix,
    /// `(mode index, c_k)`.
    pub modes: Vec<(usize, C64)>,
}

#[derive(Clone, Debug)]
pub struct StarSpec {
    pub head_h: CsrMatrix,
    pub frequencies: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl StarSpec {
    fn validate(&self, basis: &ExcitationBasis) -> Result<()> {
        let hd = basis.head_dim();
        if self.head_h.nrows() != hd || self.head_h.ncols() != hd {
            return Err(Error::Signature(format!("head Hamiltonian must be {hd}x{hd}")));
        }
        if self.frequencies.len() != basis.mode_count() {
            return Err(Error::Signature(format!(
                "{} frequencies for {} modes",
                self.frequencies.len(),
                basis.mode_count()
            )));
        }
        for (c, ch) in self.channels.iter().enumerate() {
            if ch.head_op.nrows() != hd || ch.head_op.ncols() != hd {
                return Err(Error::Signature(format!("channel {c} head operator must be {hd}x{hd}")));
            }
            if let Some(&(k, _)) = ch.modes.iter().find(|(k, _)| *k >= basis.mode_count()) {
                return Err(Error::IndexOutOfRange { index: k, len: basis.mode_count() });
            }
        }
        Ok(())
    }
}

pub fn build_star_hamiltonian(basis: &ExcitationBasis, spec: &StarSpec) -> Result<CsrMatrix> {
    spec.validate(basis)?;
    let n = basis.dim();
    // (channel, coupling) per mode
    let mut by_mode: Vec<Vec<(usize, C64)>> = vec![Vec::new(); basis.mode_count()];
    for (c, ch) in spec.channels.iter().enumerate() {
        for &(k, g) in &ch.modes {
            by_mode[k].push((c, g));
        }
    }
    let adjoints: Vec<CsrMatrix> = spec.channels.iter().map(|c| c.head_op.adjoint()).collect();
    let mut b = CsrBuilder::new(n, n);
    let mut entries: Vec<(usize, C64)> = Vec::new();
    let mut modes = Vec::new();
    let mut other = Vec::new();
    for &(h, k, start) in basis.blocks() {
        for r in 0..basis.block_len(k) {
            let row = start + r;
            basis.unrank(r, k, &mut modes);
            entries.clear();
            for (h2, v) in spec.head_h.row(h) {
                if let Some(off) = basis.block_offset(h2, k) {
                    entries.push((off + r, v));
                }
            }
            let energy: f64 = modes.iter().map(|&m| spec.frequencies[m as usize]).sum();
            if energy != 0.0 {
                entries.push((row, C64::new(energy, 0.0)));
            }
            // c_k A b_k^+ : column has one quantum fewer in mode k
            let mut i = 0;
            while i < modes.len() {
                let m = modes[i];
                let mut mult = 1;
                while i + mult < modes.len() && modes[i + mult] == m {
                    mult += 1;
                }
                if !by_mode[m as usize].is_empty() {
                    other.clear();
                    other.extend_from_slice(&modes[..i]);
                    other.extend_from_slice(&modes[i + 1..]);
                    let amp = (mult as f64).sqrt();
                    for &(c, g) in &by_mode[m as usize] {
                        for (h2, a) in spec.channels[c].head_op.row(h) {
                            if let Some(col) = basis.index(h2, &other) {
                                entries.push((col, g * a * amp));
                            }
                        }
                    }
                }
                i += mult;
            }
            // c_k^* A^+ b_k : column has one quantum more in mode k
            for (c, ch) in spec.channels.iter().enumerate() {
                for (h2, a) in adjoints[c].row(h) {
                    let Some(off) = basis.block_offset(h2, k + 1) else { continue };
                    for &(m, g) in &ch.modes {
                        let pos = modes.partition_point(|&x| x <= m as u32);
                        let mult = modes[..pos].iter().rev().take_while(|&&x| x == m as u32).count();
                        other.clear();
                        other.extend_from_slice(&modes[..pos]);
                        other.push(m as u32);
                        other.extend_from_slice(&modes[pos..]);
                        let col = off + basis.rank(&other);
                        entries.push((col, g.conj() * a * ((mult + 1) as f64).sqrt()));
                    }
                }
            }
            entries.sort_unstable_by_key(|e| e.0);
            let mut j = 0;
            while j < entries.len() {
                let (col, mut v) = entries[j];
                j += 1;
                while j < entries.len() && entries[j].0 == col {
                    v += entries[j].1;
                    j += 1;
                }
                b.push(col, v);
            }
            b.finish_row();
        }
    }
    Ok(b.build())
}

/// Diagonal of `e(h) + sum_k n_k`.
pub fn excitation_numbers(basis: &ExcitationBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    for &(h, k, start) in basis.blocks() {
        let e = (basis.head_excitations()[h] + k) as f64;
        out[start..start + basis.block_len(k)].iter_mut().for_each(|x| *x = e);
    }
    out
}

/// Head-factor density matrix of a pure state, tracing out all modes.
pub fn reduce_to_head(basis: &ExcitationBasis, psi: &DVector<C64>) -> DMatrix<C64> {
    let hd = basis.head_dim();
    let mut rho = DMatrix::zeros(hd, hd);
    for h1 in 0..hd {
        for h2 in 0..=h1 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..=basis.k_max() {
                if let (Some(a), Some(b)) = (basis.block_offset(h1, k), basis.block_offset(h2, k)) {
                    for r in 0..basis.block_len(k) {
                        s += psi[a + r] * psi[b + r].conj();
                    }
                }
            }
            rho[(h1, h2)] = s;
            rho[(h2, h1)] = s.conj();
        }
    }
    rho
}
