//! Excitation-truncated product basis `head (x) modes`.
//!
//! The head is a small dense factor (a qubit, or qubit ⊗ damped modes) whose
//! basis states carry an excitation count `e(h)`. Bosonic mode occupations
//! are stored as multisets of mode indices; a state `(h, m)` is kept when
//! `e(h) + |m| <= k_max` and, optionally, when `e(h) + |m|` has a fixed
//! parity.

use crate::error::{Error, Result};

/// Default upper bound on basis size.
pub const DEFAULT_BASIS_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExcitationBasis {
    head_excitations: Vec<usize>,
    mode_count: usize,
    k_max: usize,
    parity: Option<Parity>,
    /// `binom[n][k] = C(n, k)` for `n <= mode_count + k_max`.
    binom: Vec<Vec<usize>>,
    /// `offsets[h][k]`: first index of head `h` with `k` bath quanta, or
    /// `None` when that block is excluded.
    offsets: Vec<Vec<Option<usize>>>,
    /// Blocks in index order: `(head, k, start)`.
    blocks: Vec<(usize, usize, usize)>,
    dim: usize,
}

impl ExcitationBasis {
    pub fn new(head_excitations: Vec<usize>, mode_count: usize, k_max: usize, parity: Option<Parity>) -> Result<Self> {
        Self::with_limit(head_excitations, mode_count, k_max, parity, DEFAULT_BASIS_LIMIT)
    }

    pub fn with_limit(
        head_excitations: Vec<usize>,
        mode_count: usize,
        k_max: usize,
        parity: Option<Parity>,
        limit: usize,
    ) -> Result<Self> {
        if head_excitations.is_empty() {
            return Err(Error::InvalidArgument("head factor must have at least one state".into()));
        }
        let rows = mode_count + k_max + 1;
        let mut binom = vec![vec![0usize; k_max + 2]; rows];
        for n in 0..rows {
            binom[n][0] = 1;
            for k in 1..=k_max + 1 {
                let v = if n == 0 { 0 } else { binom[n - 1][k - 1].saturating_add(binom[n - 1][k]) };
                binom[n][k] = v;
            }
        }
        let mut offsets = vec![vec![None; k_max + 1]; head_excitations.len()];
        let mut blocks = Vec::new();
        let mut dim: usize = 0;
        for (h, &e) in head_excitations.iter().enumerate() {
            for k in 0..=k_max {
                if e + k > k_max {
                    break;
                }
                if let Some(p) = parity {
                    if Parity::of(e + k) != p {
                        continue;
                    }
                }
                let count = if mode_count == 0 {
                    usize::from(k == 0)
                } else {
                    binom[mode_count + k - 1][k]
                };
                if count == 0 {
                    continue;
                }
                offsets[h][k] = Some(dim);
                blocks.push((h, k, dim));
                dim = dim.saturating_add(count);
                if dim > limit {
                    return Err(Error::DimensionLimit {
                        dim,
                        limit,
                        hint: format!("reduce the mode count ({mode_count}) or k_max ({k_max})"),
                    });
                }
            }
        }
        Ok(Self { head_excitations, mode_count, k_max, parity, binom, offsets, blocks, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn head_dim(&self) -> usize {
        self.head_excitations.len()
    }

    pub fn head_excitations(&self) -> &[usize] {
        &self.head_excitations
    }

    /// Number of multisets of size `k`.
    pub fn block_len(&self, k: usize) -> usize {
        if self.mode_count == 0 {
            usize::from(k == 0)
        } else {
            self.binom[self.mode_count + k - 1][k]
        }
    }

    pub fn blocks(&self) -> &[(usize, usize, usize)] {
        &self.blocks
    }

    pub fn block_offset(&self, head: usize, k: usize) -> Option<usize> {
        self.offsets.get(head).and_then(|o| o.get(k).copied().flatten())
    }

    /// Rank of a nondecreasing list of mode indices among multisets of its size.
    pub fn rank(&self, modes: &[u32]) -> usize {
        modes
            .iter()
            .enumerate()
            .map(|(i, &a)| self.binom[a as usize + i][i + 1])
            .sum()
    }

    /// Inverse of [`rank`](Self::rank) for multisets of size `k`.
    pub fn unrank(&self, mut r: usize, k: usize, out: &mut Vec<u32>) {
        out.clear();
        out.resize(k, 0);
        for i in (0..k).rev() {
            // largest s with C(s, i+1) <= r
            let mut lo = i;
            let mut hi = self.mode_count + i - 1;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if self.binom[mid][i + 1] <= r {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            r -= self.binom[lo][i + 1];
            out[i] = (lo - i) as u32;
        }
    }

    /// Index of `(head, modes)`, or `None` when the label is outside the basis.
    pub fn index(&self, head: usize, modes: &[u32]) -> Option<usize> {
        if modes.iter().any(|&m| m as usize >= self.mode_count) {
            return None;
        }
        self.block_offset(head, modes.len()).map(|off| off + self.rank(modes))
    }

    /// Label of a basis index.
    pub fn label(&self, index: usize) -> Option<(usize, Vec<u32>)> {
        if index >= self.dim {
            return None;
        }
        let pos = self.blocks.partition_point(|&(_, _, start)| start <= index) - 1;
        let (h, k, start) = self.blocks[pos];
        let mut m = Vec::new();
        self.unrank(index - start, k, &mut m);
        Some((h, m))
    }

    /// Index of the head state `h` with all modes empty.
    pub fn vacuum_index(&self, head: usize) -> Option<usize> {
        self.block_offset(head, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_binomials() {
        let b = ExcitationBasis::new(vec![0, 1], 5, 3, None).unwrap();
        // head 0: C(4,0)+C(5,1)+C(6,2)+C(7,3); head 1: up to two quanta
        assert_eq!(b.dim(), (1 + 5 + 15 + 35) + (1 + 5 + 15));
        let odd = ExcitationBasis::new(vec![0, 1], 5, 3, Some(Parity::Odd)).unwrap();
        assert_eq!(odd.dim(), (5 + 35) + (1 + 15));
    }

    #[test]
    fn rank_unrank_bijection() {
        let b = ExcitationBasis::new(vec![0, 1, 1, 2], 6, 4, None).unwrap();
        let mut m = Vec::new();
        for i in 0..b.dim() {
            let (h, modes) = b.label(i).unwrap();
            assert!(modes.windows(2).all(|w| w[0] <= w[1]));
            assert!(b.head_excitations()[h] + modes.len() <= 4);
            assert_eq!(b.index(h, &modes), Some(i));
            b.unrank(b.rank(&modes), modes.len(), &mut m);
            assert_eq!(m, modes);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let err = ExcitationBasis::with_limit(vec![0, 1], 1000, 4, None, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::DimensionLimit { .. }));
    }
}
