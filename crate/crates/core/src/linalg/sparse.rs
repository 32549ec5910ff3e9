//! Compressed sparse row storage for complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::LinearMap;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        assert!(ncols <= u32::MAX as usize, "column count exceeds u32 index range");
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut b = CsrBuilder::new(n, n);
        for (i, &d) in diag.iter().enumerate() {
            b.push(i, d);
            b.finish_row();
        }
        b.build()
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut b = CsrBuilder::new(nrows, ncols);
        let mut row = 0;
        let mut it = trip.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            while row < r {
                b.finish_row();
                row += 1;
            }
            b.push(c, v);
        }
        while row < nrows {
            b.finish_row();
            row += 1;
        }
        b.build()
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut b = CsrBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                b.push(j, m[(i, j)]);
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .zip(&self.values[a..b])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&(j as u32)) {
            Ok(k) => self.values[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn transpose(&self) -> Self {
        let trip = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = CsrBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let mut x = self.row(i).peekable();
            let mut y = other.row(i).map(|(j, v)| (j, v * s)).peekable();
            loop {
                match (x.peek().copied(), y.peek().copied()) {
                    (Some((jx, vx)), Some((jy, vy))) => {
                        if jx == jy {
                            b.push(jx, vx + vy);
                            x.next();
                            y.next();
                        } else if jx < jy {
                            b.push(jx, vx);
                            x.next();
                        } else {
                            b.push(jy, vy);
                            y.next();
                        }
                    }
                    (Some((jx, vx)), None) => {
                        b.push(jx, vx);
                        x.next();
                    }
                    (None, Some((jy, vy))) => {
                        b.push(jy, vy);
                        y.next();
                    }
                    (None, None) => break,
                }
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut b = CsrBuilder::new(self.nrows, other.ncols);
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut mark = vec![false; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, v) in other.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * v;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                b.push(j, acc[j]);
                acc[j] = C64::new(0.0, 0.0);
                mark[j] = false;
            }
            touched.clear();
            b.finish_row();
        }
        b.build()
    }

    /// Kronecker product, `self` being the more significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.nrows, other.ncols);
        let mut b = CsrBuilder::new(self.nrows * p, self.ncols * q);
        for i in 0..self.nrows {
            for r in 0..p {
                for (j, a) in self.row(i) {
                    for (c, v) in other.row(r) {
                        b.push(j * q + c, a * v);
                    }
                }
                b.finish_row();
            }
        }
        b.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.iter() {
            worst = worst.max((v - self.get(j, i).conj()).norm());
        }
        worst
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = C64::new(0.0, 0.0);
            for k in a..b {
                s += self.values[k] * x[self.indices[k] as usize];
            }
            *yi = s;
        }
    }
}

impl LinearMap for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y)
    }
}

/// Row-by-row CSR assembly. Columns within a row must be pushed in
/// increasing order; zeros are skipped.
pub struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<C64>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        assert!(ncols <= u32::MAX as usize, "column count exceeds u32 index range");
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        Self {
            nrows,
            ncols,
            indptr,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn reserve(&mut self, nnz: usize) {
        self.indices.reserve(nnz);
        self.values.reserve(nnz);
    }

    pub fn push(&mut self, col: usize, v: C64) {
        if v.re == 0.0 && v.im == 0.0 {
            return;
        }
        debug_assert!(col < self.ncols);
        let start = *self.indptr.last().unwrap();
        if self.indices.len() > start {
            debug_assert!((*self.indices.last().unwrap() as usize) < col, "unsorted row");
        }
        self.indices.push(col as u32);
        self.values.push(v);
    }

    pub fn finish_row(&mut self) {
        self.indptr.push(self.indices.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.indptr.len(), self.nrows + 1, "row count mismatch");
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}
