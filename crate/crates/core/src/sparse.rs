//! Compressed-row Hermitian storage.
//!
//! Both triangles are stored; the lower entry is always the exact conjugate
//! of the upper one, so the matrix equals its conjugate transpose bit-for-bit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

/// Collects diagonal and upper-triangle entries and mirrors them.
#[derive(Debug)]
pub struct HermitianBuilder {
    n: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl HermitianBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    pub fn diagonal(&mut self, i: usize, value: f64) {
        self.rows[i].push((i, Complex64::new(value, 0.0)));
    }

    /// Sets `(i, j)` to `value` and `(j, i)` to its conjugate. Requires `i != j`.
    pub fn pair(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert_ne!(i, j);
        self.rows[i].push((j, value));
        self.rows[j].push((i, value.conj()));
    }

    pub fn build(self) -> HermitianCsr {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|(c, _)| *c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        HermitianCsr { n: self.n, row_ptr, col_idx, values }
    }
}

impl HermitianCsr {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let mut b = HermitianBuilder::new(n);
        for i in 0..n {
            b.diagonal(i, m[(i, i)].re);
            for j in i + 1..n {
                if m[(i, j)] != Complex64::new(0.0, 0.0) {
                    b.pair(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, j, v) in self.entries() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        Ok(())
    }

    /// Exact check that `A = A^*`.
    pub fn is_hermitian(&self) -> bool {
        self.entries().all(|(i, j, v)| self.get(j, i) == v.conj())
    }

    pub fn map_values<F: Fn(usize, usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[p] = f(i, self.col_idx[p], self.values[p]);
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn to_dense_real(&self) -> Option<DMatrix<f64>> {
        if !self.is_real() {
            return None;
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v.re;
        }
        Some(m)
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    pub fn matvec_real(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p].re * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut center = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if i == j {
                    center = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.entries().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }
}
