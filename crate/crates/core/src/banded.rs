//! Real symmetric band matrices: `LDLᵀ` inertia counts and spectrum slicing.
//!
//! By Sylvester's law of inertia the number of negative pivots of
//! `A - σI = LDLᵀ` is the number of eigenvalues of `A` below `σ`. Eigenvalues
//! inside an interval are isolated by bisection on these counts and polished
//! with Rayleigh-quotient iteration; every polished value is re-verified by
//! two counts, so multiplicities are always exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::HermitianCsr;

/// Counts of negative, zero and positive pivots of `A - σI`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

#[derive(Clone, Debug)]
pub struct BandedSymmetric {
    n: usize,
    bw: usize,
    diag: Vec<f64>,
    /// Row `i` holds `A[i][i-bw..i]` at `lower[i*bw .. (i+1)*bw]`; columns
    /// before 0 are padded with zeros.
    lower: Vec<f64>,
    scale: f64,
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

struct Factor {
    d: Vec<f64>,
    l: Vec<f64>,
    zero_pivots: usize,
}

impl BandedSymmetric {
    /// Real part of a real Hermitian matrix; `None` if any entry is complex.
    pub fn from_csr(m: &HermitianCsr) -> Option<Self> {
        if !m.is_real() {
            return None;
        }
        let n = m.n();
        // stored zeros (vanishing hops) do not widen the band
        let bw = m
            .entries()
            .filter(|(_, _, v)| v.re != 0.0)
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
            .max(1);
        let mut diag = vec![0.0; n];
        let mut lower = vec![0.0; n * bw];
        let mut scale = 0.0f64;
        for (i, j, v) in m.entries() {
            scale = scale.max(v.re.abs());
            if i == j {
                diag[i] = v.re;
            } else if j < i && v.re != 0.0 {
                lower[i * bw + (j + bw - i)] = v.re;
            }
        }
        Some(Self { n, bw, diag, lower, scale: scale.max(1.0) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn factor(&self, shift: f64) -> Factor {
        let (n, bw) = (self.n, self.bw);
        let pivmin = f64::MIN_POSITIVE * 1e10 * self.scale;
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n * bw];
        let mut w = vec![0.0; bw];
        let mut zero_pivots = 0;
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let row = i * bw;
            // w[k] = L[i][c] * d[c] for the columns already eliminated
            for c in first..i {
                let pos = c + bw - i;
                let jrow = c * bw;
                let start = first.max(c.saturating_sub(bw));
                let s = self.lower[row + pos]
                    - dot(&w[start + bw - i..pos], &l[jrow + start + bw - c..jrow + bw]);
                let lic = s / d[c];
                l[row + pos] = lic;
                w[pos] = lic * d[c];
            }
            let lead = first + bw - i;
            let piv = self.diag[i] - shift - dot(&w[lead..], &l[row + lead..row + bw]);
            d[i] = if piv.abs() < pivmin {
                zero_pivots += 1;
                pivmin
            } else {
                piv
            };
        }
        Factor { d, l, zero_pivots }
    }

    pub fn inertia(&self, shift: f64) -> Inertia {
        let f = self.factor(shift);
        let negative = f.d.iter().filter(|p| **p < 0.0).count();
        Inertia { negative, zero: f.zero_pivots, positive: self.n - negative - f.zero_pivots }
    }

    /// Number of eigenvalues strictly below `shift`.
    pub fn count_below(&self, shift: f64) -> usize {
        self.inertia(shift).negative
    }

    /// Number of eigenvalues strictly above `shift`.
    pub fn count_above(&self, shift: f64) -> usize {
        self.inertia(shift).positive
    }

    fn solve(&self, f: &Factor, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let mut s = b[i];
            for c in first..i {
                s -= f.l[i * bw + (c + bw - i)] * b[c];
            }
            b[i] = s;
        }
        for (bi, di) in b.iter_mut().zip(&f.d) {
            *bi /= di;
        }
        for i in (0..n).rev() {
            let bi = b[i];
            let first = i.saturating_sub(bw);
            for c in first..i {
                b[c] -= f.l[i * bw + (c + bw - i)] * bi;
            }
        }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let bw = self.bw;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.diag[i] * x[i];
        }
        for i in 0..self.n {
            for c in i.saturating_sub(bw)..i {
                let a = self.lower[i * bw + (c + bw - i)];
                if a != 0.0 {
                    y[i] += a * x[c];
                    y[c] += a * x[i];
                }
            }
        }
    }

    /// Absolute accuracy targeted by [`Self::eigenvalues_in`].
    pub fn tolerance(&self) -> f64 {
        1e-12 * self.scale
    }

    /// All eigenvalues in the half-open interval `[lo, hi)`, ascending, with multiplicity.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if hi <= lo {
            return out;
        }
        let (nlo, nhi) = (self.count_below(lo), self.count_below(hi));
        self.slice(lo, hi, nlo, nhi, &mut out);
        out.sort_by(f64::total_cmp);
        out
    }

    fn slice(&self, a: f64, b: f64, na: usize, nb: usize, out: &mut Vec<f64>) {
        let m = nb.saturating_sub(na);
        if m == 0 {
            return;
        }
        let tol = self.tolerance();
        if b - a <= tol {
            out.extend(std::iter::repeat_n(0.5 * (a + b), m));
            return;
        }
        if m == 1 {
            if let Some(x) = self.polish(a, b, na) {
                out.push(x);
                return;
            }
        }
        let mid = 0.5 * (a + b);
        let nm = self.count_below(mid);
        self.slice(a, mid, na, nm, out);
        self.slice(mid, b, nm, nb, out);
    }

    /// Rayleigh-quotient iteration for the single eigenvalue in `[a, b)`,
    /// accepted only if two inertia counts confirm it.
    fn polish(&self, a: f64, b: f64, na: usize) -> Option<f64> {
        let tol = self.tolerance();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ na as u64);
        let mut x: Vec<f64> = (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; self.n];
        let mut sigma = 0.5 * (a + b);
        for _ in 0..8 {
            let f = self.factor(sigma);
            self.solve(&f, &mut x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            self.matvec(&x, &mut y);
            let next: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            // the iteration has locked onto an eigenvalue outside the bracket
            if !next.is_finite() || next < a || next >= b {
                return None;
            }
            let step = (next - sigma).abs();
            sigma = next;
            if step <= 0.25 * tol {
                break;
            }
        }
        let (lo, hi) = (sigma - tol, sigma + tol);
        if lo < a || hi > b {
            return None;
        }
        (self.count_below(lo) == na && self.count_below(hi) == na + 1).then_some(sigma)
    }
}
