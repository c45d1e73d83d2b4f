//! Fourier symbol of the free fiber Hamiltonian.
//!
//! With `μ(y) = 1/m1 + e^{-iy}/m2` the symbol of `h0(k)` is
//!
//! ```text
//! E_k(p) = (1/m1) ε(p) + (1/m2) ε(k - p),    ε(p) = Σ_j (1 - cos p_j)
//!        = d μ(0) - Σ_j r_j cos(p_j - φ_j),  r_j = |μ(k_j)|
//! ```
//!
//! so the band is `[d μ(0) - Σ r_j, d μ(0) + Σ r_j]` and `A(k) = min_j r_j / μ(0)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Masses of the two particles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct MassPair {
    m1: f64,
    m2: f64,
}

impl MassPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(m1.is_finite() && m2.is_finite() && m1 > 0.0 && m2 > 0.0) {
            return Err(Error::InvalidMasses { m1, m2 });
        }
        Ok(Self { m1, m2 })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// `μ(0) = 1/m1 + 1/m2`, which is also `r(0)`.
    pub fn mu0(&self) -> f64 {
        1.0 / self.m1 + 1.0 / self.m2
    }

    /// Exact comparison of the stored values.
    pub fn is_equal(&self) -> bool {
        self.m1 == self.m2
    }

    /// `μ(y) = 1/m1 + e^{-iy}/m2`.
    ///
    /// At `y = ±π` and `y = 0` the exponential is evaluated exactly, so that
    /// `μ(π) = 0` holds bit-for-bit for equal masses.
    pub fn mu(&self, y: f64) -> Complex64 {
        let e = exp_neg_i(y);
        Complex64::new(1.0 / self.m1, 0.0) + e / self.m2
    }
}

impl TryFrom<[f64; 2]> for MassPair {
    type Error = Error;

    fn try_from(value: [f64; 2]) -> Result<Self> {
        Self::new(value[0], value[1])
    }
}

impl From<MassPair> for [f64; 2] {
    fn from(m: MassPair) -> Self {
        [m.m1, m.m2]
    }
}

fn exp_neg_i(y: f64) -> Complex64 {
    if y == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if y == PI || y == -PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::new(y.cos(), -y.sin())
    }
}

/// Reduces an angle into `(-π, π]`. Values already in range are returned unchanged.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// A point of the torus `(-π, π]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuasiMomentum(Vec<f64>);

impl QuasiMomentum {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("quasi-momentum needs d >= 1".into()));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("quasi-momentum components must be finite".into()));
        }
        Ok(Self(components.into_iter().map(wrap_angle).collect()))
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// `π⃗ = (π, …, π)`.
    pub fn corner(d: usize) -> Self {
        Self(vec![PI; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| wrap_angle(a + b)).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| wrap_angle(a - b)).collect()))
    }

    /// The components indexed by `axes`, in order.
    pub fn select(&self, axes: &[usize]) -> Vec<f64> {
        axes.iter().map(|&a| self.0[a]).collect()
    }
}

impl TryFrom<Vec<f64>> for QuasiMomentum {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<QuasiMomentum> for Vec<f64> {
    fn from(k: QuasiMomentum) -> Self {
        k.0
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `ε(p) = Σ_i (1 - cos p_i)`, with values in `[0, 2d]`.
pub fn epsilon(p: &[f64]) -> f64 {
    p.iter().map(|x| 1.0 - x.cos()).sum()
}

/// `E_k(p) = (1/m1) ε(p) + (1/m2) ε(k - p)`.
pub fn dispersion_value(masses: &MassPair, k: &QuasiMomentum, p: &[f64]) -> Result<f64> {
    check_dim(k.dim(), p.len())?;
    Ok(dispersion_unchecked(masses, k.components(), p))
}

pub(crate) fn dispersion_unchecked(masses: &MassPair, k: &[f64], p: &[f64]) -> f64 {
    let mut heavy = 0.0;
    let mut light = 0.0;
    for (kj, pj) in k.iter().zip(p) {
        heavy += 1.0 - pj.cos();
        light += 1.0 - (kj - pj).cos();
    }
    heavy / masses.m1 + light / masses.m2
}

/// Shifted-cosine parameters of `E_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandParams {
    /// `r_j = |μ(k_j)|`.
    pub amplitudes: Vec<f64>,
    /// `p_j` with `E_k(p + p(k)) = center - Σ r_j cos p_j`.
    pub phases: Vec<f64>,
    pub band_min: f64,
    pub band_max: f64,
    /// `A(k) = min_j r_j / r(0)`.
    pub ratio: f64,
    /// `d μ(0)`.
    pub center: f64,
}

impl BandParams {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn width(&self) -> f64 {
        self.band_max - self.band_min
    }

    /// Whether `A(k) = 0`, i.e. some axis carries no hopping.
    pub fn is_degenerate(&self) -> bool {
        self.ratio == 0.0
    }

    /// `center - Σ r_j cos p_j`, the right-hand side of the shift representation.
    pub fn shifted_cosine(&self, p: &[f64]) -> f64 {
        self.center
            - self
                .amplitudes
                .iter()
                .zip(p)
                .map(|(r, x)| r * x.cos())
                .sum::<f64>()
    }
}

/// Band edges, amplitudes, phases and `A(k)`.
///
/// The phase is `p_j = -arg μ(k_j)`, and `0` when `μ(k_j) = 0`; with this
/// choice `E_k(p + p(k)) = d μ(0) - Σ r_j cos p_j` holds for every mass pair.
pub fn band_params(masses: &MassPair, k: &QuasiMomentum) -> BandParams {
    let mu0 = masses.mu0();
    let d = k.dim();
    let mut amplitudes = Vec::with_capacity(d);
    let mut phases = Vec::with_capacity(d);
    for &kj in k.components() {
        let m = masses.mu(kj);
        let r = m.norm();
        amplitudes.push(r);
        phases.push(if r == 0.0 { 0.0 } else { wrap_angle(-m.arg()) });
    }
    let center = d as f64 * mu0;
    let total: f64 = amplitudes.iter().sum();
    let ratio = amplitudes.iter().cloned().fold(f64::INFINITY, f64::min) / mu0;
    BandParams {
        amplitudes,
        phases,
        band_min: center - total,
        band_max: center + total,
        ratio,
        center,
    }
}

/// Outcome of the two-sided comparison between `E_0` and the shifted `E_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub lower_ok: bool,
    /// `E_0(p) - (E_k(p + p(k)) - E_min(k))`.
    pub lower_slack: f64,
    /// `None` when `A(k) = 0`: the upper bound is not applicable.
    pub upper_ok: Option<bool>,
    /// `(E_k(p + p(k)) - E_min(k)) / A(k) - E_0(p)`.
    pub upper_slack: Option<f64>,
}

/// Checks `E_k(p+p(k)) - E_min(k) <= E_0(p) <= (E_k(p+p(k)) - E_min(k)) / A(k)`.
///
/// Inequalities are accepted with slack down to `-IDENTITY_TOL`.
pub fn sandwich_check(masses: &MassPair, k: &QuasiMomentum, p: &[f64]) -> Result<SandwichCheck> {
    check_dim(k.dim(), p.len())?;
    let band = band_params(masses, k);
    let shifted: Vec<f64> = p.iter().zip(&band.phases).map(|(x, ph)| x + ph).collect();
    let excess = dispersion_unchecked(masses, k.components(), &shifted) - band.band_min;
    let zero = vec![0.0; p.len()];
    let free = dispersion_unchecked(masses, &zero, p);
    let lower_slack = free - excess;
    let (upper_ok, upper_slack) = if band.ratio > 0.0 {
        let s = excess / band.ratio - free;
        (Some(s >= -IDENTITY_TOL), Some(s))
    } else {
        (None, None)
    };
    Ok(SandwichCheck {
        lower_ok: lower_slack >= -IDENTITY_TOL,
        lower_slack,
        upper_ok,
        upper_slack,
    })
}
