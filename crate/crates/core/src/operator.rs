//! Finite matrix representations of `h(k) = h0(k) + v`.
//!
//! In position space `h0(k)` has diagonal `d μ(0)` and hops
//! `(x, x + e_j) ↦ -μ(k_j)/2`, `(x + e_j, x) ↦ -conj(μ(k_j))/2`. Its symbol
//! under `f(x) = e^{i p·x}` is `E_k(p)`.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{band_params, check_dim, dispersion_unchecked, BandParams, MassPair, QuasiMomentum};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeBox};
use crate::potential::Potential;
use crate::sparse::{HermitianBuilder, HermitianCsr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Raw,
    PhaseGauged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Position(LatticeBox),
    /// Uniform momentum grid with `points_per_axis` points per axis.
    Momentum { dim: usize, points_per_axis: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMetadata {
    pub masses: MassPair,
    pub k: QuasiMomentum,
    pub potential: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A truncated fiber Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberOperator {
    pub basis: Basis,
    pub matrix: HermitianCsr,
    pub band: BandParams,
    pub gauge: Gauge,
    pub meta: OperatorMetadata,
}

impl FiberOperator {
    pub fn size(&self) -> usize {
        self.matrix.n()
    }

    pub fn lattice_box(&self) -> Option<&LatticeBox> {
        match &self.basis {
            Basis::Position(b) => Some(b),
            Basis::Momentum { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.meta.k.dim()
    }

    /// Writes the lower triangle in Matrix Market coordinate format, plus a
    /// JSON sidecar (`<path>.json`) with masses, `k`, band and gauge.
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let lower: Vec<_> = self.matrix.entries().filter(|(i, j, _)| i >= j).collect();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "%%MatrixMarket matrix coordinate complex hermitian")?;
        writeln!(out, "% fiber operator {}", self.meta.potential)?;
        writeln!(out, "{} {} {}", self.size(), self.size(), lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
        }
        out.flush()?;
        let sidecar = Sidecar {
            masses: self.meta.masses,
            k: self.meta.k.clone(),
            band: self.band.clone(),
            gauge: self.gauge,
            basis: self.basis.clone(),
            potential: self.meta.potential.clone(),
        };
        let mut side_path = path.as_os_str().to_owned();
        side_path.push(".json");
        std::fs::write(side_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Sidecar {
    masses: MassPair,
    k: QuasiMomentum,
    band: BandParams,
    gauge: Gauge,
    basis: Basis,
    potential: String,
}

fn meta(masses: &MassPair, k: &QuasiMomentum, v: &Potential) -> OperatorMetadata {
    OperatorMetadata { masses: *masses, k: k.clone(), potential: v.label(), notes: Vec::new() }
}

/// Position-space assembly on an open or periodic box.
///
/// Every nearest-neighbor pair of the box gets a stored entry, including
/// hops that vanish because `μ(k_j) = 0`.
pub fn assemble(masses: &MassPair, k: &QuasiMomentum, v: &Potential, lattice: &LatticeBox) -> Result<FiberOperator> {
    let d = k.dim();
    check_dim(d, v.dim())?;
    check_dim(d, lattice.dim())?;
    let diag = d as f64 * masses.mu0();
    let hops: Vec<Complex64> = k.components().iter().map(|&kj| -masses.mu(kj) / 2.0).collect();
    let mut b = HermitianBuilder::new(lattice.len());
    for i in 0..lattice.len() {
        let x = lattice.point(i);
        b.diagonal(i, diag + v.value(&x));
        for (axis, hop) in hops.iter().enumerate() {
            if let Some(j) = lattice.forward_neighbor(i, x[axis], axis) {
                b.pair(i, j, *hop);
            }
        }
    }
    Ok(FiberOperator {
        basis: Basis::Position(lattice.clone()),
        matrix: b.build(),
        band: band_params(masses, k),
        gauge: Gauge::Raw,
        meta: meta(masses, k, v),
    })
}

/// `q_m = 2π(m - ⌊N/2⌋)/N`, the momenta of a periodic ring of `N` sites.
pub fn momentum_grid(points: usize) -> Vec<f64> {
    let half = (points / 2) as f64;
    (0..points)
        .map(|m| crate::dispersion::wrap_angle(2.0 * PI * (m as f64 - half) / points as f64))
        .collect()
}

fn grid_point(index: usize, points: usize, dim: usize, grid: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; dim];
    let mut rest = index;
    for c in q.iter_mut().rev() {
        *c = grid[rest % points];
        rest /= points;
    }
    q
}

/// Momentum-space (Friedrichs) form: multiplication by `E_k(q_m)` plus the
/// discrete convolution `N^{-d} Σ_x v(x) e^{-i(q_m - q_m')·x}`.
///
/// For odd `N = 2R + 1` this is the discrete Fourier conjugate of the
/// periodic-box assembly of radius `R`.
pub fn assemble_friedrichs(masses: &MassPair, k: &QuasiMomentum, v: &Potential, points: usize) -> Result<FiberOperator> {
    let d = k.dim();
    check_dim(d, v.dim())?;
    if points < 2 {
        return Err(Error::InvalidArgument("Friedrichs grid needs at least 2 points per axis".into()));
    }
    let entries = v.finite_entries().ok_or(Error::InfiniteSupport)?;
    let (lo, hi) = if points % 2 == 1 {
        let r = (points / 2) as i64;
        (-r, r)
    } else {
        let h = (points / 2) as i64;
        (-h, h - 1)
    };
    if entries.keys().any(|x| x.iter().any(|c| *c < lo || *c > hi)) {
        return Err(Error::SupportOutsideGrid);
    }
    let grid = momentum_grid(points);
    let n = points.pow(d as u32);
    let qs: Vec<Vec<f64>> = (0..n).map(|i| grid_point(i, points, d, &grid)).collect();
    let norm = (n as f64).recip();
    let mean: f64 = entries.values().sum::<f64>() * norm;
    let mut b = HermitianBuilder::new(n);
    for a in 0..n {
        b.diagonal(a, dispersion_unchecked(masses, k.components(), &qs[a]) + mean);
        if entries.is_empty() {
            continue;
        }
        for c in a + 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (x, val) in entries {
                let phase: f64 = qs[a].iter().zip(&qs[c]).zip(x).map(|((qa, qc), xi)| (qa - qc) * *xi as f64).sum();
                s += Complex64::from_polar(*val, -phase);
            }
            b.pair(a, c, s * norm);
        }
    }
    let mut op = FiberOperator {
        basis: Basis::Momentum { dim: d, points_per_axis: points },
        matrix: b.build(),
        band: band_params(masses, k),
        gauge: Gauge::Raw,
        meta: meta(masses, k, v),
    };
    if points % 2 == 0 {
        op.meta
            .notes
            .push("even grid: no periodic-box partner, grid is not symmetric about q = 0".into());
    }
    Ok(op)
}

/// Conjugates by the diagonal unitary `U = diag(e^{i x·p(k)})`, i.e. returns
/// `U^* h U`. On open boxes every hop becomes `-r(k_j)/2`, real and
/// nonpositive; wrap-around links of periodic boxes keep a residual phase.
pub fn gauge_shift(op: &FiberOperator) -> Result<FiberOperator> {
    if op.gauge == Gauge::PhaseGauged {
        return Err(Error::AlreadyGauged);
    }
    let lattice = op
        .lattice_box()
        .ok_or_else(|| Error::InvalidArgument("gauge shift acts on position-space operators".into()))?
        .clone();
    let phases = &op.band.phases;
    let amplitudes = &op.band.amplitudes;
    let points: Vec<Vec<i64>> = lattice.points().collect();
    let matrix = op.matrix.map_values(|i, j, value| {
        if i == j {
            return value;
        }
        let (x, y) = (&points[i], &points[j]);
        let diff: Vec<i64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let nonzero: Vec<usize> = (0..diff.len()).filter(|&a| diff[a] != 0).collect();
        if nonzero.len() == 1 && diff[nonzero[0]].abs() == 1 {
            // ordinary link: the gauged hop is exactly -r/2
            return Complex64::new(-amplitudes[nonzero[0]] / 2.0, 0.0);
        }
        let phase: f64 = diff.iter().zip(phases).map(|(dx, p)| *dx as f64 * p).sum();
        value * Complex64::from_polar(1.0, phase)
    });
    Ok(FiberOperator { matrix, gauge: Gauge::PhaseGauged, ..op.clone() })
}

/// The affine map `λ ↦ scale·λ + offset` relating mirrored spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

/// `(-1)^{Σ x_j}` for every point of the box.
pub fn staggering_signs(lattice: &LatticeBox) -> Vec<f64> {
    lattice
        .points()
        .map(|x| if x.iter().sum::<i64>().rem_euclid(2) == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Returns `2dμ(0)·I - U h U^{-1}` with `U` the staggering sign matrix, which
/// is the operator of `(masses, k, -v)`, together with the map
/// `λ ↦ 2dμ(0) - λ` carrying the spectrum of `op` onto the mirrored one.
///
/// Requires an open box: on an odd periodic ring `U` does not flip the wrap link.
pub fn staggering_mirror(op: &FiberOperator) -> Result<(FiberOperator, AffineMap)> {
    let lattice = op
        .lattice_box()
        .ok_or_else(|| Error::InvalidArgument("staggering acts on position-space operators".into()))?;
    if lattice.boundary() != Boundary::Open {
        return Err(Error::InvalidArgument("staggering mirror requires an open box".into()));
    }
    let signs = staggering_signs(lattice);
    let offset = 2.0 * op.band.center;
    let matrix = op.matrix.map_values(|i, j, value| {
        let conjugated = value * (signs[i] * signs[j]);
        if i == j {
            Complex64::new(offset - conjugated.re, 0.0)
        } else {
            -conjugated
        }
    });
    let mut mirrored = FiberOperator { matrix, ..op.clone() };
    mirrored.meta.potential = format!("mirror({})", op.meta.potential);
    Ok((mirrored, AffineMap { scale: -1.0, offset }))
}
