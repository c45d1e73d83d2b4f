//! Eigenvalues of truncated fiber operators and discrete-spectrum counting.
//!
//! Small matrices go through a dense Hermitian eigensolver. Larger open-box
//! operators are gauged to real symmetric band form and handled by spectrum
//! slicing, which yields exact eigenvalue counts on either side of the band.

use serde::Serialize;

use crate::banded::BandedSymmetric;
use crate::dispersion::{BandParams, MassPair, QuasiMomentum};
use crate::error::{Error, Result};
use crate::lanczos::{lanczos_extremal, Side};
use crate::lattice::{Boundary, LatticeBox};
use crate::operator::{assemble, gauge_shift, FiberOperator, Gauge};
use crate::potential::Potential;
use crate::sparse::HermitianCsr;


/// Largest size accepted by the dense path.
pub const DENSE_LIMIT: usize = 5000;

/// Above this size `count_discrete` switches from dense diagonalization to slicing.
pub const DENSE_COUNT_LIMIT: usize = 400;

/// Iteration budget of the extremal solver.
pub const LANCZOS_MAX_ITER: usize = 800;

/// All eigenvalues, ascending. Dense; limited to [`DENSE_LIMIT`].
pub fn eigenvalues(op: &FiberOperator) -> Result<Vec<f64>> {
    dense_eigenvalues(&op.matrix)
}

pub fn dense_eigenvalues(m: &HermitianCsr) -> Result<Vec<f64>> {
    m.check_finite()?;
    if m.n() > DENSE_LIMIT {
        return Err(Error::TooLargeForDense { size: m.n(), limit: DENSE_LIMIT });
    }
    let mut ev: Vec<f64> = match m.to_dense_real() {
        Some(real) => real.symmetric_eigenvalues().iter().copied().collect(),
        None => m.to_dense().symmetric_eigenvalues().iter().copied().collect(),
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// The `how_many` extreme eigenvalues on `side`, from the extreme inwards.
pub fn extremal_eigenvalues(op: &FiberOperator, side: Side, how_many: usize, tol: f64) -> Result<Vec<f64>> {
    op.matrix.check_finite()?;
    let n = op.size();
    let m = &op.matrix;
    if m.is_real() {
        lanczos_extremal::<f64, _>(n, |x, y| m.matvec_real(x, y), side, how_many, tol, LANCZOS_MAX_ITER)
    } else {
        lanczos_extremal::<num_complex::Complex64, _>(n, |x, y| m.matvec(x, y), side, how_many, tol, LANCZOS_MAX_ITER)
    }
}

/// Spectrum of a truncated operator classified against the analytic band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Ascending. The full spectrum when `complete`, otherwise only the
    /// eigenvalues outside `[band_min - margin, band_max + margin]`.
    pub eigenvalues: Vec<f64>,
    pub complete: bool,
    pub band: BandParams,
    pub margin: f64,
    pub below: Vec<f64>,
    pub above: Vec<f64>,
    pub n_below: usize,
    pub n_above: usize,
}

impl SpectrumResult {
    fn classify(eigenvalues: Vec<f64>, complete: bool, band: BandParams, margin: f64) -> Self {
        let lo = band.band_min - margin;
        let hi = band.band_max + margin;
        let below: Vec<f64> = eigenvalues.iter().copied().filter(|e| *e < lo).collect();
        let above: Vec<f64> = eigenvalues.iter().copied().filter(|e| *e > hi).collect();
        Self {
            n_below: below.len(),
            n_above: above.len(),
            eigenvalues,
            complete,
            band,
            margin,
            below,
            above,
        }
    }

    /// Reclassifies with a margin at least as large as the current one.
    pub fn with_margin(&self, margin: f64) -> Result<Self> {
        if !(margin >= self.margin) {
            return Err(Error::InvalidArgument(format!(
                "margin {margin} is smaller than the computed margin {}",
                self.margin
            )));
        }
        Ok(Self::classify(self.eigenvalues.clone(), self.complete, self.band.clone(), margin))
    }

    pub fn total(&self) -> usize {
        self.n_below + self.n_above
    }
}

/// Classifies the spectrum of an assembled operator. Eigenvalues equal to a
/// threshold count as inside the band.
pub fn classify_spectrum(op: &FiberOperator, margin: f64) -> Result<SpectrumResult> {
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument("margin must be positive".into()));
    }
    op.matrix.check_finite()?;
    let op = match (op.gauge, op.lattice_box().map(LatticeBox::boundary)) {
        (Gauge::Raw, Some(Boundary::Open)) => gauge_shift(op)?,
        _ => op.clone(),
    };
    let band = op.band.clone();
    if op.size() > DENSE_COUNT_LIMIT {
        if let Some(banded) = BandedSymmetric::from_csr(&op.matrix) {
            let (glo, ghi) = op.matrix.gershgorin();
            let lo = band.band_min - margin;
            let hi = band.band_max + margin;
            let pad = 1.0 + 1e-8 * (glo.abs() + ghi.abs());
            let mut ev = beyond(&banded, &op.matrix, Side::Below, lo, glo - pad);
            ev.extend(beyond(&banded, &op.matrix, Side::Above, hi.next_up(), ghi + pad));
            ev.sort_by(f64::total_cmp);
            return Ok(SpectrumResult::classify(ev, false, band, margin));
        }
    }
    let ev = dense_eigenvalues(&op.matrix)?;
    Ok(SpectrumResult::classify(ev, true, band, margin))
}

/// Iteration cap of the Lanczos shortcut in [`beyond`].
const SHORTCUT_MAX_ITER: usize = 120;

/// Eigenvalues strictly past `threshold` on `side`, up to `outer`.
///
/// Ritz values from a short Lanczos run are accepted only when inertia
/// counts in a small bracket around each of them add up to the exact number
/// of eigenvalues past the threshold; otherwise the range is sliced.
fn beyond(banded: &BandedSymmetric, m: &HermitianCsr, side: Side, threshold: f64, outer: f64) -> Vec<f64> {
    let n = banded.n();
    let (lo, hi) = match side {
        Side::Below => (outer, threshold),
        Side::Above => (threshold, outer),
    };
    let wanted = match side {
        Side::Below => banded.count_below(threshold),
        Side::Above => n - banded.count_below(threshold),
    };
    if wanted == 0 {
        return Vec::new();
    }
    let tol = 1e4 * banded.tolerance();
    if let Ok(ritz) = lanczos_extremal::<f64, _>(n, |x, y| m.matvec_real(x, y), side, wanted, tol, SHORTCUT_MAX_ITER) {
        let mut out = Vec::with_capacity(wanted);
        let mut last_edge = f64::NEG_INFINITY;
        let mut sorted = ritz;
        sorted.sort_by(f64::total_cmp);
        let mut ok = true;
        for theta in sorted {
            let (a, b) = (theta - tol, theta + tol);
            if a < lo || b > hi || a <= last_edge {
                ok = false;
                break;
            }
            last_edge = b;
            let mult = banded.count_below(b) - banded.count_below(a);
            out.extend(std::iter::repeat_n(theta, mult));
        }
        if ok && out.len() == wanted {
            return out;
        }
    }
    banded.eigenvalues_in(lo, hi)
}

/// Discrete eigenvalues of `h(k)` on the open box of radius `radius`.
pub fn count_discrete(
    masses: &MassPair,
    k: &QuasiMomentum,
    v: &Potential,
    radius: usize,
    margin: f64,
) -> Result<SpectrumResult> {
    let lattice = LatticeBox::open(k.dim(), radius)?;
    let op = assemble(masses, k, v, &lattice)?;
    classify_spectrum(&op, margin)
}

/// One spectrum computation per box, classified for every margin in `margins`.
pub fn count_discrete_sweep(
    masses: &MassPair,
    k: &QuasiMomentum,
    v: &Potential,
    radius: usize,
    margins: &[f64],
) -> Result<Vec<SpectrumResult>> {
    let smallest = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    if margins.is_empty() {
        return Ok(Vec::new());
    }
    let base = count_discrete(masses, k, v, radius, smallest)?;
    margins.iter().map(|m| base.with_margin(*m)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable(usize),
    Growing,
    Inconclusive,
}

/// Finite-volume heuristic: counts per box radius at a fixed margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub radii: Vec<usize>,
    pub margin: f64,
    pub n_below: Vec<usize>,
    pub n_above: Vec<usize>,
    pub totals: Vec<usize>,
    pub verdict: Verdict,
}

/// Stable when the last two totals agree, Growing when the last three strictly increase.
pub fn verdict_from_totals(totals: &[usize]) -> Verdict {
    let n = totals.len();
    if n >= 2 && totals[n - 1] == totals[n - 2] {
        Verdict::Stable(totals[n - 1])
    } else if n >= 3 && totals[n - 3] < totals[n - 2] && totals[n - 2] < totals[n - 1] {
        Verdict::Growing
    } else {
        Verdict::Inconclusive
    }
}

fn check_radii(radii: &[usize]) -> Result<()> {
    if radii.len() < 3 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "convergence study needs at least three strictly increasing radii".into(),
        ));
    }
    Ok(())
}

fn verdict_for(radii: &[usize], spectra: &[SpectrumResult], margin: f64) -> ConvergenceVerdict {
    let n_below: Vec<usize> = spectra.iter().map(|s| s.n_below).collect();
    let n_above: Vec<usize> = spectra.iter().map(|s| s.n_above).collect();
    let totals: Vec<usize> = spectra.iter().map(SpectrumResult::total).collect();
    ConvergenceVerdict {
        radii: radii.to_vec(),
        margin,
        verdict: verdict_from_totals(&totals),
        n_below,
        n_above,
        totals,
    }
}

pub fn convergence_study(
    masses: &MassPair,
    k: &QuasiMomentum,
    v: &Potential,
    radii: &[usize],
    margin: f64,
) -> Result<ConvergenceVerdict> {
    Ok(convergence_sweep(masses, k, v, radii, &[margin])?.remove(0))
}

/// [`convergence_study`] for several margins, sharing the eigensolves.
pub fn convergence_sweep(
    masses: &MassPair,
    k: &QuasiMomentum,
    v: &Potential,
    radii: &[usize],
    margins: &[f64],
) -> Result<Vec<ConvergenceVerdict>> {
    check_radii(radii)?;
    let per_radius: Vec<Vec<SpectrumResult>> = radii
        .iter()
        .map(|r| count_discrete_sweep(masses, k, v, *r, margins))
        .collect::<Result<_>>()?;
    Ok(margins
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let spectra: Vec<SpectrumResult> = per_radius.iter().map(|s| s[i].clone()).collect();
            verdict_for(radii, &spectra, *m)
        })
        .collect())
}
