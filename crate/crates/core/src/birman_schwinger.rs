//! Birman–Schwinger counting on periodic boxes.
//!
//! For `z` below the band and `v <= 0`, the number of eigenvalues of
//! `h0 + v` below `z` equals the number of eigenvalues `>= 1` of
//! `K(z) = |v|^{1/2} (h0 - z)^{-1} |v|^{1/2}`. Above the band with `v >= 0`
//! the same holds for `|v|^{1/2} (z - h0)^{-1} |v|^{1/2}` and eigenvalues of
//! `h0 + v` above `z`. On a periodic box the free resolvent is diagonal in
//! the momentum grid, so `K` only needs the lattice Green's function at the
//! differences of support points.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{check_dim, dispersion_unchecked, MassPair, QuasiMomentum};
use crate::error::{Error, Result};
use crate::lanczos::Side;
use crate::lattice::{Boundary, LatticeBox};
use crate::operator::{assemble, momentum_grid};
use crate::potential::{Potential, Sign};
use crate::spectral::dense_eigenvalues;

/// Eigenvalues closer than this to 1 make the count ambiguous.
pub const THRESHOLD_GUARD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BsOperator {
    pub z: f64,
    pub side: Side,
    /// Support points of `v`, in lattice order; row `i` of `matrix` belongs to `sites[i]`.
    pub sites: Vec<Vec<i64>>,
    #[serde(skip)]
    pub matrix: DMatrix<Complex64>,
    pub masses: MassPair,
    pub k: QuasiMomentum,
    pub lattice: LatticeBox,
}

impl BsOperator {
    /// Eigenvalues of the compressed operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.sites.is_empty() {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Operator norm, i.e. the largest eigenvalue (the matrix is positive semidefinite).
    pub fn norm(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0).max(0.0)
    }
}

/// Builds `K(z)` for a single-signed, finitely supported `v` on a periodic box.
///
/// The side is taken from the sign of `v`: attractive potentials are counted
/// below the band, repulsive ones above it. `v = 0` yields an empty operator
/// on whichever side `z` lies.
pub fn bs_matrix(masses: &MassPair, k: &QuasiMomentum, v: &Potential, z: f64, lattice: &LatticeBox) -> Result<BsOperator> {
    let d = k.dim();
    check_dim(d, v.dim())?;
    check_dim(d, lattice.dim())?;
    if lattice.boundary() != Boundary::Periodic {
        return Err(Error::InvalidArgument("Birman–Schwinger counting needs a periodic box".into()));
    }
    if !z.is_finite() {
        return Err(Error::InvalidArgument("z must be finite".into()));
    }
    let entries = v.finite_entries().ok_or(Error::InfiniteSupport)?;
    let band = crate::dispersion::band_params(masses, k);
    let z_side = if z < band.band_min {
        Side::Below
    } else if z > band.band_max {
        Side::Above
    } else {
        return Err(Error::ZInsideBand { z, band_min: band.band_min, band_max: band.band_max });
    };
    let side = match v.sign() {
        Sign::Zero => z_side,
        Sign::NonPositive => Side::Below,
        Sign::NonNegative => Side::Above,
        Sign::Mixed | Sign::Unknown => return Err(Error::IndefinitePotential),
    };
    if side != z_side {
        return Err(Error::InvalidArgument(format!(
            "z = {z} lies on the wrong side of the band for a potential of this sign"
        )));
    }
    if entries.keys().any(|x| !lattice.contains(x)) {
        return Err(Error::SupportOutsideGrid);
    }

    let points = lattice.side();
    let grid = momentum_grid(points);
    let n = lattice.len();
    // resolvent symbol |E_k(q) - z|^{-1}, one value per grid point
    let inv: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let q: Vec<f64> = lattice.point(i).iter().map(|c| grid[(c + lattice.radius() as i64) as usize]).collect();
            let e = dispersion_unchecked(masses, k.components(), &q);
            (q, 1.0 / (e - z).abs())
        })
        .collect();
    let norm = (n as f64).recip();
    let mut cache: HashMap<Vec<i64>, Complex64> = HashMap::new();
    let mut green = |delta: Vec<i64>| -> Complex64 {
        *cache.entry(delta).or_insert_with_key(|delta| {
            let s = inv.iter().fold(Complex64::new(0.0, 0.0), |acc, (q, w)| {
                let phase: f64 = q.iter().zip(delta).map(|(qi, di)| qi * *di as f64).sum();
                acc + Complex64::from_polar(*w, phase)
            });
            s * norm
        })
    };

    let sites: Vec<Vec<i64>> = entries.keys().cloned().collect();
    let roots: Vec<f64> = entries.values().map(|x| x.abs().sqrt()).collect();
    let m = sites.len();
    let mut matrix = DMatrix::<Complex64>::zeros(m, m);
    for a in 0..m {
        let g0 = green(vec![0; d]);
        matrix[(a, a)] = Complex64::new(roots[a] * roots[a] * g0.re, 0.0);
        for b in a + 1..m {
            let delta: Vec<i64> = sites[a].iter().zip(&sites[b]).map(|(x, y)| x - y).collect();
            let value = green(delta) * (roots[a] * roots[b]);
            matrix[(a, b)] = value;
            matrix[(b, a)] = value.conj();
        }
    }
    Ok(BsOperator {
        z,
        side,
        sites,
        matrix,
        masses: *masses,
        k: k.clone(),
        lattice: lattice.clone(),
    })
}

/// Number of eigenvalues of `K(z)` that are `>= 1`.
pub fn bs_count(bs: &BsOperator) -> Result<usize> {
    let ev = bs.eigenvalues();
    if let Some(e) = ev.iter().find(|e| (**e - 1.0).abs() <= THRESHOLD_GUARD) {
        return Err(Error::DegenerateThreshold { eigenvalue: *e });
    }
    Ok(ev.iter().filter(|e| **e >= 1.0).count())
}

/// Direct count of eigenvalues of the assembled box operator strictly past `z`.
pub fn direct_count(
    masses: &MassPair,
    k: &QuasiMomentum,
    v: &Potential,
    lattice: &LatticeBox,
    z: f64,
    side: Side,
) -> Result<usize> {
    let ev = dense_eigenvalues(&assemble(masses, k, v, lattice)?.matrix)?;
    Ok(match side {
        Side::Below => ev.iter().filter(|e| **e < z).count(),
        Side::Above => ev.iter().filter(|e| **e > z).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m11() -> MassPair {
        MassPair::new(1.0, 1.0).unwrap()
    }

    fn k(c: &[f64]) -> QuasiMomentum {
        QuasiMomentum::new(c.to_vec()).unwrap()
    }

    #[test]
    fn single_site_matches_lattice_green_function() {
        // N^{-1} Σ 1/(E(q) - z) → ((c - z)^2 - r^2)^{-1/2}
        let lattice = LatticeBox::periodic(1, 1000).unwrap();
        for (kk, z) in [(0.0, -0.3), (1.0, -0.05), (2.5, 1.0)] {
            let q = k(&[kk]);
            let bs = bs_matrix(&m11(), &q, &Potential::delta(1, -1.0), z, &lattice).unwrap();
            let c = 2.0;
            let r = 2.0 * (kk / 2.0f64).cos().abs();
            let exact = 1.0 / ((c - z).powi(2) - r * r).sqrt();
            assert!((bs.matrix[(0, 0)].re - exact).abs() < 1e-6, "{kk} {z}");
        }
    }

    #[test]
    fn single_site_counts() {
        let lattice = LatticeBox::periodic(1, 100).unwrap();
        let v = Potential::delta(1, -1.0);
        let count = |z| bs_count(&bs_matrix(&m11(), &k(&[0.0]), &v, z, &lattice).unwrap()).unwrap();
        assert_eq!(count(-0.5), 0);
        assert_eq!(count(-0.1), 1);
    }

    #[test]
    fn trivial_cases() {
        let lattice = LatticeBox::periodic(1, 10).unwrap();
        let bs = bs_matrix(&m11(), &k(&[0.3]), &Potential::zero(1), -1.0, &lattice).unwrap();
        assert!(bs.sites.is_empty());
        assert_eq!(bs_count(&bs).unwrap(), 0);
        let far = bs_matrix(&m11(), &k(&[0.3]), &Potential::delta(1, -1.0), -1e9, &lattice).unwrap();
        assert!(far.norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let periodic = LatticeBox::periodic(1, 5).unwrap();
        let mixed = Potential::finite(1, [(vec![0], -1.0), (vec![1], 1.0)]).unwrap();
        assert!(matches!(
            bs_matrix(&m11(), &k(&[0.0]), &mixed, -1.0, &periodic),
            Err(Error::IndefinitePotential)
        ));
        assert!(matches!(
            bs_matrix(&m11(), &k(&[0.0]), &Potential::delta(1, -1.0), 1.0, &periodic),
            Err(Error::ZInsideBand { .. })
        ));
        let open = LatticeBox::open(1, 5).unwrap();
        assert!(bs_matrix(&m11(), &k(&[0.0]), &Potential::delta(1, -1.0), -1.0, &open).is_err());
        let far = Potential::finite(1, [(vec![9], -1.0)]).unwrap();
        assert!(bs_matrix(&m11(), &k(&[0.0]), &far, -1.0, &periodic).is_err());
    }

    #[test]
    fn agrees_with_direct_counts_both_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let d = 1 + trial % 2;
            let radius = if d == 1 { 6 } else { 3 };
            let lattice = LatticeBox::periodic(d, radius).unwrap();
            let masses = MassPair::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)).unwrap();
            let q = QuasiMomentum::new((0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let sign = if trial % 3 == 0 { 1.0 } else { -1.0 };
            let sites: Vec<(Vec<i64>, f64)> = (0..3)
                .map(|s| {
                    let x: Vec<i64> = (0..d).map(|a| (s as i64 + a as i64) % 3 - 1).collect();
                    (x, sign * rng.random_range(0.2..3.0))
                })
                .collect::<std::collections::BTreeMap<_, _>>()
                .into_iter()
                .collect();
            let v = Potential::finite(d, sites).unwrap();
            let band = crate::dispersion::band_params(&masses, &q);
            for step in 1..5 {
                let shift = 0.4 * step as f64;
                let (z, side) = if sign < 0.0 {
                    (band.band_min - shift, Side::Below)
                } else {
                    (band.band_max + shift, Side::Above)
                };
                let bs = bs_matrix(&masses, &q, &v, z, &lattice).unwrap();
                assert_eq!(bs.side, side);
                let direct = direct_count(&masses, &q, &v, &lattice, z, side).unwrap();
                assert_eq!(bs_count(&bs).unwrap(), direct);
            }
        }
    }

    #[test]
    fn count_is_monotone_in_z() {
        let lattice = LatticeBox::periodic(2, 4).unwrap();
        let v = Potential::finite(2, [(vec![0, 0], -3.0), (vec![1, 0], -2.0), (vec![0, 2], -2.5)]).unwrap();
        let q = k(&[0.4, -1.1]);
        let band = crate::dispersion::band_params(&m11(), &q);
        let mut last = usize::MAX;
        for i in 1..30 {
            let z = band.band_min - 0.1 * i as f64;
            let c = bs_count(&bs_matrix(&m11(), &q, &v, z, &lattice).unwrap()).unwrap();
            assert!(c <= last);
            last = c;
        }
    }
}
