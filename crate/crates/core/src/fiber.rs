//! Decomposition of `h(k)` into lower-dimensional fibers when `A(k) = 0`.
//!
//! With equal masses and `k_j = π` for `j ∈ α`, the hopping along every
//! `α`-axis vanishes, so `h(k)` is the direct sum over `x̂ ∈ Z^l` of the
//! `(d-l)`-dimensional operators `l μ(0) + h0(k̃) + v_x̂`, where `k̃` keeps the
//! remaining components of `k` and `v_x̂` is `v` restricted to the fiber.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dispersion::{band_params, MassPair, QuasiMomentum};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::operator::assemble;
use crate::potential::{
    classify_quasimomentum, containment_radius, hypothesis_certificate, restrict_to_fiber, DirectionSet, Potential,
};
use crate::spectral::eigenvalues;

#[derive(Clone, Debug, PartialEq)]
pub struct FiberFamily {
    pub masses: MassPair,
    pub k: QuasiMomentum,
    pub directions: DirectionSet,
    /// `l μ(0)`.
    pub offset: f64,
    /// Components of `k` off `α`; `None` when every component is `π`.
    pub reduced_k: Option<QuasiMomentum>,
    /// Fibers are enumerated for `|x̂|_∞ <= window`.
    pub window: u64,
    pub fibers: BTreeMap<Vec<i64>, Potential>,
}

impl FiberFamily {
    pub fn l(&self) -> usize {
        self.directions.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.k.dim() - self.l()
    }

    /// `r(k̃_j)` for the remaining axes.
    pub fn reduced_amplitudes(&self) -> Vec<f64> {
        self.reduced_k
            .as_ref()
            .map(|q| band_params(&self.masses, q).amplitudes)
            .unwrap_or_default()
    }
}

fn degenerate_directions(masses: &MassPair, k: &QuasiMomentum) -> Result<DirectionSet> {
    let class = classify_quasimomentum(k);
    if !masses.is_equal() || class.l == 0 {
        return Err(Error::NondegenerateBand);
    }
    DirectionSet::new(k.dim(), class.axes)
}

fn window_points(l: usize, window: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * window + 1) as usize;
    (0..side.pow(l as u32)).map(move |mut i| {
        let mut x = vec![0i64; l];
        for c in x.iter_mut().rev() {
            *c = (i % side) as i64 - window;
            i /= side;
        }
        x
    })
}

pub fn decompose(masses: &MassPair, k: &QuasiMomentum, v: &Potential, window: u64) -> Result<FiberFamily> {
    crate::dispersion::check_dim(k.dim(), v.dim())?;
    let directions = degenerate_directions(masses, k)?;
    let l = directions.len();
    let rest = directions.complement(k.dim());
    let reduced_k = if rest.is_empty() { None } else { Some(QuasiMomentum::new(k.select(&rest))?) };
    let fibers = window_points(l, window as i64)
        .map(|x_hat| Ok((x_hat.clone(), restrict_to_fiber(v, &directions, &x_hat)?)))
        .collect::<Result<_>>()?;
    Ok(FiberFamily {
        masses: *masses,
        k: k.clone(),
        offset: l as f64 * masses.mu0(),
        directions,
        reduced_k,
        window,
        fibers,
    })
}

/// Largest modulus of an entry of the open-box `h(k)` that couples two
/// different fibers. Exactly zero whenever `A(k) = 0`.
pub fn verify_block_structure(masses: &MassPair, k: &QuasiMomentum, v: &Potential, radius: usize) -> Result<f64> {
    let directions = degenerate_directions(masses, k)?;
    let lattice = LatticeBox::open(k.dim(), radius)?;
    let op = assemble(masses, k, v, &lattice)?;
    let fiber_of: Vec<Vec<i64>> = lattice
        .points()
        .map(|x| directions.axes().iter().map(|&j| x[j]).collect())
        .collect();
    Ok(op
        .matrix
        .entries()
        .filter(|(i, j, _)| fiber_of[*i] != fiber_of[*j])
        .map(|(_, _, value)| value.norm())
        .fold(0.0, f64::max))
}

/// Eigenvalues of all fiber blocks of the open box of radius `radius`,
/// shifted by the offset and merged in ascending order.
pub fn fiber_spectrum_union(family: &FiberFamily, radius: usize) -> Result<Vec<f64>> {
    if radius as u64 > family.window {
        return Err(Error::InvalidArgument("box radius exceeds the fiber window".into()));
    }
    let mut all = Vec::new();
    for (x_hat, fiber) in &family.fibers {
        if x_hat.iter().any(|c| c.unsigned_abs() as usize > radius) {
            continue;
        }
        match &family.reduced_k {
            None => all.push(family.offset + fiber.value(&[])),
            Some(q) => {
                let op = assemble(&family.masses, q, fiber, &LatticeBox::open(q.dim(), radius)?)?;
                all.extend(eigenvalues(&op)?.into_iter().map(|e| family.offset + e));
            }
        }
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// The eigenvalue `c + sign(λ)·√(r² + λ²)` of the chain with dispersion
/// `c - r cos p` and potential `λ δ_0`.
pub fn rank_one_bound_state(center: f64, amplitude: f64, strength: f64) -> Result<f64> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidArgument("amplitude must be positive".into()));
    }
    if strength == 0.0 || !strength.is_finite() {
        return Err(Error::InvalidArgument("strength must be nonzero".into()));
    }
    Ok(center + strength.signum() * amplitude.hypot(strength))
}

/// `√(r² + λ²) - r` without cancellation.
pub fn bound_state_displacement(amplitude: f64, strength: f64) -> f64 {
    strength * strength / (amplitude.hypot(strength) + amplitude)
}

/// Whether the open chain of `2R + 1` sites (dispersion `c - r cos p`,
/// potential `λ` at `site`) has an eigenvalue beyond `c ± (r + δ)` on the
/// side of `λ`. Ties count as inside the band.
///
/// The chain eigenpairs are `ε_n = c - r cos θ_n`, `φ_n(j) = √(2/(L+1)) sin(j θ_n)`
/// with `θ_n = nπ/(L+1)`; the perturbed eigenvalue passes the threshold `t`
/// exactly when `λ Σ φ_n(site)² / (t - ε_n) > 1`.
pub fn chain_bound_state_visible(radius: usize, site: i64, amplitude: f64, strength: f64, margin: f64) -> bool {
    if strength == 0.0 || site.unsigned_abs() as usize > radius {
        return false;
    }
    let len = 2 * radius + 1;
    let j = (site + radius as i64 + 1) as f64;
    let h = std::f64::consts::PI / (len + 1) as f64;
    let norm = 2.0 / (len + 1) as f64;
    let mut sum = 0.0;
    for n in 1..=len {
        let theta = n as f64 * h;
        let phi2 = norm * (j * theta).sin().powi(2);
        // |t - ε_n|: distance from the threshold on λ's side
        let gap = if strength > 0.0 {
            margin + 2.0 * amplitude * (0.5 * theta).cos().powi(2)
        } else {
            margin + 2.0 * amplitude * (0.5 * theta).sin().powi(2)
        };
        sum += phi2 / gap;
    }
    strength.abs() * sum > 1.0
}

/// The single-site strength of a one-dimensional fiber, or `None` for a zero fiber.
fn solvable_fiber(family: &FiberFamily, fiber: &Potential) -> Result<Option<(i64, f64)>> {
    if fiber.is_zero() {
        return Ok(None);
    }
    let entries = match (family.fiber_dim(), fiber.finite_entries()) {
        (1, Some(entries)) if entries.len() == 1 => entries,
        _ => return Err(Error::NoClosedForm("fiber is not a one-dimensional single-site potential".into())),
    };
    let (site, value) = entries.iter().next().expect("one entry");
    Ok(Some((site[0], *value)))
}

fn check_window(family: &FiberFamily, window: u64) -> Result<()> {
    if window > family.window {
        return Err(Error::InvalidArgument(format!(
            "window {window} exceeds the decomposed window {}",
            family.window
        )));
    }
    Ok(())
}

/// Number of fibers with `|x̂|_∞ <= window` whose bound state of the infinite
/// fiber lies more than `δ` outside the band.
pub fn predicted_counts(family: &FiberFamily, margin: f64, window: u64) -> Result<usize> {
    check_window(family, window)?;
    let mut count = 0;
    for (x_hat, fiber) in &family.fibers {
        if x_hat.iter().any(|c| c.unsigned_abs() > window) {
            continue;
        }
        if family.reduced_k.is_none() {
            count += usize::from(fiber.value(&[]).abs() > margin);
            continue;
        }
        if let Some((_, strength)) = solvable_fiber(family, fiber)? {
            let r = family.reduced_amplitudes()[0];
            count += usize::from(bound_state_displacement(r, strength) > margin);
        }
    }
    Ok(count)
}

/// The same count for the open box of radius `radius`, where each fiber is
/// a finite chain.
pub fn predicted_counts_in_box(family: &FiberFamily, margin: f64, radius: usize) -> Result<usize> {
    check_window(family, radius as u64)?;
    let mut count = 0;
    for (x_hat, fiber) in &family.fibers {
        if x_hat.iter().any(|c| c.unsigned_abs() as usize > radius) {
            continue;
        }
        if family.reduced_k.is_none() {
            count += usize::from(fiber.value(&[]).abs() > margin);
            continue;
        }
        if let Some((site, strength)) = solvable_fiber(family, fiber)? {
            let r = family.reduced_amplitudes()[0];
            count += usize::from(chain_bound_state_visible(radius, site, r, strength, margin));
        }
    }
    Ok(count)
}

/// Infinite-volume fiber eigenvalues `(x̂, E)` for the solvable family, in window order.
pub fn predicted_eigenvalues(family: &FiberFamily, window: u64) -> Result<Vec<(Vec<i64>, f64)>> {
    check_window(family, window)?;
    let mut out = Vec::new();
    for (x_hat, fiber) in &family.fibers {
        if x_hat.iter().any(|c| c.unsigned_abs() > window) {
            continue;
        }
        match &family.reduced_k {
            None => {
                let value = fiber.value(&[]);
                if value != 0.0 {
                    out.push((x_hat.clone(), family.offset + value));
                }
            }
            Some(_) => {
                if let Some((_, strength)) = solvable_fiber(family, fiber)? {
                    let r = family.reduced_amplitudes()[0];
                    let center = family.offset + family.masses.mu0();
                    out.push((x_hat.clone(), rank_one_bound_state(center, r, strength)?));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    Infinite,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `l = d`: every fiber is a single site.
    Full,
    /// `d - l ∈ {1, 2}`.
    LowCodimension,
    /// `1 <= l < d - 2`.
    HighCodimension,
    /// `A(k) ≠ 0`.
    NondegenerateBand,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Witness {
    /// The support projected onto the `α`-axes is unbounded.
    StripEscape { axes: Vec<usize> },
    /// `supp v ⊆ Π_n(α)`.
    Containment { radius: u64 },
    /// Fibers have dimension at least three.
    Codimension { fiber_dim: usize },
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyVerdict {
    pub verdict: Dichotomy,
    pub regime: Regime,
    pub witness: Witness,
    pub reason: String,
}

pub fn classify_dichotomy(masses: &MassPair, k: &QuasiMomentum, v: &Potential) -> Result<DichotomyVerdict> {
    crate::dispersion::check_dim(k.dim(), v.dim())?;
    let directions = match degenerate_directions(masses, k) {
        Ok(dirs) => dirs,
        Err(Error::NondegenerateBand) => {
            return Ok(DichotomyVerdict {
                verdict: Dichotomy::Finite,
                regime: Regime::NondegenerateBand,
                witness: Witness::None,
                reason: "A(k)≠0".into(),
            })
        }
        Err(e) => return Err(e),
    };
    let cert = hypothesis_certificate(v);
    if !(cert.holds_a && cert.holds_b) {
        return Err(Error::HypothesisUncertified(cert.reason));
    }
    let (d, l) = (k.dim(), directions.len());
    if l + 2 < d {
        return Ok(DichotomyVerdict {
            verdict: Dichotomy::Finite,
            regime: Regime::HighCodimension,
            witness: Witness::Codimension { fiber_dim: d - l },
            reason: format!("fibers of dimension {} carry finitely many eigenvalues", d - l),
        });
    }
    let regime = if l == d { Regime::Full } else { Regime::LowCodimension };
    Ok(match containment_radius(v, &directions)? {
        None => DichotomyVerdict {
            verdict: Dichotomy::Infinite,
            regime,
            witness: Witness::StripEscape { axes: directions.axes().to_vec() },
            reason: "support escapes every strip".into(),
        },
        Some(n) => DichotomyVerdict {
            verdict: Dichotomy::Finite,
            regime,
            witness: Witness::Containment { radius: n },
            reason: format!("support contained in the strip of half-width {n}"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::count_discrete;
    use std::f64::consts::PI;

    fn m11() -> MassPair {
        MassPair::new(1.0, 1.0).unwrap()
    }

    fn k(c: &[f64]) -> QuasiMomentum {
        QuasiMomentum::new(c.to_vec()).unwrap()
    }

    fn exp_line_example() -> Potential {
        Potential::exp_line(2, 0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn line_potential_fibers() {
        let fam = decompose(&m11(), &k(&[PI, 1.0]), &exp_line_example(), 5).unwrap();
        assert_eq!(fam.offset, 2.0);
        assert_eq!(fam.reduced_k, Some(k(&[1.0])));
        assert_eq!(fam.fibers.len(), 11);
        for (x, fiber) in &fam.fibers {
            assert_eq!(fiber.dim(), 1);
            let entries = fiber.finite_entries().unwrap();
            assert_eq!(entries.len(), 1);
            assert_eq!(entries[&vec![0]], (-(x[0].abs() as f64)).exp());
        }
    }

    #[test]
    fn corner_fibers_are_points() {
        let v = Potential::finite(2, [(vec![0, 1], 0.5), (vec![-2, 0], -1.0)]).unwrap();
        let fam = decompose(&m11(), &k(&[PI, PI]), &v, 3).unwrap();
        assert_eq!(fam.fiber_dim(), 0);
        assert!(fam.reduced_k.is_none());
        assert_eq!(fam.offset, 4.0);
        assert_eq!(fam.fibers[&vec![0, 1]].value(&[]), 0.5);
        assert_eq!(predicted_counts(&fam, 0.7, 3).unwrap(), 1);
        assert_eq!(predicted_counts(&fam, 0.1, 3).unwrap(), 2);
    }

    #[test]
    fn nondegenerate_rejected() {
        assert!(matches!(
            decompose(&m11(), &k(&[3.0, 0.7]), &exp_line_example(), 3),
            Err(Error::NondegenerateBand)
        ));
        let unequal = MassPair::new(1.0, 2.0).unwrap();
        assert!(decompose(&unequal, &k(&[PI, 0.7]), &exp_line_example(), 3).is_err());
        assert!(verify_block_structure(&m11(), &k(&[3.0, 0.7]), &exp_line_example(), 3).is_err());
    }

    #[test]
    fn blocks_are_exact() {
        let v = Potential::finite(3, [(vec![0, 0, 0], -1.0), (vec![1, 2, 0], 0.4)]).unwrap();
        assert_eq!(verify_block_structure(&m11(), &k(&[PI, 0.7]), &exp_line_example(), 6).unwrap(), 0.0);
        assert_eq!(verify_block_structure(&m11(), &k(&[PI, PI, 0.3]), &v, 4).unwrap(), 0.0);
    }

    #[test]
    fn spectral_union_matches_full_operator() {
        let v = Potential::finite(2, [(vec![0, 0], -1.0), (vec![2, 1], 0.7), (vec![2, -3], 1.5)]).unwrap();
        let q = k(&[0.6, PI]);
        let fam = decompose(&m11(), &q, &v, 6).unwrap();
        let union = fiber_spectrum_union(&fam, 6).unwrap();
        let full = eigenvalues(&assemble(&m11(), &q, &v, &LatticeBox::open(2, 6).unwrap()).unwrap()).unwrap();
        assert_eq!(union.len(), full.len());
        for (a, b) in union.iter().zip(&full) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_examples() {
        let s5 = 5f64.sqrt();
        assert!((rank_one_bound_state(2.0, 2.0, 1.0).unwrap() - (2.0 + s5)).abs() < 1e-15);
        assert!((rank_one_bound_state(2.0, 2.0, -1.0).unwrap() - (2.0 - s5)).abs() < 1e-15);
        assert!((rank_one_bound_state(2.0, 2.0, 1e-9).unwrap() - 4.0).abs() < 1e-15);
        assert!(rank_one_bound_state(2.0, 0.0, 1.0).is_err());
        assert!(bound_state_displacement(2.0, 1e-10) > 0.0);
    }

    #[test]
    fn chain_oracle_matches_dense_chain() {
        for (kk, strength, site, radius) in [(1.0, 0.05, 0, 12), (2.0, -0.3, 3, 8), (0.5, 0.002, 0, 30)] {
            let q = k(&[kk]);
            let v = Potential::finite(1, [(vec![site], strength)]).unwrap();
            let r = band_params(&m11(), &q).amplitudes[0];
            for margin in [1e-3, 1e-5, 1e-8] {
                let s = count_discrete(&m11(), &q, &v, radius, margin).unwrap();
                assert_eq!(
                    s.total(),
                    usize::from(chain_bound_state_visible(radius, site, r, strength, margin)),
                    "{kk} {strength} {margin}"
                );
            }
        }
    }

    #[test]
    fn line_potential_dichotomy() {
        let v = exp_line_example();
        let a = classify_dichotomy(&m11(), &k(&[PI, 1.0]), &v).unwrap();
        assert_eq!(a.verdict, Dichotomy::Infinite);
        assert_eq!(a.witness, Witness::StripEscape { axes: vec![0] });
        let b = classify_dichotomy(&m11(), &k(&[1.0, PI]), &v).unwrap();
        assert_eq!(b.verdict, Dichotomy::Finite);
        assert_eq!(b.witness, Witness::Containment { radius: 0 });
        let c = classify_dichotomy(&m11(), &k(&[0.2, 1.0]), &v).unwrap();
        assert_eq!((c.verdict, c.regime), (Dichotomy::Finite, Regime::NondegenerateBand));
    }

    #[test]
    fn high_codimension_is_finite() {
        let v = Potential::delta(4, 1.0);
        let verdict = classify_dichotomy(&m11(), &k(&[PI, 0.5, 0.5, 0.5]), &v).unwrap();
        assert_eq!(verdict.verdict, Dichotomy::Finite);
        assert_eq!(verdict.regime, Regime::HighCodimension);
    }

    #[test]
    fn uncertified_hypothesis() {
        let v = Potential::zero(2).with_rule(crate::potential::SupportRule::Constant { value: 1.0 }).unwrap();
        assert!(matches!(
            classify_dichotomy(&m11(), &k(&[PI, 1.0]), &v),
            Err(Error::HypothesisUncertified(_))
        ));
    }

    #[test]
    fn no_closed_form_for_extended_fibers() {
        let fam = decompose(&m11(), &k(&[1.0, PI]), &exp_line_example(), 4).unwrap();
        assert!(matches!(predicted_counts(&fam, 1e-8, 4), Err(Error::NoClosedForm(_))));
    }
}
