//! Lanczos iteration with full reorthogonalization for extremal eigenvalues.
//!
//! A single Krylov sequence resolves each distinct eigenvalue once;
//! multiplicities are not recovered (use spectrum slicing for counts).

use nalgebra::{ComplexField, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

fn dot<T: ComplexField<RealField = f64> + Copy>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: ComplexField<RealField = f64> + Copy>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

/// The `how_many` eigenvalues at `side` of the Hermitian operator `matvec`,
/// ordered from the extreme inwards, each with residual bound `<= tol`.
pub fn lanczos_extremal<T, F>(
    n: usize,
    mut matvec: F,
    side: Side,
    how_many: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64> + Copy,
    F: FnMut(&[T], &mut [T]),
{
    if how_many == 0 {
        return Err(Error::InvalidArgument("how_many must be at least 1".into()));
    }
    let want = how_many.min(n);
    let max_iter = max_iter.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2057);
    let mut v: Vec<T> = (0..n).map(|_| T::from_real(rng.random_range(-1.0..1.0))).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / nv));

    let mut basis: Vec<Vec<T>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut best_residual = f64::INFINITY;

    for j in 0..max_iter {
        matvec(&basis[j], &mut w);
        let a = dot(&basis[j], &w).real();
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis; this
        // also removes the α_j v_j and β_{j-1} v_{j-1} components
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= *qi * c;
                }
            }
        }
        let b = norm(&w);
        let m = j + 1;
        let exhausted = b <= 1e-13 * alpha.iter().map(|x| x.abs()).fold(1.0, f64::max) || m == n;
        let check = exhausted || m == max_iter || (m >= want && m % 5 == 0);
        if check {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
            if side == Side::Above {
                order.reverse();
            }
            let take = want.min(m);
            let residuals: Vec<f64> = order[..take]
                .iter()
                .map(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs())
                .collect();
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            if take == want {
                best_residual = best_residual.min(worst);
            }
            if exhausted || (take == want && worst <= tol) {
                return Ok(order[..take].iter().map(|&i| eig.eigenvalues[i]).collect());
            }
        }
        if m == max_iter {
            break;
        }
        beta.push(b);
        let next: Vec<T> = w.iter().map(|x| x.scale(1.0 / b)).collect();
        basis.push(next);
    }
    Err(Error::NonConvergence { iterations: max_iter, best_residual })
}
