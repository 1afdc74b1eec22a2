//! Symmetric eigendecomposition, Cholesky factorization, ridge
//! regularization, and the two-step generalized eigensolver.
//!
//! The generalized problem `S_b w = lambda S_w w` is solved by first
//! factoring `S_w = H Lambda H^T`, whitening with `H Lambda^{-1/2}`, then
//! diagonalizing the whitened between-scatter `Z E Z^T`; the projection is
//! `W = H Lambda^{-1/2} Z` with columns ordered by descending diagonal of
//! `E`. All orderings and eigenvector signs are canonicalized so identical
//! inputs produce bit-identical outputs.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a within-scatter counts as
/// non-positive-definite (against its trace).
const PD_EIG_FLOOR: f64 = 1e-14;

/// Eigenvalues of the within-scatter below this fraction of the largest are
/// clamped before `Lambda^{-1/2}` to bound noise amplification.
const RANK_TRUNCATION: f64 = 1e-12;

/// Result of a symmetric eigendecomposition, eigenvalues sorted descending
/// and eigenvectors orthonormal, aligned column-for-column.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Result of the two-step generalized eigensolve: `w` holds the first `v`
/// projection columns (d x v), `eigenvalues` the matching generalized
/// eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct GeneralizedEig {
    pub w: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

fn check_square_finite(s: &DMatrix<f64>, what: &str) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Symmetric eigendecomposition with deterministic ordering.
///
/// The input is symmetrized as `(S + S^T)/2` before solving. Eigenvalues
/// come out sorted descending with ties broken by ascending pre-sort index;
/// each eigenvector's first component of magnitude above 1e-12 is made
/// positive.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigenResult> {
    check_square_finite(s, "sym_eig input")?;
    let n = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let eig: SymmetricEigen<f64, Dyn> = SymmetricEigen::new(sym);

    // descending values; stable sort keeps original index order on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if let Some(lead) = col.iter().find(|x| x.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok(EigenResult { values, vectors })
}

/// Cholesky factor `L` (lower triangular, positive diagonal) with
/// `s = L L^T`. Fails with `NotPositiveDefinite` on a non-positive pivot.
pub fn cholesky_lower(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_finite(s, "cholesky input")?;
    let sym = (s + s.transpose()) * 0.5;
    let chol = Cholesky::new(sym).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.l())
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_finite(s, "spd_inverse input")?;
    let sym = (s + s.transpose()) * 0.5;
    let chol = Cholesky::new(sym).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.inverse())
}

/// Ridge regularization: `s + rho * (trace(s)/d) * I`, falling back to
/// `s + rho * I` when the trace is zero.
pub fn regularize(s: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let d = s.nrows();
    let trace = s.trace();
    let scale = if trace == 0.0 { 1.0 } else { trace / d as f64 };
    let mut out = s.clone();
    for i in 0..d {
        out[(i, i)] += rho * scale;
    }
    out
}

/// Two-step generalized eigensolve returning the leading `v` projection
/// columns. `s_w` must already be positive definite (regularize first).
pub fn two_step_generalized_eig(
    s_b: &DMatrix<f64>,
    s_w: &DMatrix<f64>,
    v: usize,
) -> Result<GeneralizedEig> {
    let full = two_step_full(s_b, s_w)?;
    let d = full.w.nrows();
    if v < 1 || v > d {
        return Err(Error::InvalidArgument(format!(
            "requested dimension {v} outside 1..={d}"
        )));
    }
    Ok(GeneralizedEig {
        w: full.w.columns(0, v).clone_owned(),
        eigenvalues: full.eigenvalues.rows(0, v).clone_owned(),
    })
}

/// Full-rank variant of [`two_step_generalized_eig`]; callers truncate.
pub fn two_step_full(s_b: &DMatrix<f64>, s_w: &DMatrix<f64>) -> Result<GeneralizedEig> {
    check_square_finite(s_b, "between-scatter")?;
    check_square_finite(s_w, "within-scatter")?;
    if s_b.nrows() != s_w.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "scatter dimensions differ: {} vs {}",
            s_b.nrows(),
            s_w.nrows()
        )));
    }

    // Step 1: factor and whiten the within-scatter.
    let ew = sym_eig(s_w)?;
    let trace = s_w.trace();
    if ew.values.iter().any(|&l| l <= PD_EIG_FLOOR * trace) {
        return Err(Error::NotPositiveDefinite);
    }
    let floor = RANK_TRUNCATION * ew.values[0];
    let inv_sqrt = ew.values.map(|l| 1.0 / l.max(floor).sqrt());
    let mut whiten = ew.vectors.clone();
    for (j, col) in inv_sqrt.iter().enumerate() {
        whiten.column_mut(j).scale_mut(*col);
    }

    // Step 2: diagonalize the whitened between-scatter.
    let sb_t = whiten.transpose() * s_b * &whiten;
    let eb = sym_eig(&sb_t)?;

    Ok(GeneralizedEig {
        w: whiten * eb.vectors,
        eigenvalues: eb.values,
    })
}

/// Number of leading directions whose generalized eigenvalue exceeds
/// `rel` times the largest one; at least 1.
pub fn select_dims(eigenvalues: &DVector<f64>, rel: f64) -> usize {
    if eigenvalues.is_empty() {
        return 1;
    }
    let cutoff = rel * eigenvalues[0];
    eigenvalues.iter().filter(|&&l| l > cutoff).count().max(1)
}

/// Solves the generalized problem with the ridge policy: regularize `s_w`
/// with `rho`, retry once with `rho * 100` if positive-definiteness fails.
/// `v = None` keeps every direction with generalized eigenvalue above
/// 1e-10 of the largest. Returns the solution and the ridge actually used.
pub fn solve_with_ridge(
    s_b: &DMatrix<f64>,
    s_w: &DMatrix<f64>,
    v: Option<usize>,
    rho: f64,
) -> Result<(GeneralizedEig, f64)> {
    if rho < 0.0 {
        return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {rho}")));
    }
    let attempt = |ridge: f64| -> Result<GeneralizedEig> {
        let reg = regularize(s_w, ridge);
        two_step_full(s_b, &reg)
    };
    let (full, used) = match attempt(rho) {
        Ok(f) => (f, rho),
        Err(Error::NotPositiveDefinite) => {
            let retry = rho * 100.0;
            (attempt(retry)?, retry)
        }
        Err(e) => return Err(e),
    };
    let dims = match v {
        Some(v) => {
            let d = full.w.nrows();
            if v < 1 || v > d {
                return Err(Error::InvalidArgument(format!(
                    "requested dimension {v} outside 1..={d}"
                )));
            }
            v
        }
        None => select_dims(&full.eigenvalues, 1e-10),
    };
    Ok((
        GeneralizedEig {
            w: full.w.columns(0, dims).clone_owned(),
            eigenvalues: full.eigenvalues.rows(0, dims).clone_owned(),
        },
        used,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, rng: &mut StdRng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn random_spd(n: usize, rng: &mut StdRng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn sym_eig_identity() {
        let r = sym_eig(&DMatrix::identity(3, 3)).unwrap();
        for v in r.values.iter() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let ortho = r.vectors.transpose() * &r.vectors;
        assert_relative_eq!((ortho - DMatrix::identity(3, 3)).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn sym_eig_diagonal_sorted_descending() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let r = sym_eig(&s).unwrap();
        assert_eq!(r.values.as_slice(), &[3.0, 2.0, 1.0]);
        // permuted identity columns, sign-canonicalized
        assert_relative_eq!(r.vectors[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.vectors[(2, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.vectors[(1, 2)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sym_eig_reconstruction() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..5 {
            let s = random_symmetric(5, &mut rng);
            let r = sym_eig(&s).unwrap();
            let rebuilt =
                &r.vectors * DMatrix::from_diagonal(&r.values) * r.vectors.transpose();
            assert!((rebuilt - &s).norm() <= 1e-10 * s.norm().max(1.0));
        }
    }

    #[test]
    fn sym_eig_rejects_nonsquare_and_nonfinite() {
        assert!(sym_eig(&DMatrix::zeros(2, 3)).is_err());
        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = f64::NAN;
        assert!(matches!(sym_eig(&bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky_lower(&DMatrix::identity(4, 4)).unwrap();
        assert_relative_eq!((l - DMatrix::identity(4, 4)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_two_by_two() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0]);
        let l = cholesky_lower(&s).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]);
        assert_relative_eq!((l - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_indefinite_errors() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky_lower(&s),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn cholesky_random_spd_reconstructs() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..5 {
            let s = random_spd(6, &mut rng);
            let l = cholesky_lower(&s).unwrap();
            assert!((&l * l.transpose() - &s).norm() <= 1e-10 * s.norm());
            for i in 0..6 {
                assert!(l[(i, i)] > 0.0);
            }
        }
    }

    #[test]
    fn regularize_cases() {
        let s = DMatrix::identity(2, 2);
        assert_eq!(regularize(&s, 0.0), s);
        let r = regularize(&s, 0.1);
        assert_relative_eq!(r[(0, 0)], 1.1, epsilon = 1e-14);
        assert_relative_eq!(r[(1, 1)], 1.1, epsilon = 1e-14);
        // zero trace falls back to rho * I
        let z = DMatrix::zeros(3, 3);
        let r = regularize(&z, 0.5);
        assert_relative_eq!(r[(1, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn two_step_whitened_problem() {
        let s_b = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 1.0]));
        let s_w = DMatrix::identity(2, 2);
        let r = two_step_generalized_eig(&s_b, &s_w, 1).unwrap();
        assert_relative_eq!(r.eigenvalues[0], 5.0, epsilon = 1e-10);
        assert_relative_eq!(r.w[(0, 0)].abs(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(r.w[(1, 0)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn two_step_diagonal_closed_form() {
        let s_b = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0]));
        let s_w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let r = two_step_generalized_eig(&s_b, &s_w, 2).unwrap();
        assert_relative_eq!(r.eigenvalues[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(r.eigenvalues[1], 2.0, epsilon = 1e-10);
        let wtw = r.w.transpose() * &s_w * &r.w;
        assert!((wtw - DMatrix::identity(2, 2)).norm() <= 1e-8);
    }

    #[test]
    fn two_step_random_spd_postconditions() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..10 {
            let s_b = random_spd(6, &mut rng);
            let s_w = random_spd(6, &mut rng);
            let r = two_step_generalized_eig(&s_b, &s_w, 3).unwrap();
            // whitening
            let wtw = r.w.transpose() * &s_w * &r.w;
            assert!((&wtw - DMatrix::identity(3, 3)).norm() <= 1e-8);
            // between diagonalized
            let wbw = r.w.transpose() * &s_b * &r.w;
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert!(wbw[(i, j)].abs() <= 1e-8, "off-diagonal {}", wbw[(i, j)]);
                    }
                }
            }
            // generalized eigen residual per column
            for j in 0..3 {
                let w_j = r.w.column(j);
                let resid = &s_b * w_j - &s_w * w_j * r.eigenvalues[j];
                assert!(resid.norm() <= 1e-6 * s_b.norm());
            }
        }
    }

    #[test]
    fn two_step_rejects_indefinite_within() {
        let s_b = DMatrix::identity(2, 2);
        let s_w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            two_step_generalized_eig(&s_b, &s_w, 1),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn solve_with_ridge_recovers_singular_within() {
        // rank-1 within-scatter: raw solve must fail, ridge succeeds
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s_w = &u * u.transpose();
        let mut rng = StdRng::seed_from_u64(3);
        let s_b = random_spd(3, &mut rng);
        let (r, used) = solve_with_ridge(&s_b, &s_w, Some(2), 1e-6).unwrap();
        assert_eq!(r.w.ncols(), 2);
        assert!(used >= 1e-6);
        let reg = regularize(&s_w, used);
        let wtw = r.w.transpose() * reg * &r.w;
        assert!((wtw - DMatrix::identity(2, 2)).norm() <= 1e-8);
    }

    #[test]
    fn select_dims_rule() {
        let vals = DVector::from_vec(vec![10.0, 5.0, 1e-12, -0.1]);
        assert_eq!(select_dims(&vals, 1e-10), 2);
        let zero = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(select_dims(&zero, 1e-10), 1);
    }

    #[test]
    fn determinism_bitwise() {
        let mut rng = StdRng::seed_from_u64(17);
        let s_b = random_spd(5, &mut rng);
        let s_w = random_spd(5, &mut rng);
        let a = two_step_generalized_eig(&s_b, &s_w, 3).unwrap();
        let b = two_step_generalized_eig(&s_b, &s_w, 3).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }
}
