//! Side-information linear discriminant analysis: scatter matrices from
//! labeled pairs and the whitening projection solved by the two-step
//! generalized eigensolver. This is the vector-space baseline and the
//! per-mode building block of the multilinear fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::solve_with_ridge;
use crate::parallel::chunked_sum;

/// Fitted linear projection. `w` is `d x v` with `w^T S_w_reg w = I`.
#[derive(Debug, Clone)]
pub struct SildModel {
    pub w: DMatrix<f64>,
    /// Number of retained directions (columns of `w`).
    pub dim: usize,
    /// Ridge actually applied to the within-scatter.
    pub ridge: f64,
}

/// Sum of outer products of column differences: `sum_i M_i M_i^T` over a
/// list of fiber matrices. The same deterministic chunked accumulation
/// backs the linear and multilinear scatters, so an order-1 multilinear
/// fit reproduces the linear one bit-for-bit.
pub(crate) fn scatter_of_columns(mats: &[DMatrix<f64>], dim: usize) -> DMatrix<f64> {
    chunked_sum(mats, DMatrix::zeros(dim, dim), |m| m * m.transpose())
}

/// Within/between scatter of difference vectors: `sum_i (u_i - v_i)(u_i - v_i)^T`.
pub fn pair_scatter(pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<DMatrix<f64>> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs("pair_scatter needs at least one pair".into()));
    }
    let d = pairs[0].0.len();
    for (i, (u, v)) in pairs.iter().enumerate() {
        if u.len() != d || v.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "pair {i} has dimensions {}x{}, expected {d}",
                u.len(),
                v.len()
            )));
        }
    }
    let diffs: Vec<DMatrix<f64>> = pairs
        .iter()
        .map(|(u, v)| DMatrix::from_column_slice(d, 1, (u - v).as_slice()))
        .collect();
    Ok(scatter_of_columns(&diffs, d))
}

/// Fits the linear projection: within-scatter from positives, between-
/// scatter from negatives, solved with the ridge retry policy. `v = None`
/// keeps every direction with generalized eigenvalue above 1e-10 of the
/// largest.
pub fn fit_sild(
    positives: &[(DVector<f64>, DVector<f64>)],
    negatives: &[(DVector<f64>, DVector<f64>)],
    v: Option<usize>,
    rho: f64,
) -> Result<SildModel> {
    let s_w = pair_scatter(positives)?;
    let s_b = pair_scatter(negatives)?;
    if s_w.nrows() != s_b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "positive pairs are {}-dimensional but negatives are {}",
            s_w.nrows(),
            s_b.nrows()
        )));
    }
    let (solved, ridge) = solve_with_ridge(&s_b, &s_w, v, rho)?;
    let dim = solved.w.ncols();
    Ok(SildModel {
        w: solved.w,
        dim,
        ridge,
    })
}

/// Projects a vector: `w^T x`.
pub fn project(model: &SildModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != model.w.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "vector has length {}, projection expects {}",
            x.len(),
            model.w.nrows()
        )));
    }
    Ok(model.w.transpose() * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::regularize;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_vec(d: usize, rng: &mut StdRng) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn scatter_zero_for_identical_pair() {
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let s = pair_scatter(&[(u.clone(), u)]).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn scatter_single_outer_product() {
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let v = DVector::from_vec(vec![0.0, 0.0]);
        let s = pair_scatter(&[(u, v)]).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn scatter_matches_naive_loop() {
        let mut rng = StdRng::seed_from_u64(21);
        let pairs: Vec<_> = (0..3).map(|_| (rand_vec(4, &mut rng), rand_vec(4, &mut rng))).collect();
        let s = pair_scatter(&pairs).unwrap();
        // independent naive accumulation
        let mut oracle = DMatrix::zeros(4, 4);
        for (u, v) in &pairs {
            let d = u - v;
            for i in 0..4 {
                for j in 0..4 {
                    oracle[(i, j)] += d[i] * d[j];
                }
            }
        }
        assert!((s - oracle).norm() < 1e-12);
    }

    #[test]
    fn scatter_rejects_empty_and_mismatched() {
        assert!(pair_scatter(&[]).is_err());
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let v = DVector::from_vec(vec![1.0]);
        assert!(pair_scatter(&[(u, v)]).is_err());
    }

    #[test]
    fn fit_axis_separable_case() {
        // positives differ only along axis 0, negatives only along axis 1:
        // the discriminant direction is axis 1.
        let e0 = DVector::from_vec(vec![1.0, 0.0]);
        let e1 = DVector::from_vec(vec![0.0, 1.0]);
        let zero = DVector::zeros(2);
        let positives = vec![(e0.clone(), zero.clone()), (e0.scale(2.0), zero.clone())];
        let negatives = vec![(e1.clone(), zero.clone()), (e1.scale(3.0), zero.clone())];
        let model = fit_sild(&positives, &negatives, Some(1), 1e-6).unwrap();
        let dir = model.w.column(0).normalize();
        assert!(dir[1].abs() > 0.999, "expected axis-1 direction, got {dir}");
    }

    #[test]
    fn fit_uninformative_case_has_unit_eigenvalues() {
        let mut rng = StdRng::seed_from_u64(8);
        let pairs: Vec<_> = (0..6).map(|_| (rand_vec(3, &mut rng), rand_vec(3, &mut rng))).collect();
        // same differences on both sides: generalized eigenvalues ~ 1
        let model = fit_sild(&pairs, &pairs, None, 1e-6).unwrap();
        let s = pair_scatter(&pairs).unwrap();
        let reg = regularize(&s, model.ridge);
        let num = model.w.transpose() * &s * &model.w;
        let den = model.w.transpose() * reg * &model.w;
        for j in 0..model.dim {
            assert!((num[(j, j)] / den[(j, j)] - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn fit_satisfies_generalized_eigen_residual() {
        let mut rng = StdRng::seed_from_u64(31);
        let positives: Vec<_> = (0..12).map(|_| (rand_vec(6, &mut rng), rand_vec(6, &mut rng))).collect();
        let negatives: Vec<_> = (0..12).map(|_| (rand_vec(6, &mut rng), rand_vec(6, &mut rng))).collect();
        let model = fit_sild(&positives, &negatives, Some(3), 1e-6).unwrap();
        let s_w = regularize(&pair_scatter(&positives).unwrap(), model.ridge);
        let s_b = pair_scatter(&negatives).unwrap();
        // whitening invariant
        let wtw = model.w.transpose() * &s_w * &model.w;
        assert!((&wtw - DMatrix::identity(3, 3)).norm() <= 1e-8);
        // each column solves the generalized problem
        let wbw = model.w.transpose() * &s_b * &model.w;
        for j in 0..3 {
            let lambda = wbw[(j, j)];
            let col = model.w.column(j);
            let resid = &s_b * col - &s_w * col * lambda;
            assert!(resid.norm() <= 1e-6 * s_b.norm());
        }
        // between-scatter diagonalized, non-increasing diagonal
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(wbw[(i, j)].abs() <= 1e-8);
                }
            }
        }
        assert!(wbw[(0, 0)] >= wbw[(1, 1)] && wbw[(1, 1)] >= wbw[(2, 2)]);
    }

    #[test]
    fn project_cases() {
        let model = SildModel {
            w: DMatrix::identity(3, 3),
            dim: 3,
            ridge: 0.0,
        };
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(project(&model, &x).unwrap(), x);
        assert_eq!(
            project(&model, &DVector::zeros(3)).unwrap(),
            DVector::zeros(3)
        );
        let mut rng = StdRng::seed_from_u64(4);
        let w = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let m = SildModel { w: w.clone(), dim: 2, ridge: 0.0 };
        let y = project(&m, &x).unwrap();
        assert!((y - w.transpose() * &x).norm() < 1e-14);
        assert!(project(&m, &DVector::zeros(4)).is_err());
    }
}
