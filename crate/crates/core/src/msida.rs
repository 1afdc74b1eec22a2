//! Multilinear side-information discriminant analysis: one projection
//! matrix per tensor mode, learned by alternating per-mode generalized
//! eigenproblems over scatters of partially projected difference fibers.
//!
//! Projection matrices are stored in application orientation (`I'_k x I_k`),
//! i.e. they premultiply mode-k unfoldings directly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::solve_with_ridge;
use crate::pairs::{difference_matrix, Dataset, PairIndex};
use crate::parallel::ordered_map;
use crate::sild::scatter_of_columns;
use crate::tensor::Tensor;

/// Configuration for the alternating fit.
#[derive(Debug, Clone)]
pub struct MsidaConfig {
    /// Retained dimension per mode; `None` keeps directions with
    /// generalized eigenvalue above 1e-10 of the largest, decided on the
    /// first sweep and frozen.
    pub output_dims: Option<Vec<usize>>,
    pub max_iterations: usize,
    /// Per-mode stopping threshold is `I_k * I'_k * epsilon` on the
    /// Frobenius norm of the sweep-to-sweep change.
    pub epsilon: f64,
    /// Ridge for the within-scatter (retried once at 100x on failure).
    pub rho: f64,
}

impl Default for MsidaConfig {
    fn default() -> Self {
        MsidaConfig {
            output_dims: None,
            max_iterations: 10,
            epsilon: 1e-6,
            rho: 1e-6,
        }
    }
}

/// Fitted multilinear model.
#[derive(Debug, Clone)]
pub struct MsidaModel {
    /// One projection per mode, application orientation `I'_k x I_k`.
    pub w_per_mode: Vec<DMatrix<f64>>,
    pub output_dims: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Frobenius change norms, indexed `[sweep][mode]`.
    pub change_norms: Vec<Vec<f64>>,
}

impl MsidaModel {
    /// Mode dimensions the model was trained on.
    pub fn input_dims(&self) -> Vec<usize> {
        self.w_per_mode.iter().map(|w| w.ncols()).collect()
    }
}

/// Within/between scatters for one mode: sums of outer products of the
/// mode-k difference columns after projecting every other mode.
/// `projections[mode]` is ignored. Positives feed the within-scatter,
/// negatives the between-scatter.
pub fn mode_scatters(
    ds: &Dataset,
    positives: &[PairIndex],
    negatives: &[PairIndex],
    mode: usize,
    projections: &[Option<&DMatrix<f64>>],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyPairs(
            "mode_scatters needs positive and negative pairs".into(),
        ));
    }
    let dim = ds.shape()[mode];
    let scatter = |pairs: &[PairIndex]| -> Result<DMatrix<f64>> {
        let mats: Vec<DMatrix<f64>> = ordered_map(pairs, |&p| {
            difference_matrix(ds, p, mode, projections)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        Ok(scatter_of_columns(&mats, dim))
    };
    Ok((scatter(positives)?, scatter(negatives)?))
}

/// Alternating fit: sweeps modes in ascending order, re-solving each
/// mode's generalized eigenproblem against the latest other-mode
/// projections, until every mode's change norm falls below its threshold
/// or `max_iterations` is reached.
pub fn fit_msida(
    ds: &Dataset,
    positives: &[PairIndex],
    negatives: &[PairIndex],
    cfg: &MsidaConfig,
) -> Result<MsidaModel> {
    let shape = ds.shape().to_vec();
    let order = shape.len();
    if cfg.max_iterations < 1 {
        return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
    }
    if cfg.epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be > 0".into()));
    }
    if let Some(dims) = &cfg.output_dims {
        if dims.len() != order {
            return Err(Error::InvalidArgument(format!(
                "{} output dims for an order-{} tensor",
                dims.len(),
                order
            )));
        }
        for (k, (&v, &d)) in dims.iter().zip(shape.iter()).enumerate() {
            if v < 1 || v > d {
                return Err(Error::InvalidArgument(format!(
                    "output dim {v} for mode {k} outside 1..={d}"
                )));
            }
        }
    }

    // Identity initialization; each mode's first solve replaces it with a
    // (possibly truncated) projection.
    let mut w_app: Vec<DMatrix<f64>> = shape.iter().map(|&d| DMatrix::identity(d, d)).collect();
    let mut dims: Vec<Option<usize>> = match &cfg.output_dims {
        Some(v) => v.iter().map(|&d| Some(d)).collect(),
        None => vec![None; order],
    };
    let mut change_norms: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;

    for sweep in 0..cfg.max_iterations {
        iterations_run = sweep + 1;
        let mut sweep_changes = Vec::with_capacity(order);
        let mut all_below = true;
        for k in 0..order {
            let projections: Vec<Option<&DMatrix<f64>>> =
                w_app.iter().map(Some).collect();
            let (s_w, s_b) = mode_scatters(ds, positives, negatives, k, &projections)?;
            if s_w.iter().any(|x| !x.is_finite()) || s_b.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("mode-{k} scatter")));
            }
            // Normalize by the unfolding column count. The whitening
            // constraint pins the projected variance to 1/(pairs * columns)
            // per mode; with raw sums the per-mode column counts disagree
            // whenever output dims differ, no joint fixpoint exists, and the
            // alternation drifts in scale by sqrt(P_o/P_k) per sweep.
            // Dividing both scatters by P_k leaves eigenvalues and
            // directions untouched (and is a no-op for order-1 tensors).
            let columns: usize = (0..order)
                .filter(|&o| o != k)
                .map(|o| w_app[o].nrows())
                .product();
            let s_w = s_w / columns as f64;
            let s_b = s_b / columns as f64;
            let (solved, _ridge) = solve_with_ridge(&s_b, &s_w, dims[k], cfg.rho)?;
            let v_k = solved.w.ncols();
            dims[k] = Some(v_k);
            let new_app = solved.w.transpose();
            // Sweep-1 change is measured against the truncated identity the
            // initialization stands for.
            let previous = if sweep == 0 {
                DMatrix::<f64>::identity(v_k, shape[k])
            } else {
                w_app[k].clone()
            };
            let change = (&new_app - previous).norm();
            let threshold = (shape[k] * v_k) as f64 * cfg.epsilon;
            if change >= threshold {
                all_below = false;
            }
            sweep_changes.push(change);
            w_app[k] = new_app;
        }
        change_norms.push(sweep_changes);
        if all_below {
            converged = true;
            break;
        }
    }

    Ok(MsidaModel {
        w_per_mode: w_app,
        output_dims: dims.into_iter().map(|d| d.unwrap()).collect(),
        iterations_run,
        converged,
        change_norms,
    })
}

/// Applies the fitted projections: mode products in ascending mode order.
pub fn project_tensor(model: &MsidaModel, t: &Tensor) -> Result<Tensor> {
    let expected = model.input_dims();
    if t.shape() != expected.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "tensor shape {:?} does not match trained dims {:?}",
            t.shape(),
            expected
        )));
    }
    let mut out = t.clone();
    for (k, w) in model.w_per_mode.iter().enumerate() {
        out = out.mode_product(w, k)?;
    }
    Ok(out)
}
