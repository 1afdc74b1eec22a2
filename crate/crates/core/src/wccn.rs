//! Within-class covariance normalization on top of a fitted projection
//! stack, and the end-to-end pipeline assembling base projections, the
//! optional WCCN composition, and a scorable model.
//!
//! Per mode, `G^k` is the covariance of the projected positive-pair
//! difference columns, `C^k` the Cholesky factor of its regularized
//! inverse (`(G^k_reg)^{-1} = C^k (C^k)^T`), and the composed projection
//! `D^k = (C^k)^T W^k` replaces `W^k` at scoring time.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::msida::{fit_msida, MsidaConfig};
use crate::numerics::{cholesky_lower, regularize, spd_inverse};
use crate::pairs::{difference_matrix, Dataset, PairIndex};
use crate::parallel::ordered_map;
use crate::sild::{fit_sild, scatter_of_columns};
use crate::tensor::Tensor;

/// Per-mode WCCN factors.
#[derive(Debug, Clone)]
pub struct WccnStack {
    /// Within-class covariance in the projected space, one per mode.
    pub g_per_mode: Vec<DMatrix<f64>>,
    /// Lower-triangular factors with `C C^T = (G_reg)^{-1}`.
    pub c_per_mode: Vec<DMatrix<f64>>,
    /// Composed projections `D^k = (C^k)^T W^k`, application orientation.
    pub d_per_mode: Vec<DMatrix<f64>>,
}

/// Covariance of the mode-k difference columns in the projected space:
/// every other mode is projected first, the mode-k columns are projected
/// by `projections[mode]` itself, and the scatter is divided by the total
/// column count (pairs x columns).
pub fn within_covariance_projected(
    ds: &Dataset,
    positives: &[PairIndex],
    projections: &[DMatrix<f64>],
    mode: usize,
) -> Result<DMatrix<f64>> {
    if positives.is_empty() {
        return Err(Error::EmptyPairs(
            "within_covariance_projected needs positive pairs".into(),
        ));
    }
    let order = ds.shape().len();
    if projections.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "{} projections for an order-{} tensor",
            projections.len(),
            order
        )));
    }
    let refs: Vec<Option<&DMatrix<f64>>> = projections.iter().map(Some).collect();
    let w_k = &projections[mode];
    let projected: Vec<DMatrix<f64>> = ordered_map(positives, |&p| {
        difference_matrix(ds, p, mode, &refs).map(|m| w_k * m)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let v_k = w_k.nrows();
    let cols = projected[0].ncols();
    let scatter = scatter_of_columns(&projected, v_k);
    let count = (positives.len() * cols) as f64;
    Ok(scatter / count)
}

/// Cholesky factor of the regularized inverse: returns lower-triangular
/// `C` with `C C^T = (regularize(g, rho))^{-1}`, retrying once with
/// `rho * 100` if the factorization fails.
pub fn wccn_factor(g: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let attempt = |ridge: f64| -> Result<DMatrix<f64>> {
        let reg = regularize(g, ridge);
        let inv = spd_inverse(&reg)?;
        cholesky_lower(&inv)
    };
    match attempt(rho) {
        Ok(c) => Ok(c),
        Err(Error::NotPositiveDefinite) => attempt(rho * 100.0),
        Err(e) => Err(e),
    }
}

/// Composes `D^k = (C^k)^T W^k` per mode.
pub fn compose(
    c_per_mode: &[DMatrix<f64>],
    w_per_mode: &[DMatrix<f64>],
) -> Result<Vec<DMatrix<f64>>> {
    if c_per_mode.len() != w_per_mode.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} Cholesky factors for {} projections",
            c_per_mode.len(),
            w_per_mode.len()
        )));
    }
    c_per_mode
        .iter()
        .zip(w_per_mode.iter())
        .map(|(c, w)| {
            if c.nrows() != w.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "factor is {}x{} but projection has {} rows",
                    c.nrows(),
                    c.ncols(),
                    w.nrows()
                )));
            }
            Ok(c.transpose() * w)
        })
        .collect()
}

/// Fits the full WCCN stack for a set of per-mode projections.
pub fn fit_wccn(
    ds: &Dataset,
    positives: &[PairIndex],
    projections: &[DMatrix<f64>],
    rho: f64,
) -> Result<WccnStack> {
    let mut g_per_mode = Vec::with_capacity(projections.len());
    let mut c_per_mode = Vec::with_capacity(projections.len());
    for mode in 0..projections.len() {
        let g = within_covariance_projected(ds, positives, projections, mode)?;
        let c = wccn_factor(&g, rho)?;
        g_per_mode.push(g);
        c_per_mode.push(c);
    }
    let d_per_mode = compose(&c_per_mode, projections)?;
    Ok(WccnStack {
        g_per_mode,
        c_per_mode,
        d_per_mode,
    })
}

/// The five scoring methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ssc,
    Sild,
    Msida,
    SildWccn,
    MsidaWccn,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ssc,
        Method::Sild,
        Method::Msida,
        Method::SildWccn,
        Method::MsidaWccn,
    ];

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "ssc" => Ok(Method::Ssc),
            "sild" => Ok(Method::Sild),
            "msida" => Ok(Method::Msida),
            "sild-wccn" => Ok(Method::SildWccn),
            "msida-wccn" => Ok(Method::MsidaWccn),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected ssc|sild|msida|sild-wccn|msida-wccn)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ssc => "ssc",
            Method::Sild => "sild",
            Method::Msida => "msida",
            Method::SildWccn => "sild-wccn",
            Method::MsidaWccn => "msida-wccn",
        }
    }

    pub fn uses_wccn(&self) -> bool {
        matches!(self, Method::SildWccn | Method::MsidaWccn)
    }

    /// True for the tensor-per-mode methods, false for the vectorized ones.
    pub fn is_multilinear(&self) -> bool {
        matches!(self, Method::Msida | Method::MsidaWccn)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shared fitting configuration for every method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Retained dimension per mode (one entry for the vector methods).
    pub dims: Option<Vec<usize>>,
    pub max_iterations: usize,
    pub epsilon: f64,
    pub rho: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dims: None,
            max_iterations: 10,
            epsilon: 1e-6,
            rho: 1e-6,
        }
    }
}

/// A fitted, scorable model: base projections in application orientation
/// plus the optional WCCN stack. SSC carries no projections at all.
#[derive(Debug, Clone)]
pub struct VerificationModel {
    pub method: Method,
    /// Shape of the raw sample tensors the model applies to.
    pub input_shape: Vec<usize>,
    /// Per-mode projections; a single matrix on the vectorized space for
    /// the linear methods; empty for SSC.
    pub projections: Vec<DMatrix<f64>>,
    pub wccn: Option<WccnStack>,
}

impl VerificationModel {
    /// Projections used at scoring time: the WCCN-composed `D^k` when
    /// present, the base `W^k` otherwise.
    pub fn scoring_projections(&self) -> &[DMatrix<f64>] {
        match &self.wccn {
            Some(stack) => &stack.d_per_mode,
            None => &self.projections,
        }
    }

    /// Projects a raw sample tensor into the scoring space. The vector
    /// methods vectorize first; SSC passes the tensor through.
    pub fn project(&self, t: &Tensor) -> Result<Tensor> {
        if t.shape() != self.input_shape.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "sample shape {:?} does not match model input {:?}",
                t.shape(),
                self.input_shape
            )));
        }
        match self.method {
            Method::Ssc => Ok(t.clone()),
            Method::Sild | Method::SildWccn => {
                let flat = Tensor::from_vector(&t.vectorize());
                flat.mode_product(&self.scoring_projections()[0], 0)
            }
            Method::Msida | Method::MsidaWccn => {
                let mut out = t.clone();
                for (k, w) in self.scoring_projections().iter().enumerate() {
                    out = out.mode_product(w, k)?;
                }
                Ok(out)
            }
        }
    }
}

/// Fits the full pipeline for one method on the given training pairs.
pub fn fit_pipeline(
    method: Method,
    ds: &Dataset,
    positives: &[PairIndex],
    negatives: &[PairIndex],
    cfg: &PipelineConfig,
) -> Result<VerificationModel> {
    let input_shape = ds.shape().to_vec();
    match method {
        Method::Ssc => Ok(VerificationModel {
            method,
            input_shape,
            projections: vec![],
            wccn: None,
        }),
        Method::Sild | Method::SildWccn => {
            let v = match &cfg.dims {
                None => None,
                Some(d) if d.len() == 1 => Some(d[0]),
                Some(d) => {
                    return Err(Error::InvalidArgument(format!(
                        "vector methods take one retained dimension, got {d:?}"
                    )))
                }
            };
            let to_vec_pairs = |pairs: &[PairIndex]| -> Vec<_> {
                pairs
                    .iter()
                    .map(|&(l, r)| (ds.left(l).vectorize(), ds.right(r).vectorize()))
                    .collect::<Vec<_>>()
            };
            let model = fit_sild(&to_vec_pairs(positives), &to_vec_pairs(negatives), v, cfg.rho)?;
            let w_app = model.w.transpose();
            let wccn = if method.uses_wccn() {
                let flat = ds.vectorized();
                Some(fit_wccn(&flat, positives, &[w_app.clone()], cfg.rho)?)
            } else {
                None
            };
            Ok(VerificationModel {
                method,
                input_shape,
                projections: vec![w_app],
                wccn,
            })
        }
        Method::Msida | Method::MsidaWccn => {
            let mcfg = MsidaConfig {
                output_dims: cfg.dims.clone(),
                max_iterations: cfg.max_iterations,
                epsilon: cfg.epsilon,
                rho: cfg.rho,
            };
            let model = fit_msida(ds, positives, negatives, &mcfg)?;
            let wccn = if method.uses_wccn() {
                Some(fit_wccn(ds, positives, &model.w_per_mode, cfg.rho)?)
            } else {
                None
            };
            Ok(VerificationModel {
                method,
                input_shape,
                projections: model.w_per_mode,
                wccn,
            })
        }
    }
}
