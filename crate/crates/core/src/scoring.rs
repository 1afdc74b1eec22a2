//! Cosine scoring: the raw concatenated-view baseline and projected-tensor
//! scoring for fitted models.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::pairs::{Dataset, PairSet};
use crate::parallel::ordered_map;
use crate::tensor::Tensor;
use crate::wccn::VerificationModel;

/// One scored pair: canonical pair id, cosine score, ground truth, fold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair_id: usize,
    pub score: f64,
    pub label: bool,
    pub fold: u32,
}

/// Norms below this count as zero vectors; their cosine is defined as 0.
const ZERO_NORM: f64 = 1e-300;

/// Cosine similarity, clamped to [-1, 1]; zero vectors score 0 instead of
/// producing NaN.
pub fn cosine(u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.norm();
    let nv = v.norm();
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Ok(0.0);
    }
    Ok((u.dot(v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Cosine of the view concatenations (the no-learning baseline).
pub fn ssc_score(left: &[DVector<f64>], right: &[DVector<f64>]) -> Result<f64> {
    if left.len() != right.len() {
        return Err(Error::ShapeMismatch(format!(
            "view counts differ: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    if left.is_empty() {
        return Err(Error::InvalidArgument("no views to score".into()));
    }
    for (v, (l, r)) in left.iter().zip(right.iter()).enumerate() {
        if l.len() != r.len() {
            return Err(Error::ShapeMismatch(format!(
                "view {v} has dimensions {} vs {}",
                l.len(),
                r.len()
            )));
        }
    }
    let concat = |views: &[DVector<f64>]| {
        let data: Vec<f64> = views.iter().flat_map(|v| v.iter().copied()).collect();
        DVector::from_vec(data)
    };
    cosine(&concat(left), &concat(right))
}

/// Projects both tensors through the model and takes the cosine of the
/// vectorized results.
pub fn model_score(model: &VerificationModel, left: &Tensor, right: &Tensor) -> Result<f64> {
    let l = model.project(left)?;
    let r = model.project(right)?;
    cosine(&l.vectorize(), &r.vectorize())
}

/// Scores every pair in the set, in canonical pair order.
pub fn score_pairs(
    model: &VerificationModel,
    ds: &Dataset,
    pairs: &PairSet,
) -> Result<Vec<ScoredPair>> {
    let ids: Vec<usize> = (0..pairs.n_pairs()).collect();
    ordered_map(&ids, |&id| {
        let (l, r) = pairs.pair(id);
        let score = model_score(model, ds.left(l), ds.right(r))?;
        Ok(ScoredPair {
            pair_id: id,
            score,
            label: pairs.label_of(id),
            fold: pairs.fold_of(id),
        })
    })
    .into_iter()
    .collect()
}
