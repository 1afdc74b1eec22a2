//! Metric learning for pair verification on multi-view feature tensors:
//! side-information discriminant analysis in its linear (SILD) and
//! multilinear (MSIDA) forms, within-class covariance normalization
//! (WCCN), cosine scoring, and a k-fold evaluation harness with ROC
//! reporting.
//!
//! Samples are dense tensors (typically `view_dim x views`); supervision
//! is side information only — positive (same-class) and negative
//! (different-class) pairs. The within-scatter comes from positive-pair
//! differences, the between-scatter from negative-pair differences, and
//! each projection solves the generalized eigenproblem between the two.
//! WCCN composes a whitening of the projected within-class covariance on
//! top of the fitted projections.
//!
//! The `parallel` feature (on by default) runs scatter accumulation,
//! batch scoring, and fold evaluation on a rayon pool; results are
//! bit-identical to the sequential fallback because every reduction uses
//! the same fixed chunking.

pub mod error;
pub mod evaluation;
pub mod io;
pub mod msida;
pub mod numerics;
pub mod pairs;
pub mod parallel;
pub mod scoring;
pub mod sild;
pub mod synth;
pub mod tensor;
pub mod wccn;

pub use error::{Error, Result};
pub use evaluation::{kfold_evaluate, roc_curve, CvReport, FoldResult, RocCurve};
pub use msida::{fit_msida, MsidaConfig, MsidaModel};
pub use pairs::{Dataset, PairIndex, PairSet};
pub use scoring::{cosine, model_score, score_pairs, ScoredPair};
pub use sild::{fit_sild, SildModel};
pub use synth::{generate_synthetic, SynthConfig};
pub use tensor::Tensor;
pub use wccn::{fit_pipeline, Method, PipelineConfig, VerificationModel, WccnStack};
