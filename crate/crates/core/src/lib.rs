//! Adaptive cost-sensitive covariate acquisition for binary classification.
//!
//! The crate trains spline-based additive logistic models on nested covariate
//! sets, evaluates the conditional Bayes risk of acquiring more covariates in
//! closed form, and walks the nested sequence per sample, stopping as soon as
//! no extension is expected to lower the total cost (misclassification plus
//! acquisition). A target-recall mode derives the false-negative cost from a
//! cross-validated decision threshold.
//!
//! Everything here is pure computation on in-memory data and builds without
//! `std`; file formats, the experiment runner and the CLI live in the
//! `adacos` crate.

#![no_std]

extern crate alloc;

pub mod condreg;
pub mod dataset;
pub mod error;
pub mod gam;
pub mod math;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod policy;
pub mod recall;
pub mod riskcore;
pub mod seqselect;
pub mod splines;

pub use condreg::ConditionalGaussian;
pub use dataset::{CostModel, Dataset, FoldAssignment};
pub use error::{Error, Result};
pub use gam::{GamModel, LassoPath};
pub use pipeline::{Bundle, Mode, Selection, TrainConfig};
pub use policy::{AcquisitionTrace, Decision};
pub use riskcore::{PiecewiseSigmoid, RiskQuery};
pub use seqselect::CovariateSequence;
pub use splines::SplineBasis;

/// Class label, 0 or 1.
pub type Label = u8;
