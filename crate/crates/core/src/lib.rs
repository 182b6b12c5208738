//! Segment-based SHAP explanations for time series classifiers.
//!
//! The crate is organised as a pipeline:
//!
//! - [`data`]: the `d × L` time series model, dataset ingestion (`.ts` subset and CSV),
//!   channel statistics and a synthetic ground-truth generator.
//! - [`segmentation`]: eight ways to cut a series into segments, plus the normalised
//!   entropy diagnostic.
//! - [`model`]: the black-box classifier abstraction, two trainable built-ins and a
//!   line-delimited JSON client for external classifiers.
//! - [`attribution`]: background sets, segment masking, Shapley value sampling, the
//!   brute-force Shapley oracle and the segment-to-timepoint expansions.
//! - [`evaluation`]: InterpretTime and AUC-difference faithfulness scores.
//! - [`runner`]: configuration-driven experiment grids and aggregate reports.

pub mod attribution;
pub mod data;
pub mod evaluation;
pub mod model;
pub mod rng;
pub mod runner;
pub mod segmentation;

pub use attribution::{
    BackgroundKind, BackgroundSet, ExpansionMode, SegmentAttribution, TimepointAttribution,
};
pub use data::{ChannelStats, LabeledDataset, Role, TimeSeries};
pub use evaluation::{AucdResult, EvalConfig, InterpretTimeResult, Perturbation};
pub use model::Classifier;
pub use segmentation::{Segmentation, SegmentationConfig, SegmentationMethod, SegmentationMode};
