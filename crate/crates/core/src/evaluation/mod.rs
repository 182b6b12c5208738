//! Perturbation-based faithfulness scores for timepoint attributions.
//!
//! [`interpret_time`] perturbs the top-ranked positive cells (and, separately, the rest)
//! at a schedule of fractions `k` and integrates the normalised probability drop.
//! [`aucd`] walks between the explained instance and an opposite-class representative
//! in order of absolute attribution and compares the insertion and deletion areas.

mod aucd;
mod interpret;
mod perturb;

pub use aucd::{aucd, aucd_with_representative, opposite_class_representative, AucdResult};
pub use interpret::{interpret_time, InterpretTimeResult};
pub use perturb::{perturb_values, Perturbation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::AttributionError;
use crate::data::DataError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("the predicted class has probability 0 on the unperturbed instance")]
    ZeroBaseProbability,
    #[error("training data offers no class other than the predicted one")]
    SingleClassDataset,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k_schedule: Vec<f64>,
    pub aucd_step_fraction: f64,
    pub local_mean_radius: usize,
    pub seed: u64,
}

impl EvalConfig {
    pub const DEFAULT_K: [f64; 11] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 1.0];

    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EvaluationError> {
        if self.k_schedule.is_empty() {
            return Err(EvaluationError::InvalidConfig("k schedule is empty".into()));
        }
        if self.k_schedule.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
            return Err(EvaluationError::InvalidConfig("k values must lie in (0, 1]".into()));
        }
        if self.k_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvaluationError::InvalidConfig("k values must be strictly increasing".into()));
        }
        if !(self.aucd_step_fraction > 0.0 && self.aucd_step_fraction <= 1.0) {
            return Err(EvaluationError::InvalidConfig("aucd step fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k_schedule: Self::DEFAULT_K.to_vec(), aucd_step_fraction: 0.04, local_mean_radius: 2, seed: 0 }
    }
}

/// Area under a piecewise-linear curve given as `(x, y)` points.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// `⌈x⌉`, forgiving float noise just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Cell indices ordered by `key` descending, ties by index.
pub(crate) fn rank_descending(cells: impl Iterator<Item = (usize, f64)>) -> Vec<usize> {
    let mut cells: Vec<(usize, f64)> = cells.collect();
    cells.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cells.into_iter().map(|(i, _)| i).collect()
}
