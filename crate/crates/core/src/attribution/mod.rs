//! Segment-level Shapley attributions and their expansion to timepoints.
//!
//! A feature is one `(channel, segment)` pair. A coalition `T` of active features is
//! turned into a model input by [`mask_replace`]: active features keep the explained
//! instance's values, inactive ones take the background's. The value of a coalition is
//! the model's probability for the explained class, averaged over background instances.

mod background;
mod expand;
mod shapley;

pub use background::{background_average, background_zero, BackgroundKind, BackgroundSet};
pub use expand::{normalize_to_timepoints, replicate_to_timepoints, ExpansionMode, TimepointAttribution};
pub use shapley::{
    exact_shapley, sampled_shapley, shapley_exact, shapley_sampling, CoalitionGame, SegmentGame,
    ShapleyEstimate, MAX_EXACT_FEATURES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::TimeSeries;
use crate::model::ModelError;
use crate::segmentation::Segmentation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttributionError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid feature set: {0}")]
    InvalidFeature(String),
    #[error("{0} features exceed the exact enumeration limit of {MAX_EXACT_FEATURES}")]
    TooManyFeatures(usize),
    #[error("permutation count must be at least 1")]
    InvalidPermutationCount,
    #[error("background set is empty")]
    EmptyBackground,
    #[error("class index {class} out of range for {n_classes} classes")]
    InvalidClass { class: usize, n_classes: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shapley values per `(channel, segment)` feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAttribution {
    /// Flat, in [`Segmentation::features`] order.
    pub values: Vec<f64>,
    pub explained_class: usize,
    /// `v(∅)`: the model output with every feature taken from the background.
    pub base_value: f64,
    /// `v(all)`: the model output on the explained instance.
    pub full_value: f64,
    pub segmentation: Segmentation,
    /// 0 for the exact enumeration.
    pub n_permutations: usize,
    pub seed: u64,
}

impl SegmentAttribution {
    /// Values grouped per channel.
    pub fn per_channel(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.segmentation.n_channels());
        let mut it = self.values.iter().copied();
        for c in 0..self.segmentation.n_channels() {
            out.push(it.by_ref().take(self.segmentation.n_segments(c)).collect());
        }
        out
    }

    /// Builds an attribution with arbitrary values, e.g. for tests or baselines.
    pub fn from_values(values: Vec<f64>, segmentation: Segmentation) -> Result<Self, AttributionError> {
        if values.len() != segmentation.n_features() {
            return Err(AttributionError::InvalidFeature(format!(
                "{} values for {} features",
                values.len(),
                segmentation.n_features()
            )));
        }
        Ok(Self {
            values,
            explained_class: 0,
            base_value: 0.0,
            full_value: 0.0,
            segmentation,
            n_permutations: 0,
            seed: 0,
        })
    }
}

/// The JSON document written by `segshap explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionDocument {
    pub explained_class: usize,
    pub base_value: f64,
    pub segment_values: Vec<Vec<f64>>,
    pub timepoint_values: Vec<Vec<f64>>,
    pub mode: ExpansionMode,
    pub seed: u64,
    pub n_permutations: usize,
}

impl AttributionDocument {
    pub fn new(attr: &SegmentAttribution, expanded: &TimepointAttribution) -> Self {
        Self {
            explained_class: attr.explained_class,
            base_value: attr.base_value,
            segment_values: attr.per_channel(),
            timepoint_values: expanded.to_rows(),
            mode: expanded.mode,
            seed: attr.seed,
            n_permutations: attr.n_permutations,
        }
    }

    pub fn timepoint_attribution(&self) -> Result<TimepointAttribution, AttributionError> {
        TimepointAttribution::from_rows(self.timepoint_values.clone(), self.mode)
    }
}

/// Replaces inactive features of `x` with `background` values. `active[j]` refers to the
/// `j`-th entry of [`Segmentation::features`].
pub fn mask_replace(
    x: &TimeSeries,
    background: &TimeSeries,
    active: &[bool],
    seg: &Segmentation,
) -> Result<TimeSeries, AttributionError> {
    if x.shape() != background.shape() {
        return Err(AttributionError::ShapeMismatch(format!(
            "instance {:?} vs background {:?}",
            x.shape(),
            background.shape()
        )));
    }
    check_segmentation(x, seg)?;
    if active.len() != seg.n_features() {
        return Err(AttributionError::InvalidFeature(format!(
            "{} flags for {} features",
            active.len(),
            seg.n_features()
        )));
    }
    Ok(mask_with_cells(x, background, active, &seg.cell_features()))
}

pub(crate) fn check_segmentation(x: &TimeSeries, seg: &Segmentation) -> Result<(), AttributionError> {
    if seg.len() != x.len() || seg.n_channels() != x.n_channels() {
        return Err(AttributionError::ShapeMismatch(format!(
            "segmentation covers {}x{}, instance is {:?}",
            seg.n_channels(),
            seg.len(),
            x.shape()
        )));
    }
    Ok(())
}

pub(crate) fn mask_with_cells(x: &TimeSeries, background: &TimeSeries, active: &[bool], cells: &[usize]) -> TimeSeries {
    let mut out = background.clone();
    for ((o, v), &f) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(cells) {
        if active[f] {
            *o = *v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_examples() {
        let x = TimeSeries::univariate(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bg = TimeSeries::zeros(1, 4);
        let seg = Segmentation::shared(1, vec![0, 2, 4]).unwrap();
        assert_eq!(mask_replace(&x, &bg, &[true, true], &seg).unwrap(), x);
        assert_eq!(mask_replace(&x, &bg, &[false, false], &seg).unwrap(), bg);
        assert_eq!(mask_replace(&x, &bg, &[true, false], &seg).unwrap().as_slice(), &[1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn mask_errors() {
        let x = TimeSeries::univariate(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let seg = Segmentation::shared(1, vec![0, 2, 4]).unwrap();
        let short = TimeSeries::zeros(1, 3);
        assert!(matches!(mask_replace(&x, &short, &[true, true], &seg), Err(AttributionError::ShapeMismatch(_))));
        let bg = TimeSeries::zeros(1, 4);
        assert!(matches!(mask_replace(&x, &bg, &[true], &seg), Err(AttributionError::InvalidFeature(_))));
    }

    #[test]
    fn per_channel_grouping() {
        let seg = Segmentation::new(crate::SegmentationMode::PerChannel, vec![vec![0, 1, 3], vec![0, 3]]).unwrap();
        let a = SegmentAttribution::from_values(vec![1.0, 2.0, 3.0], seg).unwrap();
        assert_eq!(a.per_channel(), vec![vec![1.0, 2.0], vec![3.0]]);
    }
}
