use serde::{Deserialize, Serialize};

use super::AttributionError;
use crate::data::{average_instance, DataError, LabeledDataset, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundKind {
    Zero,
    Average,
    Custom,
}

impl BackgroundKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Average => "average",
            Self::Custom => "custom",
        }
    }
}

impl std::str::FromStr for BackgroundKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Self::Zero),
            "average" => Ok(Self::Average),
            other => Err(format!("unknown background {other:?} (expected zero|average)")),
        }
    }
}

/// Reference instances standing in for absent features.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    instances: Vec<TimeSeries>,
    pub kind: BackgroundKind,
}

impl BackgroundSet {
    pub fn custom(instances: Vec<TimeSeries>) -> Result<Self, AttributionError> {
        let first = instances.first().ok_or(AttributionError::EmptyBackground)?;
        if instances.iter().any(|b| b.shape() != first.shape()) {
            return Err(AttributionError::ShapeMismatch("background instances differ in shape".into()));
        }
        Ok(Self { instances, kind: BackgroundKind::Custom })
    }

    pub fn instances(&self) -> &[TimeSeries] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.instances[0].shape()
    }

    /// Builds the zero or average background for data shaped like `train`.
    pub fn build(kind: BackgroundKind, train: &LabeledDataset) -> Result<Self, DataError> {
        match kind {
            BackgroundKind::Zero => {
                let (d, len) = train.shape().ok_or(DataError::EmptyData)?;
                Ok(background_zero(d, len))
            }
            BackgroundKind::Average => background_average(train),
            BackgroundKind::Custom => Err(DataError::InvalidSeries("custom backgrounds need explicit instances".into())),
        }
    }
}

/// `{0_{d×L}}`.
pub fn background_zero(channels: usize, len: usize) -> BackgroundSet {
    BackgroundSet { instances: vec![TimeSeries::zeros(channels, len)], kind: BackgroundKind::Zero }
}

/// `{Σ x_i / |D_train|}`.
pub fn background_average(train: &LabeledDataset) -> Result<BackgroundSet, DataError> {
    Ok(BackgroundSet { instances: vec![average_instance(train)?], kind: BackgroundKind::Average })
}
