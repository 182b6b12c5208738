//! Black-box classifiers: anything that maps a batch of series to class probabilities.

mod centroid;
mod external;
mod minirocket;

pub use centroid::{train_nearest_centroid, NearestCentroid};
pub use external::{connect_external, serve_protocol, ExternalClassifier};
pub use minirocket::{kernel_patterns, train_minirocket_ridge, MiniRocketRidge, MiniRocketParams};

use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{DataError, LabeledDataset, TimeSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("class {0:?} has no training instances")]
    MissingClass(String),
    #[error("series of length {len} is too short: {reason}")]
    SeriesTooShort { len: usize, reason: String },
    #[error("instance {index} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { index: usize, expected: (usize, usize), got: (usize, usize) },
    #[error("external classifier handshake failed: {0}")]
    HandshakeFailure(String),
    #[error("external classifier violated the protocol: {0}")]
    ProtocolViolation(String),
    #[error("external classifier process exited: {0}")]
    ProcessExit(String),
    #[error("external classifier reported an error: {0}")]
    ExternalProtocolError(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown classifier {0:?}")]
    UnknownClassifier(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Rows of class probabilities, one per instance.
pub type ProbaMatrix = Vec<Vec<f64>>;

/// A trained (or connected) classifier.
///
/// Implementations must be deterministic and return rows that are valid probability
/// distributions.
pub trait Classifier: Send + Sync {
    fn class_names(&self) -> &[String];

    /// Expected `(d, L)` of every input.
    fn input_shape(&self) -> (usize, usize);

    fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError>;

    fn n_classes(&self) -> usize {
        self.class_names().len()
    }

    /// Arg-max class of a single instance; ties go to the lowest index.
    fn predict(&self, x: &TimeSeries) -> Result<usize, ModelError> {
        let proba = self.predict_proba(std::slice::from_ref(x))?;
        Ok(argmax(&proba[0]))
    }
}

impl<C: Classifier + ?Sized> Classifier for Arc<C> {
    fn class_names(&self) -> &[String] {
        (**self).class_names()
    }
    fn input_shape(&self) -> (usize, usize) {
        (**self).input_shape()
    }
    fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
        (**self).predict_proba(batch)
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

pub(crate) fn check_batch(expected: (usize, usize), batch: &[TimeSeries]) -> Result<(), ModelError> {
    match batch.iter().position(|x| x.shape() != expected) {
        Some(index) => Err(ModelError::ShapeMismatch { index, expected, got: batch[index].shape() }),
        None => Ok(()),
    }
}

pub(crate) fn check_classes(train: &LabeledDataset) -> Result<(), ModelError> {
    for (c, name) in train.class_names().iter().enumerate() {
        if !train.labels().contains(&c) {
            return Err(ModelError::MissingClass(name.clone()));
        }
    }
    Ok(())
}

/// How to obtain a classifier: `nearest_centroid`, `minirocket` or `external:<command>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    NearestCentroid,
    MiniRocket(MiniRocketParams),
    External(String),
}

impl ClassifierSpec {
    pub const BUILT_INS: [&'static str; 2] = ["nearest_centroid", "minirocket"];

    pub fn name(&self) -> String {
        match self {
            Self::NearestCentroid => "nearest_centroid".into(),
            Self::MiniRocket(_) => "minirocket".into(),
            Self::External(cmd) => format!("external:{cmd}"),
        }
    }

    /// Trains a built-in on `train`, or connects to the external process.
    pub fn build(&self, train: &LabeledDataset) -> Result<Arc<dyn Classifier>, ModelError> {
        Ok(match self {
            Self::NearestCentroid => Arc::new(train_nearest_centroid(train)?),
            Self::MiniRocket(p) => Arc::new(train_minirocket_ridge(train, p.n_features, p.lambda, p.seed)?),
            Self::External(cmd) => Arc::new(connect_external(cmd)?),
        })
    }
}

impl FromStr for ClassifierSpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("external:") {
            if cmd.trim().is_empty() {
                return Err(ModelError::UnknownClassifier(s.into()));
            }
            return Ok(Self::External(cmd.to_string()));
        }
        match s {
            "nearest_centroid" => Ok(Self::NearestCentroid),
            "minirocket" => Ok(Self::MiniRocket(MiniRocketParams::default())),
            _ => Err(ModelError::UnknownClassifier(s.into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1000.0, 999.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > p[1] && p[1] > p[2]);
        assert_eq!(softmax(&[0.3, 0.3]), vec![0.5, 0.5]);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("nearest_centroid".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::NearestCentroid);
        assert_eq!(
            "external:python3 serve.py".parse::<ClassifierSpec>().unwrap(),
            ClassifierSpec::External("python3 serve.py".into())
        );
        assert!("resnet".parse::<ClassifierSpec>().is_err());
        assert!("external:".parse::<ClassifierSpec>().is_err());
    }
}
