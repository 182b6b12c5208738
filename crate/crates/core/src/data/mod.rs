//! Time series data model, dataset ingestion and summary statistics.

mod io;
mod synth;

pub use io::{parse_csv, parse_ts_file, write_csv, write_ts_file};
pub use synth::{synth_bump_dataset, BumpSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("malformed header at line {line}: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("unsupported feature at line {line}: {message}")]
    UnsupportedFeature { line: usize, message: String },
    #[error("data row {line} does not match the header: {message}")]
    DataRowMismatch { line: usize, message: String },
    #[error("dataset contains no instances")]
    EmptyData,
    #[error("{columns} value columns cannot be split into {channels} channels")]
    NonDivisibleColumns { columns: usize, channels: usize },
    #[error("non-numeric value {value:?} at line {line}")]
    NonNumericValue { line: usize, value: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

/// A `d × L` real-valued series stored channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TimeSeries {
    channels: usize,
    len: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from channel-major values. Every value must be finite.
    pub fn new(channels: usize, len: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if channels == 0 || len == 0 {
            return Err(DataError::InvalidSeries(format!(
                "shape {channels}x{len} has an empty axis"
            )));
        }
        if values.len() != channels * len {
            return Err(DataError::InvalidSeries(format!(
                "expected {} values for shape {channels}x{len}, got {}",
                channels * len,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::InvalidSeries(format!(
                "non-finite value at channel {}, timepoint {}",
                pos / len,
                pos % len
            )));
        }
        Ok(Self { channels, len, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let channels = rows.len();
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(DataError::InvalidSeries("channels differ in length".into()));
        }
        Self::new(channels, len, rows.into_iter().flatten().collect())
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self, DataError> {
        let len = values.len();
        Self::new(1, len, values)
    }

    pub fn zeros(channels: usize, len: usize) -> Self {
        assert!(channels > 0 && len > 0, "empty shape");
        Self { channels, len, values: vec![0.0; channels * len] }
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    /// Number of timepoints `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.len)
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, channel: usize, t: usize) -> f64 {
        self.values[channel * self.len + t]
    }

    pub fn set(&mut self, channel: usize, t: usize, value: f64) {
        self.values[channel * self.len + t] = value;
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.len..(channel + 1) * self.len]
    }

    pub fn channel_mut(&mut self, channel: usize) -> &mut [f64] {
        &mut self.values[channel * self.len..(channel + 1) * self.len]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.len)
    }

    /// Flat channel-major view; cell `(c, t)` lives at `c * L + t`.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.channels().map(<[f64]>::to_vec).collect()
    }

    /// Channel concatenation: a `1 × (d·L)` series where channel `c` occupies
    /// columns `[c·L, (c+1)·L)`.
    pub fn concat_channels(&self) -> TimeSeries {
        TimeSeries { channels: 1, len: self.values.len(), values: self.values.clone() }
    }

    pub fn squared_distance(&self, other: &TimeSeries) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl TryFrom<Vec<Vec<f64>>> for TimeSeries {
    type Error = DataError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(rows)
    }
}

impl From<TimeSeries> for Vec<Vec<f64>> {
    fn from(ts: TimeSeries) -> Self {
        ts.to_rows()
    }
}

/// Free-function form of [`TimeSeries::concat_channels`].
pub fn concat_channels(x: &TimeSeries) -> TimeSeries {
    x.concat_channels()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Train,
    Test,
}

/// Equal-length labelled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    instances: Vec<TimeSeries>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    pub role: Role,
}

impl LabeledDataset {
    pub fn new(
        instances: Vec<TimeSeries>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        role: Role,
    ) -> Result<Self, DataError> {
        if instances.len() != labels.len() {
            return Err(DataError::InvalidSeries(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DataError::InvalidSeries(format!(
                "label index {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some(first) = instances.first() {
            if instances.iter().any(|x| x.shape() != first.shape()) {
                return Err(DataError::InvalidSeries("instances differ in shape".into()));
            }
        }
        Ok(Self { instances, labels, class_names, role })
    }

    pub fn instances(&self) -> &[TimeSeries] {
        &self.instances
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// `(d, L)` of the instances, `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.instances.first().map(TimeSeries::shape)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TimeSeries, usize)> {
        self.instances.iter().zip(self.labels.iter().copied())
    }

    /// Keeps the first `n` instances.
    pub fn truncated(&self, n: usize) -> LabeledDataset {
        let n = n.min(self.len());
        LabeledDataset {
            instances: self.instances[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            class_names: self.class_names.clone(),
            role: self.role,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn compute_channel_stats(dataset: &LabeledDataset) -> Result<ChannelStats, DataError> {
    let (d, len) = dataset.shape().ok_or(DataError::EmptyData)?;
    let count = (dataset.len() * len) as f64;
    let mut mean = vec![0.0; d];
    for x in dataset.instances() {
        for (c, ch) in x.channels().enumerate() {
            mean[c] += ch.iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; d];
    for x in dataset.instances() {
        for (c, ch) in x.channels().enumerate() {
            var[c] += ch.iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>();
        }
    }
    let std = var.into_iter().map(|v| (v / count).sqrt()).collect();
    Ok(ChannelStats { mean, std })
}

/// Elementwise mean of all instances.
pub fn average_instance(dataset: &LabeledDataset) -> Result<TimeSeries, DataError> {
    mean_of(dataset.instances().iter()).ok_or(DataError::EmptyData)
}

pub(crate) fn mean_of<'a>(instances: impl Iterator<Item = &'a TimeSeries>) -> Option<TimeSeries> {
    let mut acc: Option<TimeSeries> = None;
    let mut n = 0usize;
    for x in instances {
        n += 1;
        match acc.as_mut() {
            None => acc = Some(x.clone()),
            Some(a) => a.values.iter_mut().zip(&x.values).for_each(|(s, v)| *s += v),
        }
    }
    let mut acc = acc?;
    acc.values.iter_mut().for_each(|v| *v /= n as f64);
    Some(acc)
}
