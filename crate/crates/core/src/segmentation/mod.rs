//! Segment decompositions of a time series.
//!
//! Every method returns exactly `n` segments per channel. `binseg`, `bottomup`,
//! `kernelcpd`, `infogain` and `greedy_gaussian` pool their cost over channels and
//! return shared boundaries; `clasp` and `nnsegment` work channel by channel.

mod changepoint;
mod clasp;
mod gaussian;
mod infogain;
mod nnsegment;

pub use changepoint::{l1_cost, scatter_cost, segment_binseg, segment_bottomup, segment_kernelcpd};
pub use clasp::{clasp_score_profile, segment_clasp};
pub use gaussian::{gaussian_log_likelihood, segment_greedy_gaussian};
pub use infogain::{information_gain, segment_infogain, InfoGainOutcome};
pub use nnsegment::segment_nn;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::TimeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("invalid segment count {n} for a series of length {len}")]
    InvalidCount { n: usize, len: usize },
    #[error("series of length {len} is too short: {reason}")]
    SeriesTooShort { len: usize, reason: String },
    #[error("signal has zero range on every channel")]
    DegenerateSignal,
    #[error("invalid boundaries: {0}")]
    InvalidBoundaries(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown segmentation method {0:?}")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMode {
    Shared,
    PerChannel,
}

/// Ordered boundary lists, one per channel: `b_0 = 0 < b_1 < ... < b_m = L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSegmentation", into = "RawSegmentation")]
pub struct Segmentation {
    mode: SegmentationMode,
    boundaries: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawSegmentation {
    mode: SegmentationMode,
    boundaries: Vec<Vec<usize>>,
}

impl TryFrom<RawSegmentation> for Segmentation {
    type Error = SegmentationError;

    fn try_from(raw: RawSegmentation) -> Result<Self, Self::Error> {
        Segmentation::new(raw.mode, raw.boundaries)
    }
}

impl From<Segmentation> for RawSegmentation {
    fn from(s: Segmentation) -> Self {
        RawSegmentation { mode: s.mode, boundaries: s.boundaries }
    }
}

/// One SHAP feature: a segment on a single channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub channel: usize,
    pub segment: usize,
    pub range: Range<usize>,
}

impl Segmentation {
    pub fn new(mode: SegmentationMode, boundaries: Vec<Vec<usize>>) -> Result<Self, SegmentationError> {
        let first = boundaries
            .first()
            .ok_or_else(|| SegmentationError::InvalidBoundaries("no channels".into()))?;
        let len = *first.last().unwrap_or(&0);
        for b in &boundaries {
            if b.len() < 2 || b[0] != 0 || *b.last().unwrap() != len || len == 0 {
                return Err(SegmentationError::InvalidBoundaries(format!(
                    "each channel must run from 0 to {len} with at least one segment: {b:?}"
                )));
            }
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SegmentationError::InvalidBoundaries(format!(
                    "boundaries must be strictly increasing: {b:?}"
                )));
            }
        }
        if mode == SegmentationMode::Shared && boundaries.iter().any(|b| b != first) {
            return Err(SegmentationError::InvalidBoundaries(
                "shared mode requires identical boundaries on every channel".into(),
            ));
        }
        Ok(Self { mode, boundaries })
    }

    /// The same boundary list repeated for `channels` channels.
    pub fn shared(channels: usize, boundaries: Vec<usize>) -> Result<Self, SegmentationError> {
        Self::new(SegmentationMode::Shared, vec![boundaries; channels.max(1)])
    }

    pub fn mode(&self) -> SegmentationMode {
        self.mode
    }

    pub fn n_channels(&self) -> usize {
        self.boundaries.len()
    }

    pub fn len(&self) -> usize {
        *self.boundaries[0].last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundaries(&self) -> &[Vec<usize>] {
        &self.boundaries
    }

    pub fn channel_boundaries(&self, channel: usize) -> &[usize] {
        &self.boundaries[channel]
    }

    pub fn n_segments(&self, channel: usize) -> usize {
        self.boundaries[channel].len() - 1
    }

    pub fn segments(&self, channel: usize) -> impl Iterator<Item = Range<usize>> + '_ {
        self.boundaries[channel].windows(2).map(|w| w[0]..w[1])
    }

    pub fn segment_lengths(&self, channel: usize) -> Vec<usize> {
        self.segments(channel).map(|r| r.len()).collect()
    }

    /// Total feature count `Σ_c n_segments(c)`.
    pub fn n_features(&self) -> usize {
        self.boundaries.iter().map(|b| b.len() - 1).sum()
    }

    /// Features enumerated channel-major, segments in time order.
    pub fn features(&self) -> Vec<Feature> {
        (0..self.n_channels())
            .flat_map(|channel| {
                self.segments(channel).enumerate().map(move |(segment, range)| Feature {
                    channel,
                    segment,
                    range,
                })
            })
            .collect()
    }

    /// Feature index of every cell, channel-major `d × L`.
    pub fn cell_features(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_channels() * self.len());
        for (j, f) in self.features().into_iter().enumerate() {
            out.extend(std::iter::repeat_n(j, f.range.len()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMethod {
    Equal,
    #[serde(rename = "binseg")]
    BinSeg,
    #[serde(rename = "bottomup")]
    BottomUp,
    #[serde(rename = "kernelcpd")]
    KernelCpd,
    #[serde(rename = "infogain")]
    InfoGain,
    GreedyGaussian,
    #[serde(rename = "nnsegment")]
    NnSegment,
    Clasp,
}

impl SegmentationMethod {
    pub const ALL: [SegmentationMethod; 8] = [
        Self::Equal,
        Self::BinSeg,
        Self::BottomUp,
        Self::KernelCpd,
        Self::InfoGain,
        Self::GreedyGaussian,
        Self::NnSegment,
        Self::Clasp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::BinSeg => "binseg",
            Self::BottomUp => "bottomup",
            Self::KernelCpd => "kernelcpd",
            Self::InfoGain => "infogain",
            Self::GreedyGaussian => "greedy_gaussian",
            Self::NnSegment => "nnsegment",
            Self::Clasp => "clasp",
        }
    }
}

impl fmt::Display for SegmentationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SegmentationMethod {
    type Err = SegmentationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .or(match key.as_str() {
                "gg" | "greedygaussian" => Some(Self::GreedyGaussian),
                "ig" | "information_gain" => Some(Self::InfoGain),
                "nn" | "nn_segment" => Some(Self::NnSegment),
                _ => None,
            })
            .ok_or_else(|| SegmentationError::UnknownMethod(s.to_string()))
    }
}

fn default_n_segments() -> usize {
    10
}
fn default_min_size() -> usize {
    2
}
fn default_initial_width() -> usize {
    2
}
fn default_period() -> usize {
    4
}
fn default_reg() -> f64 {
    1e-4
}

/// Method plus hyperparameters. Unused parameters are ignored by methods that do not
/// need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    pub method: SegmentationMethod,
    #[serde(default = "default_n_segments")]
    pub n_segments: usize,
    /// Minimum segment length for binseg, kernelcpd, infogain and greedy_gaussian.
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    /// Over-split width for bottomup.
    #[serde(default = "default_initial_width")]
    pub initial_width: usize,
    /// ClaSP sliding-window length.
    #[serde(default = "default_period")]
    pub period: usize,
    /// NNSegment window; derived from `L` and `n` when absent.
    #[serde(default)]
    pub window: Option<usize>,
    /// Variance regulariser for greedy_gaussian.
    #[serde(default = "default_reg")]
    pub reg: f64,
    /// Name used in reports; defaults to the method name.
    #[serde(default)]
    pub label: Option<String>,
}

impl SegmentationConfig {
    pub fn new(method: SegmentationMethod, n_segments: usize) -> Self {
        Self {
            method,
            n_segments,
            min_size: default_min_size(),
            initial_width: default_initial_width(),
            period: default_period(),
            window: None,
            reg: default_reg(),
            label: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.name().to_string())
    }

    /// NNSegment window used for a series of length `len`.
    pub fn nn_window(&self, len: usize) -> usize {
        self.window
            .unwrap_or_else(|| (len / (2 * self.n_segments.max(1))).clamp(2, (len / 3).max(2)))
    }
}

/// Runs the configured method on `x`.
pub fn segment(x: &TimeSeries, cfg: &SegmentationConfig) -> Result<Segmentation, SegmentationError> {
    let n = cfg.n_segments;
    match cfg.method {
        SegmentationMethod::Equal => {
            let b = equal_boundaries(x.len(), n)?;
            Segmentation::shared(x.n_channels(), b)
        }
        SegmentationMethod::BinSeg => segment_binseg(x, n, cfg.min_size),
        SegmentationMethod::BottomUp => segment_bottomup(x, n, cfg.initial_width),
        SegmentationMethod::KernelCpd => segment_kernelcpd(x, n, cfg.min_size),
        SegmentationMethod::InfoGain => {
            let outcome = segment_infogain(x, n, cfg.min_size)?;
            if outcome.degenerate {
                log::warn!("infogain: degenerate signal, fell back to equal split");
            }
            Ok(outcome.segmentation)
        }
        SegmentationMethod::GreedyGaussian => segment_greedy_gaussian(x, n, cfg.reg, cfg.min_size),
        SegmentationMethod::NnSegment => segment_nn(x, n, cfg.nn_window(x.len())),
        SegmentationMethod::Clasp => segment_clasp(x, n, cfg.period),
    }
}

pub(crate) fn check_count(n: usize, len: usize) -> Result<(), SegmentationError> {
    if n == 0 || n > len {
        Err(SegmentationError::InvalidCount { n, len })
    } else {
        Ok(())
    }
}

/// `[0, b_1, ..., L]` for the equal-width split: the first `L mod n` segments get
/// `⌈L/n⌉` points, the rest `⌊L/n⌋`.
pub fn equal_boundaries(len: usize, n: usize) -> Result<Vec<usize>, SegmentationError> {
    check_count(n, len)?;
    let (q, r) = (len / n, len % n);
    let mut b = Vec::with_capacity(n + 1);
    let mut pos = 0;
    b.push(0);
    for i in 0..n {
        pos += q + usize::from(i < r);
        b.push(pos);
    }
    Ok(b)
}

/// Shared equal-width segmentation of a univariate length.
pub fn segment_equal(len: usize, n: usize) -> Result<Segmentation, SegmentationError> {
    Segmentation::shared(1, equal_boundaries(len, n)?)
}

/// Completes a set of interior change points to exactly `n - 1` by adding equal-split
/// points, then any unused index, in ascending order. Returns full boundaries.
pub(crate) fn pad_boundaries(len: usize, n: usize, mut interior: Vec<usize>) -> Vec<usize> {
    interior.retain(|&p| p > 0 && p < len);
    interior.sort_unstable();
    interior.dedup();
    interior.truncate(n.saturating_sub(1));
    let candidates = equal_boundaries(len, n)
        .unwrap_or_default()
        .into_iter()
        .chain(1..len);
    for p in candidates {
        if interior.len() + 1 >= n {
            break;
        }
        if p > 0 && p < len && interior.binary_search(&p).is_err() {
            let at = interior.partition_point(|&q| q < p);
            interior.insert(at, p);
        }
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(0);
    out.extend(interior);
    out.push(len);
    out
}

/// Mean over channels of the segment-length entropy divided by `ln n` (1 when `n = 1`).
pub fn normalized_entropy(seg: &Segmentation) -> f64 {
    let len = seg.len() as f64;
    let per_channel = (0..seg.n_channels()).map(|c| {
        let n = seg.n_segments(c);
        let lengths = seg.segment_lengths(c);
        // uniform lengths are exactly maximal; skip the rounding of the log sum
        if n < 2 || lengths.iter().all(|&l| l == lengths[0]) {
            return 1.0;
        }
        let h: f64 = lengths
            .into_iter()
            .map(|l| {
                let p = l as f64 / len;
                -p * p.ln()
            })
            .sum();
        (h / (n as f64).ln()).clamp(0.0, 1.0)
    });
    per_channel.sum::<f64>() / seg.n_channels() as f64
}
