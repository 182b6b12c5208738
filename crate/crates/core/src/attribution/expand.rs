use serde::{Deserialize, Serialize};

use super::{AttributionError, SegmentAttribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    Replicated,
    Normalized,
}

impl ExpansionMode {
    pub const ALL: [ExpansionMode; 2] = [ExpansionMode::Replicated, ExpansionMode::Normalized];

    pub fn name(self) -> &'static str {
        match self {
            Self::Replicated => "replicated",
            Self::Normalized => "normalized",
        }
    }

    pub fn expand(self, attr: &SegmentAttribution) -> TimepointAttribution {
        match self {
            Self::Replicated => replicate_to_timepoints(attr),
            Self::Normalized => normalize_to_timepoints(attr),
        }
    }
}

impl std::str::FromStr for ExpansionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replicated" | "replicate" => Ok(Self::Replicated),
            "normalized" | "normalised" | "normalize" => Ok(Self::Normalized),
            other => Err(format!("unknown normalization {other:?} (expected replicated|normalized)")),
        }
    }
}

/// Per-timepoint attribution, stored channel-major like [`crate::TimeSeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimepointAttribution {
    channels: usize,
    len: usize,
    values: Vec<f64>,
    pub mode: ExpansionMode,
    /// The segment attribution this was expanded from, if any.
    pub source: Option<SegmentAttribution>,
}

impl TimepointAttribution {
    /// Wraps an arbitrary attribution matrix that has no segment-level source.
    pub fn from_values(
        channels: usize,
        len: usize,
        values: Vec<f64>,
        mode: ExpansionMode,
    ) -> Result<Self, AttributionError> {
        if channels * len != values.len() || values.is_empty() {
            return Err(AttributionError::ShapeMismatch(format!(
                "{} values for a {channels}x{len} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AttributionError::InvalidFeature("attribution values must be finite".into()));
        }
        Ok(Self { channels, len, values, mode, source: None })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, mode: ExpansionMode) -> Result<Self, AttributionError> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(AttributionError::ShapeMismatch("ragged attribution rows".into()));
        }
        let channels = rows.len();
        Self::from_values(channels, len, rows.concat(), mode)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.len)
    }

    /// Flat channel-major values; cell `(c, t)` sits at `c·L + t`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, channel: usize, t: usize) -> f64 {
        self.values[channel * self.len + t]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.len..(c + 1) * self.len]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.len).map(<[f64]>::to_vec).collect()
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

fn expand(attr: &SegmentAttribution, mode: ExpansionMode) -> TimepointAttribution {
    let seg = &attr.segmentation;
    let len = seg.len();
    let mut values = vec![0.0; seg.n_channels() * len];
    for (f, &phi) in seg.features().iter().zip(&attr.values) {
        let v = match mode {
            ExpansionMode::Replicated => phi,
            ExpansionMode::Normalized => phi / f.range.len() as f64,
        };
        values[f.channel * len + f.range.start..f.channel * len + f.range.end].fill(v);
    }
    TimepointAttribution { channels: seg.n_channels(), len, values, mode, source: Some(attr.clone()) }
}

/// Every timepoint of segment `S` carries `φ_S`.
pub fn replicate_to_timepoints(attr: &SegmentAttribution) -> TimepointAttribution {
    expand(attr, ExpansionMode::Replicated)
}

/// Every timepoint of segment `S` carries `φ_S / |S|`, so each segment sums to `φ_S`.
pub fn normalize_to_timepoints(attr: &SegmentAttribution) -> TimepointAttribution {
    expand(attr, ExpansionMode::Normalized)
}
