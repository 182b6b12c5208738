//! Experiment grids over datasets, classifiers and explanation factors, with CSV records
//! and aggregate reports.

mod config;
mod report;
mod run;

pub use config::{align_classes, load_dataset_file, DatasetConfig, DatasetList, ExperimentConfig, MetricKind, SyntheticConfig};
pub use report::{
    aggregate, entropy_report, normalization_delta_report, write_aggregates, write_entropy_rows, AggregateRecord,
    EntropyRow, Factor,
};
pub use run::{run_experiment, write_run_output, RunOutput};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunnerError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot load dataset {path}: {source}")]
    DatasetLoad { path: String, source: DataError },
    #[error("{0}")]
    Io(String),
    #[error("no usable records remain after filtering skips")]
    EmptyAfterFiltering,
    #[error("unpaired records: {0}")]
    UnpairedRecords(String),
    #[error("malformed records file: {0}")]
    Csv(String),
}

/// Column names of the records file, in order.
pub const RECORD_HEADER: [&str; 10] = [
    "dataset",
    "classifier",
    "segmentation",
    "background",
    "normalization",
    "perturbation",
    "metric",
    "instance",
    "value",
    "skip_reason",
];

/// One metric value (or skip) for one grid cell and test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub classifier: String,
    pub segmentation: String,
    pub background: String,
    pub normalization: String,
    /// `-` for metrics that do not perturb.
    pub perturbation: String,
    pub metric: String,
    pub instance: usize,
    pub value: Option<f64>,
    pub skip_reason: Option<String>,
}

impl ResultRecord {
    pub fn is_skip(&self) -> bool {
        self.skip_reason.is_some()
    }

    pub fn factor(&self, f: Factor) -> String {
        match f {
            Factor::Dataset => self.dataset.clone(),
            Factor::Classifier => self.classifier.clone(),
            Factor::Segmentation => self.segmentation.clone(),
            Factor::Background => self.background.clone(),
            Factor::Normalization => self.normalization.clone(),
            Factor::Perturbation => self.perturbation.clone(),
            Factor::Instance => self.instance.to_string(),
        }
    }

    /// The canonical ordering key.
    fn sort_key(&self) -> (&str, &str, &str, &str, &str, &str, &str, usize) {
        (
            &self.dataset,
            &self.classifier,
            &self.segmentation,
            &self.background,
            &self.normalization,
            &self.perturbation,
            &self.metric,
            self.instance,
        )
    }
}

pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_records<W: Write>(records: &[ResultRecord], out: W) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| RunnerError::Io(e.to_string());
    w.write_record(RECORD_HEADER).map_err(io)?;
    for r in records {
        let instance = r.instance.to_string();
        let value = r.value.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.dataset.as_str(),
            &r.classifier,
            &r.segmentation,
            &r.background,
            &r.normalization,
            &r.perturbation,
            &r.metric,
            &instance,
            &value,
            r.skip_reason.as_deref().unwrap_or(""),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| RunnerError::Io(e.to_string()))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ResultRecord>, RunnerError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| RunnerError::Csv(e.to_string()))?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(RunnerError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| RunnerError::Csv(e.to_string()))?;
        let line = i + 2;
        let instance =
            row[7].parse().map_err(|_| RunnerError::Csv(format!("line {line}: bad instance {:?}", &row[7])))?;
        let value = match &row[8] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| RunnerError::Csv(format!("line {line}: bad value {v:?}")))?),
        };
        let skip_reason = (!row[9].is_empty()).then(|| row[9].to_string());
        if value.is_none() == skip_reason.is_none() {
            return Err(RunnerError::Csv(format!("line {line}: need exactly one of value and skip_reason")));
        }
        out.push(ResultRecord {
            dataset: row[0].into(),
            classifier: row[1].into(),
            segmentation: row[2].into(),
            background: row[3].into(),
            normalization: row[4].into(),
            perturbation: row[5].into(),
            metric: row[6].into(),
            instance,
            value,
            skip_reason,
        });
    }
    Ok(out)
}
