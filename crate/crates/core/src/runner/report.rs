use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{ExperimentConfig, ResultRecord, RunnerError};
use crate::segmentation::{normalized_entropy, segment};

/// A column records can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Dataset,
    Classifier,
    Segmentation,
    Background,
    Normalization,
    Perturbation,
    Instance,
}

impl Factor {
    pub const DEFAULT_GROUPING: [Factor; 2] = [Factor::Dataset, Factor::Classifier];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dataset => "dataset",
            Self::Classifier => "classifier",
            Self::Segmentation => "segmentation",
            Self::Background => "background",
            Self::Normalization => "normalization",
            Self::Perturbation => "perturbation",
            Self::Instance => "instance",
        }
    }
}

impl std::str::FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Self::Dataset,
            Self::Classifier,
            Self::Segmentation,
            Self::Background,
            Self::Normalization,
            Self::Perturbation,
            Self::Instance,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| format!("unknown factor {s:?}"))
    }
}

/// Mean and population standard deviation of one metric within one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRecord {
    /// Values of the grouping factors, in grouping order.
    pub group: Vec<String>,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    /// Skip records that fell into this group and were excluded.
    pub skipped: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups by `group_by` plus metric. Skips are counted but excluded from the statistics.
pub fn aggregate(records: &[ResultRecord], group_by: &[Factor]) -> Result<Vec<AggregateRecord>, RunnerError> {
    let mut groups: BTreeMap<(Vec<String>, String), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let key = (group_by.iter().map(|&f| r.factor(f)).collect(), r.metric.clone());
        let entry = groups.entry(key).or_default();
        match r.value {
            Some(v) if !r.is_skip() => entry.0.push(v),
            _ => entry.1 += 1,
        }
    }
    let out: Vec<AggregateRecord> = groups
        .into_iter()
        .filter(|(_, (values, _))| !values.is_empty())
        .map(|((group, metric), (mut values, skipped))| {
            // sorting makes the sums independent of record order
            values.sort_by(f64::total_cmp);
            let (mean, std) = mean_std(&values);
            AggregateRecord { group, metric, mean, std, count: values.len(), skipped }
        })
        .collect();
    if out.is_empty() {
        return Err(RunnerError::EmptyAfterFiltering);
    }
    Ok(out)
}

/// Per `(dataset, segmentation)` and metric: statistics of `normalized − replicated`,
/// paired on instance and every other factor.
pub fn normalization_delta_report(records: &[ResultRecord]) -> Result<Vec<AggregateRecord>, RunnerError> {
    type PairKey = (String, String, String, String, String, String, usize);
    let mut pairs: BTreeMap<PairKey, [Option<&ResultRecord>; 2]> = BTreeMap::new();
    for r in records {
        let arm = match r.normalization.as_str() {
            "replicated" => 0,
            "normalized" => 1,
            other => return Err(RunnerError::Csv(format!("unknown normalization {other:?}"))),
        };
        let key = (
            r.dataset.clone(),
            r.segmentation.clone(),
            r.metric.clone(),
            r.classifier.clone(),
            r.background.clone(),
            r.perturbation.clone(),
            r.instance,
        );
        let slot = &mut pairs.entry(key).or_default()[arm];
        if slot.is_some() {
            return Err(RunnerError::Csv(format!("duplicate record for {} instance {}", r.normalization, r.instance)));
        }
        *slot = Some(r);
    }
    let mut deltas = Vec::with_capacity(pairs.len());
    for (key, arms) in &pairs {
        match arms {
            [Some(rep), Some(norm)] => {
                let delta = match (rep.value, norm.value) {
                    (Some(a), Some(b)) if !rep.is_skip() && !norm.is_skip() => Some(b - a),
                    _ => None,
                };
                deltas.push(ResultRecord {
                    dataset: key.0.clone(),
                    segmentation: key.1.clone(),
                    metric: key.2.clone(),
                    classifier: key.3.clone(),
                    background: key.4.clone(),
                    perturbation: key.5.clone(),
                    instance: key.6,
                    normalization: "delta".into(),
                    value: delta,
                    skip_reason: delta.is_none().then(|| "skipped_arm".into()),
                });
            }
            _ => {
                let missing = if arms[0].is_none() { "replicated" } else { "normalized" };
                return Err(RunnerError::UnpairedRecords(format!(
                    "{}/{}/{} {} instance {} lacks its {missing} arm",
                    key.0, key.3, key.1, key.2, key.6
                )));
            }
        }
    }
    aggregate(&deltas, &[Factor::Dataset, Factor::Segmentation])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub dataset: String,
    pub segmentation: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub failed: usize,
}

/// Normalised segmentation entropy per dataset and segmentation method over the evaluated
/// test instances.
pub fn entropy_report(cfg: &ExperimentConfig) -> Result<Vec<EntropyRow>, RunnerError> {
    let mut rows = Vec::new();
    for dataset in cfg.datasets.as_slice() {
        let name = dataset.display_name();
        let (_, test) = dataset.load(&cfg.base_dir)?;
        let test = test.truncated(cfg.max_instances);
        for seg_cfg in &cfg.segmentations {
            let mut values = Vec::new();
            let mut failed = 0;
            for x in test.instances() {
                match segment(x, seg_cfg) {
                    Ok(s) => values.push(normalized_entropy(&s)),
                    Err(e) => {
                        log::warn!("{name}/{}: {e}", seg_cfg.label());
                        failed += 1;
                    }
                }
            }
            let (mean, std) = if values.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&values) };
            rows.push(EntropyRow { dataset: name.clone(), segmentation: seg_cfg.label(), mean, std, count: values.len(), failed });
        }
    }
    Ok(rows)
}

pub fn write_aggregates<W: Write>(group_by: &[Factor], rows: &[AggregateRecord], out: W) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| RunnerError::Io(e.to_string());
    let mut header: Vec<&str> = group_by.iter().map(|f| f.name()).collect();
    header.extend(["metric", "mean", "std", "count", "skipped"]);
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut row = r.group.clone();
        row.extend([r.metric.clone(), r.mean.to_string(), r.std.to_string(), r.count.to_string(), r.skipped.to_string()]);
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| RunnerError::Io(e.to_string()))
}

pub fn write_entropy_rows<W: Write>(rows: &[EntropyRow], out: W) -> Result<(), RunnerError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| RunnerError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| RunnerError::Io(e.to_string()))
}
