//! `.ts` (equal-length, fully observed subset) and header-less CSV ingestion.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{DataError, LabeledDataset, Role, TimeSeries};

#[derive(Default)]
struct Header {
    problem_name: Option<String>,
    univariate: Option<bool>,
    dimensions: Option<usize>,
    series_length: Option<usize>,
    class_labels: Option<Vec<String>>,
}

fn header_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::MalformedHeader { line, message: message.into() }
}

fn unsupported(line: usize, message: impl Into<String>) -> DataError {
    DataError::UnsupportedFeature { line, message: message.into() }
}

fn row_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::DataRowMismatch { line, message: message.into() }
}

fn parse_bool(line: usize, directive: &str, arg: Option<&str>) -> Result<bool, DataError> {
    match arg.map(str::to_ascii_lowercase).as_deref() {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(header_err(line, format!("{directive} expects true|false"))),
    }
}

fn parse_count(line: usize, directive: &str, arg: Option<&str>) -> Result<usize, DataError> {
    arg.and_then(|a| a.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| header_err(line, format!("{directive} expects a positive integer")))
}

/// Parses the equal-length, timestamp-free, fully observed subset of the `.ts` format.
///
/// Directive names are case-insensitive. `@missing false` is accepted because archive
/// files routinely carry it; any directive announcing timestamps, unequal lengths or
/// missing values is rejected as unsupported.
pub fn parse_ts_file(text: &str) -> Result<LabeledDataset, DataError> {
    let mut header = Header::default();
    let mut seen = HashSet::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut data_started = false;

    for (no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(header_err(no, "expected a directive before @data"));
        }
        let mut parts = line.split_whitespace();
        let directive = parts.next().unwrap_or_default().to_ascii_lowercase();
        if !seen.insert(directive.clone()) {
            return Err(header_err(no, format!("duplicate directive {directive}")));
        }
        let arg = parts.next();
        match directive.as_str() {
            "@problemname" => {
                header.problem_name =
                    Some(arg.ok_or_else(|| header_err(no, "@problemName expects a name"))?.into());
            }
            "@timestamps" => {
                if parse_bool(no, "@timeStamps", arg)? {
                    return Err(unsupported(no, "timestamped series"));
                }
            }
            "@missing" => {
                if parse_bool(no, "@missing", arg)? {
                    return Err(unsupported(no, "missing values"));
                }
            }
            "@univariate" => header.univariate = Some(parse_bool(no, "@univariate", arg)?),
            "@dimensions" | "@dimension" => {
                header.dimensions = Some(parse_count(no, "@dimensions", arg)?);
            }
            "@equallength" => {
                if !parse_bool(no, "@equalLength", arg)? {
                    return Err(unsupported(no, "unequal-length series"));
                }
            }
            "@serieslength" => {
                header.series_length = Some(parse_count(no, "@seriesLength", arg)?);
            }
            "@classlabel" => {
                if !parse_bool(no, "@classLabel", arg)? {
                    return Err(unsupported(no, "unlabelled data"));
                }
                let labels: Vec<String> = parts.map(str::to_string).collect();
                if labels.is_empty() {
                    return Err(header_err(no, "@classLabel true lists no labels"));
                }
                let unique: HashSet<&String> = labels.iter().collect();
                if unique.len() != labels.len() {
                    return Err(header_err(no, "@classLabel repeats a label"));
                }
                header.class_labels = Some(labels);
            }
            "@data" => {
                data_started = true;
                break;
            }
            other => return Err(header_err(no, format!("unknown directive {other}"))),
        }
    }

    let end = text.lines().count();
    if !data_started {
        return Err(header_err(end, "missing @data"));
    }
    let univariate =
        header.univariate.ok_or_else(|| header_err(end, "missing @univariate"))?;
    let channels = match (univariate, header.dimensions) {
        (true, None) | (true, Some(1)) => 1,
        (true, Some(_)) => return Err(header_err(end, "@univariate true with @dimensions > 1")),
        (false, Some(d)) => d,
        (false, None) => return Err(header_err(end, "@dimensions required for multivariate data")),
    };
    let len = header.series_length.ok_or_else(|| header_err(end, "missing @seriesLength"))?;
    let class_names =
        header.class_labels.ok_or_else(|| header_err(end, "missing @classLabel"))?;

    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(':').collect();
        if fields.len() != channels + 1 {
            return Err(row_err(
                no,
                format!("expected {channels} channels and a label, got {} fields", fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(channels * len);
        for field in &fields[..channels] {
            let before = values.len();
            for tok in field.split(',') {
                let tok = tok.trim();
                if tok == "?" || tok.eq_ignore_ascii_case("nan") {
                    return Err(unsupported(no, "missing value"));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| DataError::NonNumericValue { line: no, value: tok.into() })?;
                if !v.is_finite() {
                    return Err(DataError::NonNumericValue { line: no, value: tok.into() });
                }
                values.push(v);
            }
            if values.len() - before != len {
                return Err(row_err(
                    no,
                    format!("channel has {} values, expected {len}", values.len() - before),
                ));
            }
        }
        let label = fields[channels].trim();
        let idx = class_names
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| row_err(no, format!("unknown class label {label:?}")))?;
        instances.push(TimeSeries::new(channels, len, values)?);
        labels.push(idx);
    }
    if instances.is_empty() {
        return Err(DataError::EmptyData);
    }
    LabeledDataset::new(instances, labels, class_names, Role::Train)
}

/// Serialises a dataset into the same `.ts` subset [`parse_ts_file`] accepts.
pub fn write_ts_file(dataset: &LabeledDataset, problem_name: &str) -> String {
    let (d, len) = dataset.shape().unwrap_or((1, 0));
    let mut out = String::new();
    let _ = writeln!(out, "@problemName {problem_name}");
    out.push_str("@timeStamps false\n@missing false\n");
    if d == 1 {
        out.push_str("@univariate true\n");
    } else {
        let _ = writeln!(out, "@univariate false\n@dimensions {d}");
    }
    let _ = writeln!(out, "@equalLength true\n@seriesLength {len}");
    let _ = writeln!(out, "@classLabel true {}", dataset.class_names().join(" "));
    out.push_str("@data\n");
    for (x, label) in dataset.iter() {
        for ch in x.channels() {
            let joined: Vec<String> = ch.iter().map(f64::to_string).collect();
            out.push_str(&joined.join(","));
            out.push(':');
        }
        out.push_str(&dataset.class_names()[label]);
        out.push('\n');
    }
    out
}

/// Parses header-less CSV: each row holds `d·L` channel-major values followed by a label.
/// Class indices follow first appearance order.
pub fn parse_csv(text: &str, channels: usize) -> Result<LabeledDataset, DataError> {
    if channels == 0 {
        return Err(DataError::NonDivisibleColumns { columns: 0, channels });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut class_names: Vec<String> = Vec::new();
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| row_err(line, e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let columns = record.len().saturating_sub(1);
        if columns == 0 || columns % channels != 0 {
            return Err(DataError::NonDivisibleColumns { columns, channels });
        }
        match width {
            None => width = Some(columns),
            Some(w) if w != columns => {
                return Err(row_err(line, format!("{columns} value columns, expected {w}")));
            }
            Some(_) => {}
        }
        let values = record
            .iter()
            .take(columns)
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::NonNumericValue { line, value: f.into() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let label = record[columns].trim().to_string();
        let idx = match class_names.iter().position(|c| *c == label) {
            Some(idx) => idx,
            None => {
                class_names.push(label);
                class_names.len() - 1
            }
        };
        instances.push(TimeSeries::new(channels, columns / channels, values)?);
        labels.push(idx);
    }
    if instances.is_empty() {
        return Err(DataError::EmptyData);
    }
    LabeledDataset::new(instances, labels, class_names, Role::Train)
}

pub fn write_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    for (x, label) in dataset.iter() {
        for v in x.as_slice() {
            let _ = write!(out, "{v},");
        }
        out.push_str(&dataset.class_names()[label]);
        out.push('\n');
    }
    out
}
