//! Signal dataset files.
//!
//! A dataset is a UTF-8 CSV with one signal per row. The header row names the
//! sample columns `x_0..x_{d-1}`, optionally followed by label columns
//! `label_0..label_{L-1}`. Values are written with 17 significant digits so
//! that a write/read cycle is bit-exact. A JSON sidecar next to the CSV
//! (`<basename>.meta.json`) records the sample rate, `d`, the signal count and
//! the label names.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{LabeledSignal, PosteriorEnsemble, Signal, UNIT_RATE_HZ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub sample_rate_hz: f64,
    pub d: usize,
    pub n_signals: usize,
    #[serde(default)]
    pub label_names: Vec<String>,
    /// Present on ensemble bundles: the observation the rows were sampled for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Vec<f64>>,
}

/// Rectangular collection of equal-length signals with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<Vec<u8>>>,
    sample_rate_hz: f64,
}

impl SignalDataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<Vec<u8>>>, sample_rate_hz: f64) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("no signals"));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::invalid("signals must have at least one sample"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::invalid(format!("row {i} has {} values, expected {d}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(Error::invalid("label row count differs from signal count"));
            }
            let l = labels[0].len();
            for (i, row) in labels.iter().enumerate() {
                if row.len() != l || row.iter().any(|&v| v > 1) {
                    return Err(Error::invalid(format!("label row {i} is malformed")));
                }
            }
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self {
            rows,
            labels,
            sample_rate_hz,
        })
    }

    pub fn from_signals(signals: &[Signal]) -> Result<Self> {
        let rate = signals.first().map_or(UNIT_RATE_HZ, Signal::sample_rate_hz);
        Self::new(signals.iter().map(|s| s.values().to_vec()).collect(), None, rate)
    }

    pub fn from_labeled(items: &[LabeledSignal]) -> Result<Self> {
        let rate = items.first().map_or(UNIT_RATE_HZ, |s| s.signal().sample_rate_hz());
        Self::new(
            items.iter().map(|s| s.signal().values().to_vec()).collect(),
            Some(items.iter().map(|s| s.labels().to_vec()).collect()),
            rate,
        )
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[Vec<u8>]> {
        self.labels.as_deref()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn d(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_labels(&self) -> usize {
        self.labels.as_ref().map_or(0, |l| l[0].len())
    }

    pub fn signals(&self) -> Result<Vec<Signal>> {
        self.rows
            .iter()
            .map(|r| Signal::new(r.clone(), self.sample_rate_hz))
            .collect()
    }

    pub fn labeled_signals(&self) -> Result<Vec<LabeledSignal>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has no labels"))?;
        self.rows
            .iter()
            .zip(labels)
            .map(|(r, l)| LabeledSignal::new(Signal::new(r.clone(), self.sample_rate_hz)?, l.clone()))
            .collect()
    }

    fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            sample_rate_hz: self.sample_rate_hz,
            d: self.d(),
            n_signals: self.len(),
            label_names: (0..self.n_labels()).map(|i| format!("label_{i}")).collect(),
            condition: None,
        }
    }
}

/// `data.csv` -> `data.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// Full round-trip decimal representation (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset(path: &Path, data: &SignalDataset) -> Result<()> {
    write_with_meta(path, data, data.meta())
}

fn write_with_meta(path: &Path, data: &SignalDataset, meta: DatasetMeta) -> Result<()> {
    let mut out = String::new();
    let mut header: Vec<String> = (0..data.d()).map(|i| format!("x_{i}")).collect();
    header.extend(meta.label_names.iter().cloned());
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in data.rows.iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        if let Some(labels) = &data.labels {
            cells.extend(labels[i].iter().map(|l| l.to_string()));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    fs::write(meta_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn parse_err(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: message.into(),
    }
}

/// Reads a dataset and its sidecar (if present). Row indices in errors are
/// zero-based over data rows, excluding the header.
pub fn read_dataset(path: &Path) -> Result<SignalDataset> {
    read_with_meta(path).map(|(d, _)| d)
}

fn read_with_meta(path: &Path) -> Result<(SignalDataset, Option<DatasetMeta>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::at(path, e))?;
    let meta: Option<DatasetMeta> = match fs::read_to_string(meta_path(path)) {
        Ok(s) => Some(serde_json::from_str(&s)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let first = match records.next() {
        None => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "no signals".into(),
            })
        }
        Some(r) => r?,
    };

    let has_header = first.get(0).is_some_and(|c| c.parse::<f64>().is_err());
    let (n_label_cols, pending) = if has_header {
        let n = first.iter().filter(|c| c.starts_with("label_")).count();
        let n_samples = first.len() - n;
        if first.iter().skip(n_samples).any(|c| !c.starts_with("label_")) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "label columns must follow all sample columns".into(),
            });
        }
        (n, None)
    } else {
        (0, Some(first))
    };

    if let Some(m) = &meta {
        if m.label_names.len() != n_label_cols {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "sidecar declares {} label columns, file has {n_label_cols}",
                    m.label_names.len()
                ),
            });
        }
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, rec) in pending.into_iter().map(Ok).chain(records).enumerate() {
        let rec = rec?;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(parse_err(
                path,
                i,
                rec.len(),
                format!("expected {expected} cells, found {}", rec.len()),
            ));
        }
        let n_samples = rec.len() - n_label_cols;
        if n_samples == 0 {
            return Err(parse_err(path, i, 0, "row has no sample values"));
        }
        let mut row = Vec::with_capacity(n_samples);
        for (j, cell) in rec.iter().take(n_samples).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, i, j, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, i, j, "value is not finite"));
            }
            row.push(v);
        }
        let mut lab = Vec::with_capacity(n_label_cols);
        for (j, cell) in rec.iter().enumerate().skip(n_samples) {
            match cell {
                "0" => lab.push(0u8),
                "1" => lab.push(1u8),
                _ => return Err(parse_err(path, i, j, format!("label must be 0 or 1, got {cell:?}"))),
            }
        }
        rows.push(row);
        labels.push(lab);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no signals".into(),
        });
    }
    if let Some(m) = &meta {
        if m.d != rows[0].len() || m.n_signals != rows.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "sidecar says {} signals of length {}, file has {} of length {}",
                    m.n_signals,
                    m.d,
                    rows.len(),
                    rows[0].len()
                ),
            });
        }
    }
    let rate = meta.as_ref().map_or(UNIT_RATE_HZ, |m| m.sample_rate_hz);
    let labels = (n_label_cols > 0).then_some(labels);
    let ds = SignalDataset::new(rows, labels, rate).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((ds, meta))
}

/// Writes an ensemble as a dataset whose sidecar also carries the condition.
pub fn write_ensemble(path: &Path, ensemble: &PosteriorEnsemble) -> Result<()> {
    let data = SignalDataset::from_signals(ensemble.samples())?;
    let mut meta = data.meta();
    meta.condition = Some(ensemble.condition().values().to_vec());
    write_with_meta(path, &data, meta)
}

pub fn read_ensemble(path: &Path) -> Result<PosteriorEnsemble> {
    let (data, meta) = read_with_meta(path)?;
    let condition = meta.and_then(|m| m.condition).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        message: "ensemble sidecar has no condition".into(),
    })?;
    let condition = Signal::from_vec(condition)?;
    PosteriorEnsemble::new(condition, data.signals()?)
}
