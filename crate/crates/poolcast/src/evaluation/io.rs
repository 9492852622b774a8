//! File formats: delimited training data, delimited predictions, and the
//! JSON model document.
//!
//! Training data files are UTF-8 delimited text with a header row, a
//! required `y` column in {0,1}, expert columns prefixed `p_`, and optional
//! companion columns prefixed `oracle_`. Decimal separator is `.`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::LinkFamily;
use crate::ensemble::FittedAggregator;
use crate::fitting::{GridPoint, TrainingSet};
use crate::{Error, Result};

fn parse_float(field: &str, line: usize, column: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!("line {line}: column {column:?} has non-numeric value {field:?}"))
    })
}

/// Named companion columns (`oracle_*`) carried alongside a training set.
pub type CompanionColumns = Vec<(String, Vec<f64>)>;

/// Read a training data file; returns the data set plus any `oracle_`
/// companion columns.
pub fn read_training_data<P: AsRef<Path>>(path: P) -> Result<(TrainingSet, CompanionColumns)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
    let headers: Vec<String> =
        reader.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(String::from).collect();

    let mut y_col = None;
    let mut expert_cols = Vec::new();
    let mut oracle_cols = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if name == "y" {
            y_col = Some(i);
        } else if name.starts_with("p_") {
            expert_cols.push((i, name.clone()));
        } else if name.starts_with("oracle_") {
            oracle_cols.push((i, name.clone()));
        } else {
            return Err(Error::Schema(format!(
                "unexpected column {name:?}; expected `y`, `p_*`, or `oracle_*`"
            )));
        }
    }
    let Some(y_col) = y_col else {
        return Err(Error::Schema("missing required column `y`".into()));
    };
    if expert_cols.is_empty() {
        return Err(Error::Schema("no expert columns (prefix `p_`) found".into()));
    }

    let mut outcomes = Vec::new();
    let mut reports = Vec::new();
    let mut oracles: Vec<(String, Vec<f64>)> =
        oracle_cols.iter().map(|(_, n)| (n.clone(), Vec::new())).collect();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let line = row_idx + 2;
        let y_raw = parse_float(&record[y_col], line, "y")?;
        if y_raw != 0.0 && y_raw != 1.0 {
            return Err(Error::Schema(format!(
                "line {line}: outcome must be 0 or 1, got {y_raw}"
            )));
        }
        outcomes.push(y_raw == 1.0);
        for (col, name) in &expert_cols {
            reports.push(parse_float(&record[*col], line, name)?);
        }
        for ((col, name), sink) in oracle_cols.iter().zip(&mut oracles) {
            sink.1.push(parse_float(&record[*col], line, name)?);
        }
    }
    let names = expert_cols.into_iter().map(|(_, n)| n).collect();
    let data = TrainingSet::new(names, outcomes, reports)?;
    Ok((data, oracles))
}

/// Write a training data file, optionally with companion columns.
pub fn write_training_data<P: AsRef<Path>>(
    path: P,
    data: &TrainingSet,
    extras: &[(String, Vec<f64>)],
) -> Result<()> {
    for (name, column) in extras {
        if column.len() != data.n() {
            return Err(Error::Schema(format!(
                "companion column {name:?} has {} values for {} rows",
                column.len(),
                data.n()
            )));
        }
    }
    let mut out = String::new();
    out.push('y');
    for name in data.names() {
        out.push(',');
        out.push_str(name);
    }
    for (name, _) in extras {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in 0..data.n() {
        out.push(if data.outcomes()[r] { '1' } else { '0' });
        for &p in data.row(r) {
            out.push(',');
            out.push_str(&format_float(p));
        }
        for (_, column) in extras {
            out.push(',');
            out.push_str(&format_float(column[r]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Shortest f64 representation that round-trips.
fn format_float(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Forecast rows read from or written to a predictions file: a required
/// `p` column plus optional `y` and `p_bar` companions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub p: Vec<f64>,
    pub y: Option<Vec<bool>>,
    pub p_bar: Option<Vec<f64>>,
}

pub fn read_predictions<P: AsRef<Path>>(path: P) -> Result<PredictionFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
    let headers: Vec<String> =
        reader.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(String::from).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let Some(p_col) = find("p") else {
        return Err(Error::Schema("predictions file needs a `p` column".into()));
    };
    let y_col = find("y");
    let bar_col = find("p_bar");
    let mut file = PredictionFile {
        p: Vec::new(),
        y: y_col.map(|_| Vec::new()),
        p_bar: bar_col.map(|_| Vec::new()),
    };
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let line = row_idx + 2;
        file.p.push(parse_float(&record[p_col], line, "p")?);
        if let (Some(col), Some(sink)) = (y_col, file.y.as_mut()) {
            let raw = parse_float(&record[col], line, "y")?;
            if raw != 0.0 && raw != 1.0 {
                return Err(Error::Schema(format!(
                    "line {line}: outcome must be 0 or 1, got {raw}"
                )));
            }
            sink.push(raw == 1.0);
        }
        if let (Some(col), Some(sink)) = (bar_col, file.p_bar.as_mut()) {
            sink.push(parse_float(&record[col], line, "p_bar")?);
        }
    }
    if file.p.is_empty() {
        return Err(Error::Schema("predictions file has no rows".into()));
    }
    Ok(file)
}

pub fn write_predictions<P: AsRef<Path>>(path: P, preds: &PredictionFile) -> Result<()> {
    let mut out = String::from("p");
    if preds.y.is_some() {
        out.push_str(",y");
    }
    if preds.p_bar.is_some() {
        out.push_str(",p_bar");
    }
    out.push('\n');
    for i in 0..preds.p.len() {
        out.push_str(&format_float(preds.p[i]));
        if let Some(y) = &preds.y {
            out.push(',');
            out.push(if y[i] { '1' } else { '0' });
        }
        if let Some(bar) = &preds.p_bar {
            out.push(',');
            out.push_str(&format_float(bar[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Link family in the model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

impl LinkSpec {
    pub fn from_link(link: &LinkFamily) -> Self {
        LinkSpec { family: link.family_name().into(), power: link.power() }
    }

    pub fn to_link(&self) -> Result<LinkFamily> {
        match self.family.as_str() {
            "normal" => Ok(LinkFamily::standard_normal()),
            "logistic" => Ok(LinkFamily::standard_logistic()),
            "exponential_power" => {
                let power = self.power.ok_or_else(|| {
                    Error::Schema("exponential_power link needs a `power` field".into())
                })?;
                LinkFamily::exponential_power(power)
            }
            other => Err(Error::Schema(format!("unknown link family {other:?}"))),
        }
    }
}

/// Provenance of the fit stored alongside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n: usize,
    pub base_rate: f64,
    pub seed: u64,
}

/// One grid-search result in the model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_oof_ls: Option<f64>,
}

/// The serialized model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub link: LinkSpec,
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub clip_epsilon: f64,
    pub training: TrainingMeta,
    #[serde(default)]
    pub grid_results: Vec<GridEntry>,
}

impl ModelFile {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn from_parts(
        model: &FittedAggregator,
        training: TrainingMeta,
        grid: &[GridPoint],
    ) -> Self {
        ModelFile {
            schema_version: Self::SCHEMA_VERSION,
            link: LinkSpec::from_link(model.link()),
            intercept: model.intercept(),
            coefficients: model.coefficients().map(|(n, v)| (n.to_string(), v)).collect(),
            clip_epsilon: model.clip_epsilon(),
            training,
            grid_results: grid
                .iter()
                .map(|p| GridEntry { eta: p.eta, mean_oof_ls: p.mean_oof_ls })
                .collect(),
        }
    }

    /// Rebuild the aggregator with coefficients ordered to match the given
    /// expert columns. Fails when the column sets differ.
    pub fn to_aggregator(&self, columns: &[String]) -> Result<FittedAggregator> {
        if columns.len() != self.coefficients.len() {
            return Err(Error::Schema(format!(
                "model has {} coefficients but the data has {} expert columns",
                self.coefficients.len(),
                columns.len()
            )));
        }
        let mut ordered = Vec::with_capacity(columns.len());
        for name in columns {
            let value = self.coefficients.get(name).ok_or_else(|| {
                Error::Schema(format!(
                    "model has no coefficient for data column {name:?}; model columns: {:?}",
                    self.coefficients.keys().collect::<Vec<_>>()
                ))
            })?;
            ordered.push((name.clone(), *value));
        }
        FittedAggregator::new(self.link.to_link()?, self.intercept, ordered, self.clip_epsilon)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("model serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
            Error::Parse(format!("{}: {e}", path.as_ref().display()))
        })?;
        if file.schema_version != Self::SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }
}
