//! Time-series data model and CSV ingestion.
//!
//! Samples are uniformly spaced and indexed from 1 (`TimeSeries::at(1)` is the
//! first observation). A dataset optionally carries per-sample trial ids,
//! shared by every member series.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, uniformly sampled sequence of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    values: Vec<f64>,
    trial_ids: Option<Vec<i64>>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::with_trials(name, values, None)
    }

    pub fn with_trials(
        name: impl Into<String>,
        values: Vec<f64>,
        trial_ids: Option<Vec<i64>>,
    ) -> Result<Self> {
        let name = name.into();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, index });
        }
        validate_trials(&name, values.len(), trial_ids.as_deref())?;
        Ok(Self {
            name,
            values,
            trial_ids,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trial_ids(&self) -> Option<&[i64]> {
        self.trial_ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at 1-based time index `t`.
    ///
    /// Panics if `t` is 0 or past the end.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    /// Trial id at 1-based time index `t`, if the series is segmented.
    pub fn trial_at(&self, t: usize) -> Option<i64> {
        self.trial_ids.as_ref().map(|ids| ids[t - 1])
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces the trial partition, revalidating it against the values.
    pub fn with_trial_ids(mut self, trial_ids: Option<Vec<i64>>) -> Result<Self> {
        validate_trials(&self.name, self.values.len(), trial_ids.as_deref())?;
        self.trial_ids = trial_ids;
        Ok(self)
    }
}

fn validate_trials(name: &str, len: usize, trial_ids: Option<&[i64]>) -> Result<()> {
    let Some(ids) = trial_ids else {
        return Ok(());
    };
    if ids.len() != len {
        return Err(Error::InvalidTrials {
            name: name.to_owned(),
            reason: format!("{} trial ids for {} values", ids.len(), len),
        });
    }
    if let Some(w) = ids.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidTrials {
            name: name.to_owned(),
            reason: format!("trial ids decrease at index {}", w + 1),
        });
    }
    Ok(())
}

/// A collection of equally long series sharing one trial partition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    length: usize,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let mut dataset = Dataset::default();
        for s in series {
            dataset.insert(s)?;
        }
        Ok(dataset)
    }

    /// Adds a series; its length and trial ids must match the existing members.
    pub fn insert(&mut self, series: TimeSeries) -> Result<()> {
        if self.series.iter().any(|s| s.name == series.name) {
            return Err(Error::DuplicateSeries(series.name));
        }
        if let Some(first) = self.series.first() {
            if series.len() != self.length {
                return Err(Error::LengthMismatch {
                    expected: self.length,
                    found: series.len(),
                    name: series.name,
                });
            }
            if series.trial_ids != first.trial_ids {
                return Err(Error::InvalidTrials {
                    name: series.name,
                    reason: format!("trial ids differ from those of `{}`", first.name),
                });
            }
        } else {
            self.length = series.len();
        }
        self.series.push(series);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&TimeSeries> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSeries(name.to_owned()))
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.iter().map(|s| s.name.as_str())
    }

    /// Common sample count L.
    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty() || self.length == 0
    }

    pub fn trial_ids(&self) -> Option<&[i64]> {
        self.series.first().and_then(|s| s.trial_ids())
    }

    pub fn metadata(&self) -> DatasetMeta {
        let trial_count = self.trial_ids().map_or(0, |ids| {
            let mut n = 0;
            let mut last = None;
            for &id in ids {
                if last != Some(id) {
                    n += 1;
                    last = Some(id);
                }
            }
            n
        });
        DatasetMeta {
            names: self.names().map(str::to_owned).collect(),
            length: self.length,
            trial_count,
        }
    }
}

/// Summary of a dataset for external tooling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub names: Vec<String>,
    pub length: usize,
    pub trial_count: usize,
}

impl DatasetMeta {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Maps dataset series names to CSV header columns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvSchema {
    columns: Vec<(String, String)>,
    trial_column: Option<String>,
}

impl CsvSchema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schema whose series are named after their columns.
    pub fn identity<S: AsRef<str>>(columns: &[S]) -> Self {
        columns
            .iter()
            .fold(Self::new(), |s, c| s.column(c.as_ref(), c.as_ref()))
    }

    /// Reads column `column` into a series called `series`.
    pub fn column(mut self, series: impl Into<String>, column: impl Into<String>) -> Self {
        self.columns.push((series.into(), column.into()));
        self
    }

    pub fn trial_column(mut self, column: impl Into<String>) -> Self {
        self.trial_column = Some(column.into());
        self
    }

    pub fn columns(&self) -> &[(String, String)] {
        &self.columns
    }
}

/// Default name of the optional trial column.
pub const TRIAL_COLUMN: &str = "trial";
/// Name of the 1-based index column written by [`save_csv`].
pub const TIME_COLUMN: &str = "t";

/// Reads the columns named in `schema` from a headed CSV file.
///
/// Row numbers in errors count data rows from 1, excluding the header.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let locate = |column: &str| {
        header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::MissingColumn {
                column: column.to_owned(),
            })
    };
    let indices = schema
        .columns
        .iter()
        .map(|(_, c)| locate(c))
        .collect::<Result<Vec<_>>>()?;
    let trial_index = schema.trial_column.as_deref().map(locate).transpose()?;

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); indices.len()];
    let mut trials = trial_index.map(|_| Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        for ((col, &idx), out) in schema.columns.iter().zip(&indices).zip(&mut values) {
            let cell = &record[idx];
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    row,
                    column: col.1.clone(),
                    value: cell.to_owned(),
                    expected: "a finite real",
                }
            })?;
            out.push(v);
        }
        if let (Some(idx), Some(trials)) = (trial_index, trials.as_mut()) {
            let cell = &record[idx];
            let id: i64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: header[idx].to_owned(),
                value: cell.to_owned(),
                expected: "an integer trial id",
            })?;
            trials.push(id);
        }
    }

    let series = schema
        .columns
        .iter()
        .zip(values)
        .map(|((name, _), v)| TimeSeries::with_trials(name.clone(), v, trials.clone()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series)
}

/// Writes `t` (1-based index), every series, and `trial` when present.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, file)
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let trials = dataset.trial_ids();
    let mut header = vec![TIME_COLUMN];
    header.extend(dataset.names());
    if trials.is_some() {
        header.push(TRIAL_COLUMN);
    }
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..dataset.len() {
        row.clear();
        row.push((i + 1).to_string());
        row.extend(dataset.series.iter().map(|s| format_real(s.values[i])));
        if let Some(ids) = trials {
            row.push(ids[i].to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
