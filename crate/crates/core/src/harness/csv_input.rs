//! Numeric CSV ingestion with two-pass z-score normalization.

use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};
use crate::stream::DataPoint;

/// The 34 continuous features of a KDD Cup '99 connection record
/// (symbolic and binary flags excluded, label excluded).
pub const KDD99_NUMERIC_COLUMNS: &str = "1,5-6,8-11,13-20,23-41";

/// 1-based column selection such as `1,5-9`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ColumnSpec {
    columns: Vec<usize>,
}

impl ColumnSpec {
    /// Zero-based column indices in selection order.
    pub fn indices(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c - 1).collect()
    }
}

impl FromStr for ColumnSpec {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || DriftError::Config(format!("bad column selection {s:?}"));
        let mut columns = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('-') {
                Some((a, b)) => {
                    let a: usize = a.trim().parse().map_err(|_| bad())?;
                    let b: usize = b.trim().parse().map_err(|_| bad())?;
                    if a == 0 || b < a {
                        return Err(bad());
                    }
                    columns.extend(a..=b);
                }
                None => {
                    let c: usize = part.parse().map_err(|_| bad())?;
                    if c == 0 {
                        return Err(bad());
                    }
                    columns.push(c);
                }
            }
        }
        if columns.is_empty() {
            return Err(DriftError::Config("empty column selection".into()));
        }
        let mut seen = columns.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != columns.len() {
            return Err(DriftError::Config(format!("duplicate columns in {s:?}")));
        }
        Ok(ColumnSpec { columns })
    }
}

impl TryFrom<String> for ColumnSpec {
    type Error = DriftError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ColumnSpec> for String {
    fn from(spec: ColumnSpec) -> String {
        spec.columns
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonNumeric {
    /// Fail on the first non-numeric value in a selected column.
    #[default]
    Reject,
    /// Drop selected columns that contain any non-numeric value.
    Ignore,
}

impl FromStr for NonNumeric {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(NonNumeric::Reject),
            "ignore" => Ok(NonNumeric::Ignore),
            other => Err(DriftError::Config(format!(
                "unknown non-numeric policy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CsvOptions {
    /// All columns when absent.
    #[serde(default)]
    pub columns: Option<ColumnSpec>,
    #[serde(default)]
    pub skip_header: bool,
    #[serde(default)]
    pub non_numeric: NonNumeric,
}

/// Per-column statistics from the first pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    /// 1-based source column.
    pub column: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Default, Clone, Copy)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file =
        File::open(path).map_err(|e| DriftError::io(format!("opening {}", path.display()), e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn records(
    path: &Path,
    skip_header: bool,
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord)>>> {
    let path = path.to_path_buf();
    Ok(reader(&path)?
        .into_records()
        .skip(usize::from(skip_header))
        .map(move |rec| {
            let rec = rec.map_err(|e| DriftError::Data(format!("{}: {e}", path.display())))?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec))
        }))
}

fn parse_cell(rec: &csv::StringRecord, idx: usize) -> Option<std::result::Result<f64, String>> {
    rec.get(idx).map(|raw| {
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| raw.to_string())
    })
}

/// Reads `path` twice: the first pass gathers per-column mean and
/// population standard deviation, the second emits normalized points with
/// `ord` counting data lines from 1. Zero-variance columns map to 0.
pub fn ingest_csv(path: &Path, opts: &CsvOptions) -> Result<(Vec<DataPoint>, Vec<ColumnStats>)> {
    let mut selected: Option<Vec<usize>> = opts.columns.as_ref().map(ColumnSpec::indices);
    let mut stats: Vec<Welford> = Vec::new();
    let mut dropped: Vec<bool> = Vec::new();

    for rec in records(path, opts.skip_header)? {
        let (line, rec) = rec?;
        let cols = selected.get_or_insert_with(|| (0..rec.len()).collect());
        if stats.is_empty() {
            stats = vec![Welford::default(); cols.len()];
            dropped = vec![false; cols.len()];
        }
        for (k, &c) in cols.iter().enumerate() {
            match parse_cell(&rec, c) {
                None => {
                    return Err(DriftError::Data(format!(
                        "{}: line {line} has {} fields, column {} missing",
                        path.display(),
                        rec.len(),
                        c + 1
                    )))
                }
                Some(Ok(v)) => stats[k].push(v),
                Some(Err(value)) => match opts.non_numeric {
                    NonNumeric::Reject => {
                        return Err(DriftError::NonNumeric {
                            path: path.to_path_buf(),
                            line,
                            column: c + 1,
                            value,
                        })
                    }
                    NonNumeric::Ignore => dropped[k] = true,
                },
            }
        }
    }

    let Some(cols) = selected else {
        return Ok((Vec::new(), Vec::new()));
    };
    let keep: Vec<(usize, ColumnStats)> = cols
        .iter()
        .enumerate()
        .filter(|(k, _)| !dropped[*k])
        .map(|(k, &c)| {
            (
                c,
                ColumnStats {
                    column: c + 1,
                    mean: stats[k].mean,
                    std: stats[k].std(),
                },
            )
        })
        .collect();
    if keep.is_empty() {
        return Err(DriftError::Data(
            "no numeric columns left in the selection".into(),
        ));
    }

    let mut points = Vec::new();
    for (ord, rec) in records(path, opts.skip_header)?.enumerate() {
        let (line, rec) = rec?;
        let features = keep
            .iter()
            .map(|(c, st)| {
                let v = match parse_cell(&rec, *c) {
                    Some(Ok(v)) => v,
                    _ => {
                        return Err(DriftError::Data(format!(
                            "{}: line {line} changed between passes",
                            path.display()
                        )))
                    }
                };
                Ok(if st.std > 0.0 {
                    (v - st.mean) / st.std
                } else {
                    0.0
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(DataPoint::new(ord as u64 + 1, features));
    }
    Ok((points, keep.into_iter().map(|(_, st)| st).collect()))
}
