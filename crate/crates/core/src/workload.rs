//! Arrival and carbon-intensity streams.
//!
//! Random streams are counter-based: the draw for slot `t` comes from a
//! ChaCha8 generator keyed by the model seed, positioned on a stream chosen
//! by what is being drawn and a word offset derived from `t`. A slot's values
//! therefore do not depend on which other slots were drawn, or in what order.
//!
//! Traces shorter than the horizon wrap around: slot `t` reads row
//! `t mod len`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Arrivals, CarbonSnapshot};

const ARRIVAL_STREAM: u64 = 0xA;
const CARBON_STREAM: u64 = 0xC;
/// Words reserved per slot in each stream. Far more than one slot consumes.
const SLOT_STRIDE_BITS: u32 = 20;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column '{0}' not found in CSV header")]
    MissingColumn(String),
    #[error("line {line}, column '{column}': cannot use value '{value}': {reason}")]
    Parse {
        line: u64,
        column: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: timestamp {timestamp} is not after the previous row")]
    Ordering { line: u64, timestamp: String },
    #[error("trace has no rows")]
    Empty,
    #[error("configuration error: {0}")]
    Config(String),
}

fn slot_rng(seed: u64, stream: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((t as u128) << SLOT_STRIDE_BITS);
    rng
}

/// Per-slot, per-type arrival counts read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTrace {
    pub timestamps: Vec<String>,
    /// `rows[slot][m]`
    pub rows: Vec<Vec<u64>>,
}

impl ArrivalTrace {
    pub fn task_types(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn max(&self) -> u64 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    /// Each `a_m(t)` independently uniform on `{0, …, max_arrivals}`.
    UniformIid { max_arrivals: u64, seed: u64 },
    Constant { value: u64 },
    FileTrace { trace: Arc<ArrivalTrace> },
}

impl ArrivalModel {
    /// Upper bound on any single `a_m(t)` this model produces.
    pub fn max_arrivals(&self) -> u64 {
        match self {
            ArrivalModel::UniformIid { max_arrivals, .. } => *max_arrivals,
            ArrivalModel::Constant { value } => *value,
            ArrivalModel::FileTrace { trace } => trace.max(),
        }
    }

    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            ArrivalModel::UniformIid { max_arrivals, .. } => ArrivalModel::UniformIid {
                max_arrivals: *max_arrivals,
                seed,
            },
            other => other.clone(),
        }
    }

    pub fn check(&self, task_types: usize) -> Result<(), WorkloadError> {
        if let ArrivalModel::FileTrace { trace } = self {
            if trace.rows.is_empty() {
                return Err(WorkloadError::Empty);
            }
            if trace.task_types() != task_types {
                return Err(WorkloadError::Config(format!(
                    "arrival trace has {} task columns, network has {task_types}",
                    trace.task_types()
                )));
            }
        }
        Ok(())
    }
}

pub fn generate_arrivals(model: &ArrivalModel, task_types: usize, t: u64) -> Arrivals {
    let count = match model {
        ArrivalModel::UniformIid { max_arrivals, seed } => {
            let mut rng = slot_rng(*seed, ARRIVAL_STREAM, t);
            (0..task_types)
                .map(|_| rng.gen_range(0..=*max_arrivals))
                .collect()
        }
        ArrivalModel::Constant { value } => vec![*value; task_types],
        ArrivalModel::FileTrace { trace } => {
            let row = &trace.rows[(t % trace.rows.len() as u64) as usize];
            row[..task_types].to_vec()
        }
    };
    Arrivals { count }
}

/// Carbon intensities over time for the edge region followed by each cloud
/// region.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonTrace {
    pub timestamps: Vec<String>,
    pub slots: Vec<CarbonSnapshot>,
    /// Edge region first, then one per cloud.
    pub region_names: Vec<String>,
    pub slot_duration_minutes: u32,
}

impl CarbonTrace {
    pub fn new(
        timestamps: Vec<String>,
        slots: Vec<CarbonSnapshot>,
        region_names: Vec<String>,
        slot_duration_minutes: u32,
    ) -> Result<Self, WorkloadError> {
        if slots.is_empty() {
            return Err(WorkloadError::Empty);
        }
        if timestamps.len() != slots.len() {
            return Err(WorkloadError::Config(format!(
                "{} timestamps for {} slots",
                timestamps.len(),
                slots.len()
            )));
        }
        let clouds = region_names.len().saturating_sub(1);
        if region_names.is_empty() || slots.iter().any(|s| s.cloud.len() != clouds) {
            return Err(WorkloadError::Config(
                "every slot needs one intensity per named region".into(),
            ));
        }
        if slot_duration_minutes == 0 {
            return Err(WorkloadError::Config("slot duration must be positive".into()));
        }
        Ok(Self {
            timestamps,
            slots,
            region_names,
            slot_duration_minutes,
        })
    }

    pub fn clouds(&self) -> usize {
        self.region_names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Snapshot for slot `t`, wrapping cyclically.
    pub fn at(&self, t: u64) -> &CarbonSnapshot {
        &self.slots[(t % self.slots.len() as u64) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CarbonModel {
    /// Every intensity independently uniform on the integer grid
    /// `{0, 1, …, ⌊max_intensity⌋}`.
    UniformIid { max_intensity: f64, seed: u64 },
    /// The same intensity for every region in every slot.
    Constant { value: f64 },
    CsvTrace { trace: Arc<CarbonTrace> },
}

impl CarbonModel {
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            CarbonModel::UniformIid { max_intensity, .. } => CarbonModel::UniformIid {
                max_intensity: *max_intensity,
                seed,
            },
            other => other.clone(),
        }
    }

    pub fn check(&self, clouds: usize) -> Result<(), WorkloadError> {
        match self {
            CarbonModel::UniformIid { max_intensity, .. } => {
                if !(max_intensity.is_finite() && *max_intensity >= 0.0) {
                    return Err(WorkloadError::Config(format!(
                        "max_intensity must be finite and >= 0, got {max_intensity}"
                    )));
                }
            }
            CarbonModel::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(WorkloadError::Config(format!(
                        "constant intensity must be finite and >= 0, got {value}"
                    )));
                }
            }
            CarbonModel::CsvTrace { trace } => {
                if trace.is_empty() {
                    return Err(WorkloadError::Config("carbon trace is empty".into()));
                }
                if trace.clouds() != clouds {
                    return Err(WorkloadError::Config(format!(
                        "carbon trace maps {} cloud regions, network has {clouds} clouds",
                        trace.clouds()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn generate_carbon(
    model: &CarbonModel,
    clouds: usize,
    t: u64,
) -> Result<CarbonSnapshot, WorkloadError> {
    model.check(clouds)?;
    Ok(match model {
        CarbonModel::UniformIid {
            max_intensity,
            seed,
        } => {
            let top = max_intensity.floor() as u64;
            let mut rng = slot_rng(*seed, CARBON_STREAM, t);
            let edge = rng.gen_range(0..=top) as f64;
            let cloud = (0..clouds).map(|_| rng.gen_range(0..=top) as f64).collect();
            CarbonSnapshot { edge, cloud }
        }
        CarbonModel::Constant { value } => CarbonSnapshot {
            edge: *value,
            cloud: vec![*value; clouds],
        },
        CarbonModel::CsvTrace { trace } => trace.at(t).clone(),
    })
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    const FORMATS: [&str; 6] = [
        "%Y-%m-%dT%H:%MZ",
        "%Y-%m-%dT%H:%M:%SZ",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

/// CSV body common to both trace formats: raw cells of the selected columns,
/// with timestamps already checked to be strictly increasing.
struct RawTable {
    timestamps: Vec<String>,
    lines: Vec<u64>,
    cells: Vec<Vec<String>>,
    slot_minutes: u32,
}

fn read_table<R: Read>(reader: R, columns: Option<&[&str]>) -> Result<(Vec<String>, RawTable), WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("timestamp") {
        return Err(WorkloadError::MissingColumn("timestamp".into()));
    }
    let (names, idx): (Vec<String>, Vec<usize>) = match columns {
        Some(wanted) => {
            let mut idx = Vec::with_capacity(wanted.len());
            for name in wanted {
                let i = header
                    .iter()
                    .skip(1)
                    .position(|h| h == name)
                    .ok_or_else(|| WorkloadError::MissingColumn((*name).to_owned()))?;
                idx.push(i + 1);
            }
            (wanted.iter().map(|s| (*s).to_owned()).collect(), idx)
        }
        None => (header[1..].to_vec(), (1..header.len()).collect()),
    };

    let mut table = RawTable {
        timestamps: Vec::new(),
        lines: Vec::new(),
        cells: Vec::new(),
        slot_minutes: 30,
    };
    let mut prev: Option<NaiveDateTime> = None;
    let mut first_gap: Option<i64> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let ts_raw = record.get(0).unwrap_or_default();
        let ts = parse_timestamp(ts_raw).ok_or_else(|| WorkloadError::Parse {
            line,
            column: "timestamp".into(),
            value: ts_raw.into(),
            reason: "not an ISO-8601 timestamp".into(),
        })?;
        if let Some(p) = prev {
            if ts <= p {
                return Err(WorkloadError::Ordering {
                    line,
                    timestamp: ts_raw.into(),
                });
            }
            first_gap.get_or_insert((ts - p).num_minutes());
        }
        prev = Some(ts);
        table.timestamps.push(ts_raw.to_owned());
        table.lines.push(line);
        table.cells.push(
            idx.iter()
                .map(|&i| record.get(i).unwrap_or_default().to_owned())
                .collect(),
        );
    }
    if table.cells.is_empty() {
        return Err(WorkloadError::Empty);
    }
    if let Some(gap) = first_gap {
        table.slot_minutes = u32::try_from(gap).ok().filter(|&g| g > 0).unwrap_or(30);
    }
    Ok((names, table))
}

fn open(path: &Path) -> Result<File, WorkloadError> {
    File::open(path).map_err(|source| WorkloadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parse a regional intensity CSV: a `timestamp` column followed by one
/// column per region, in gCO2/kW·h, rows in ascending time.
pub fn parse_carbon_csv<R: Read>(
    reader: R,
    edge_region: &str,
    cloud_regions: &[&str],
) -> Result<CarbonTrace, WorkloadError> {
    let mut wanted = vec![edge_region];
    wanted.extend_from_slice(cloud_regions);
    let (names, table) = read_table(reader, Some(&wanted))?;
    let mut slots = Vec::with_capacity(table.cells.len());
    for (row, &line) in table.cells.iter().zip(&table.lines) {
        let values = row
            .iter()
            .zip(&names)
            .map(|(cell, column)| {
                let bad = |reason: &str| WorkloadError::Parse {
                    line,
                    column: column.clone(),
                    value: cell.clone(),
                    reason: reason.into(),
                };
                let x: f64 = cell.parse().map_err(|_| bad("not a number"))?;
                if !x.is_finite() || x < 0.0 {
                    return Err(bad("intensity must be finite and non-negative"));
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        slots.push(CarbonSnapshot {
            edge: values[0],
            cloud: values[1..].to_vec(),
        });
    }
    CarbonTrace::new(table.timestamps, slots, names, table.slot_minutes)
}

pub fn load_carbon_csv(
    path: &Path,
    edge_region: &str,
    cloud_regions: &[&str],
) -> Result<CarbonTrace, WorkloadError> {
    parse_carbon_csv(open(path)?, edge_region, cloud_regions)
}

pub fn write_carbon_csv<W: Write>(trace: &CarbonTrace, writer: W) -> Result<(), WorkloadError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_owned()];
    header.extend(trace.region_names.iter().cloned());
    w.write_record(&header)?;
    for (ts, snap) in trace.timestamps.iter().zip(&trace.slots) {
        let mut row = vec![ts.clone(), snap.edge.to_string()];
        row.extend(snap.cloud.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parse an arrivals CSV: `timestamp` then one non-negative integer column
/// per task type, in type order.
pub fn parse_arrivals_csv<R: Read>(reader: R) -> Result<ArrivalTrace, WorkloadError> {
    let (names, table) = read_table(reader, None)?;
    let mut rows = Vec::with_capacity(table.cells.len());
    for (row, &line) in table.cells.iter().zip(&table.lines) {
        let counts = row
            .iter()
            .zip(&names)
            .map(|(cell, column)| {
                cell.parse::<u64>().map_err(|_| WorkloadError::Parse {
                    line,
                    column: column.clone(),
                    value: cell.clone(),
                    reason: "arrival counts must be non-negative integers".into(),
                })
            })
            .collect::<Result<Vec<u64>, _>>()?;
        rows.push(counts);
    }
    Ok(ArrivalTrace {
        timestamps: table.timestamps,
        rows,
    })
}

pub fn load_arrivals_csv(path: &Path) -> Result<ArrivalTrace, WorkloadError> {
    parse_arrivals_csv(open(path)?)
}

/// Synthetic half-hourly regional intensities with a diurnal cycle, slow
/// wind-driven swings and a wide spread between regions, roughly the shape
/// of British regional grid data.
pub mod synthetic {
    use super::*;
    use chrono::{Duration, NaiveDate};
    use rand_distr::{Distribution, Normal};

    /// `(name, mean intensity, share of output exposed to wind swings)`
    pub const REGIONS: [(&str, f64, f64); 6] = [
        ("London", 190.0, 0.35),
        ("North Scotland", 25.0, 0.8),
        ("South Scotland", 70.0, 0.7),
        ("North West England", 210.0, 0.45),
        ("South Wales", 290.0, 0.3),
        ("South England", 165.0, 0.4),
    ];

    pub fn regional_trace(days: u32, seed: u64) -> CarbonTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shock = Normal::new(0.0, 0.12).expect("valid sigma");
        let jitter = Normal::new(0.0, 0.06).expect("valid sigma");
        let start = NaiveDate::from_ymd_opt(2023, 3, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid date");

        let slots_total = days as usize * 48;
        // national wind level in [0, 1]: mean-reverting walk
        let mut wind = 0.5f64;
        let mut timestamps = Vec::with_capacity(slots_total);
        let mut slots = Vec::with_capacity(slots_total);
        for k in 0..slots_total {
            wind = (wind + 0.03 * (0.5 - wind) + 0.08 * shock.sample(&mut rng)).clamp(0.0, 1.0);
            let hour = (k % 48) as f64 / 2.0;
            // morning and evening demand peaks, overnight trough
            let demand = 0.22 * (-((hour - 8.5) / 2.5).powi(2)).exp()
                + 0.32 * (-((hour - 18.0) / 2.5).powi(2)).exp()
                - 0.18 * (-((hour - 3.5) / 3.0).powi(2)).exp();
            let values: Vec<f64> = REGIONS
                .iter()
                .map(|&(_, mean, wind_share)| {
                    let level = mean
                        * (1.0 + demand)
                        * (1.0 - wind_share * (wind - 0.5) * 1.6)
                        * (1.0 + jitter.sample(&mut rng));
                    level.max(0.0).round()
                })
                .collect();
            let ts = start + Duration::minutes(30 * k as i64);
            timestamps.push(ts.format("%Y-%m-%dT%H:%MZ").to_string());
            slots.push(CarbonSnapshot {
                edge: values[0],
                cloud: values[1..].to_vec(),
            });
        }
        let names = REGIONS.iter().map(|r| r.0.to_owned()).collect();
        CarbonTrace::new(timestamps, slots, names, 30).expect("non-empty trace")
    }
}
