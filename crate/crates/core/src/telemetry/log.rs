//! Per-component run tables and their CSV/JSON files.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::TelemetryError;
use crate::monitor::PhoneEventKind;
use crate::sensors::Mount;

pub const HEADER_FILE: &str = "header.json";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub scenario_sha256: String,
    pub seed: u64,
    pub tick: f64,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputRow {
    pub t_us: u64,
    pub steering: f64,
    pub throttle: f64,
    pub brake: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleRow {
    pub t_us: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rot_x: f64,
    pub rot_y: f64,
    pub rot_z: f64,
    pub speed: f64,
    pub heading: f64,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub t_us: u64,
    pub sensor: Mount,
    pub object_id: u32,
    pub azimuth: f64,
    pub elevation: f64,
    pub range: f64,
    pub object_speed: f64,
    pub object_heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneRow {
    pub t_us: u64,
    pub station: u8,
    pub left_marker: f64,
    pub right_marker: f64,
    pub left_curb: f64,
    pub right_curb: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TouchRow {
    pub t_us: u64,
    pub q1: u8,
    pub q2: u8,
    pub q3: u8,
    pub q4: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoneRow {
    pub t_us: u64,
    pub kind: PhoneEventKind,
    pub question: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformRow {
    pub t_us: u64,
    pub seq: u32,
    pub pitch: f32,
    pub roll: f32,
    pub yaw: f32,
    pub heave: f32,
    pub flags: u8,
}

/// Everything recorded during one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: LogHeader,
    pub input: Vec<InputRow>,
    pub vehicle: Vec<VehicleRow>,
    pub radar: Vec<RadarRow>,
    pub lane: Vec<LaneRow>,
    pub touch: Vec<TouchRow>,
    pub phone: Vec<PhoneRow>,
    pub platform: Vec<PlatformRow>,
}

impl RunLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            input: Vec::new(),
            vehicle: Vec::new(),
            radar: Vec::new(),
            lane: Vec::new(),
            touch: Vec::new(),
            phone: Vec::new(),
            platform: Vec::new(),
        }
    }
}

/// File name and exact column list of every table.
pub const TABLES: [(&str, &[&str]); 7] = [
    ("input.csv", &["t_us", "steering", "throttle", "brake"]),
    (
        "vehicle.csv",
        &[
            "t_us", "x", "y", "z", "rot_x", "rot_y", "rot_z", "speed", "heading", "yaw_rate",
        ],
    ),
    (
        "radar.csv",
        &[
            "t_us",
            "sensor",
            "object_id",
            "azimuth",
            "elevation",
            "range",
            "object_speed",
            "object_heading",
        ],
    ),
    (
        "lane.csv",
        &[
            "t_us",
            "station",
            "left_marker",
            "right_marker",
            "left_curb",
            "right_curb",
            "curvature",
        ],
    ),
    ("touch.csv", &["t_us", "q1", "q2", "q3", "q4"]),
    ("phone.csv", &["t_us", "kind", "question"]),
    (
        "platform.csv",
        &["t_us", "seq", "pitch", "roll", "yaw", "heave", "flags"],
    ),
];

pub(crate) fn columns(file: &str) -> &'static [&'static str] {
    TABLES
        .iter()
        .find(|(f, _)| *f == file)
        .map(|(_, c)| *c)
        .expect("known table")
}

fn csv_err(path: &Path, e: csv::Error) -> TelemetryError {
    TelemetryError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub(crate) fn write_table<T: Serialize>(
    dir: &Path,
    file: &str,
    rows: &[T],
) -> Result<PathBuf, TelemetryError> {
    let path = dir.join(file);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(|e| csv_err(&path, e))?;
    w.write_record(columns(file))
        .map_err(|e| csv_err(&path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| TelemetryError::io(&path, e))?;
    Ok(path)
}

pub(crate) fn read_table<T: DeserializeOwned>(
    dir: &Path,
    file: &str,
) -> Result<Vec<T>, TelemetryError> {
    read_csv(&dir.join(file), file)
}

/// Reads a CSV file at `path` that must follow the schema of table `table`.
pub(crate) fn read_csv<T: DeserializeOwned>(
    path: &Path,
    table: &str,
) -> Result<Vec<T>, TelemetryError> {
    if !path.exists() {
        return Err(TelemetryError::MissingTable(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let expected = columns(table);
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| table.to_string());
    for col in expected {
        if !headers.iter().any(|h| h == *col) {
            return Err(TelemetryError::Schema {
                file,
                column: col.to_string(),
                problem: "missing",
            });
        }
    }
    for (i, h) in headers.iter().enumerate() {
        if expected.get(i) != Some(&h) {
            return Err(TelemetryError::Schema {
                file,
                column: h.to_string(),
                problem: if expected.contains(&h) {
                    "out of order"
                } else {
                    "unexpected"
                },
            });
        }
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Writes one CSV per table plus `header.json`, replacing earlier files.
pub fn write_log(log: &RunLog, dir: &Path) -> Result<Vec<PathBuf>, TelemetryError> {
    fs::create_dir_all(dir).map_err(|e| TelemetryError::io(dir, e))?;
    let header_path = dir.join(HEADER_FILE);
    let json = serde_json::to_string_pretty(&log.header).expect("header serializes");
    fs::write(&header_path, json + "\n").map_err(|e| TelemetryError::io(&header_path, e))?;
    Ok(vec![
        header_path,
        write_table(dir, "input.csv", &log.input)?,
        write_table(dir, "vehicle.csv", &log.vehicle)?,
        write_table(dir, "radar.csv", &log.radar)?,
        write_table(dir, "lane.csv", &log.lane)?,
        write_table(dir, "touch.csv", &log.touch)?,
        write_table(dir, "phone.csv", &log.phone)?,
        write_table(dir, "platform.csv", &log.platform)?,
    ])
}

pub fn read_header(dir: &Path) -> Result<LogHeader, TelemetryError> {
    let path = dir.join(HEADER_FILE);
    let file = File::open(&path).map_err(|e| TelemetryError::io(&path, e))?;
    serde_json::from_reader(file).map_err(|e| TelemetryError::Json {
        path,
        message: e.to_string(),
    })
}

pub fn read_log(dir: &Path) -> Result<RunLog, TelemetryError> {
    Ok(RunLog {
        header: read_header(dir)?,
        input: read_table(dir, "input.csv")?,
        vehicle: read_table(dir, "vehicle.csv")?,
        radar: read_table(dir, "radar.csv")?,
        lane: read_table(dir, "lane.csv")?,
        touch: read_table(dir, "touch.csv")?,
        phone: read_table(dir, "phone.csv")?,
        platform: read_table(dir, "platform.csv")?,
    })
}

/// Loads the scenario stored beside a run, warning when its checksum does
/// not match the one recorded in the header.
pub fn read_run_scenario(
    dir: &Path,
    header: &LogHeader,
) -> Result<crate::world::Scenario, TelemetryError> {
    let path = dir.join(SCENARIO_FILE);
    let text = fs::read_to_string(&path).map_err(|e| TelemetryError::io(&path, e))?;
    let scenario =
        crate::world::Scenario::from_json(&text).map_err(|e| TelemetryError::Scenario {
            path: path.clone(),
            message: e.to_string(),
        })?;
    let sha = scenario.sha256();
    if sha != header.scenario_sha256 {
        log::warn!(
            "scenario checksum mismatch in {}: header {}, file {}",
            path.display(),
            header.scenario_sha256,
            sha
        );
    }
    Ok(scenario)
}

pub fn write_run_scenario(
    dir: &Path,
    scenario: &crate::world::Scenario,
) -> Result<PathBuf, TelemetryError> {
    fs::create_dir_all(dir).map_err(|e| TelemetryError::io(dir, e))?;
    let path = dir.join(SCENARIO_FILE);
    fs::write(&path, scenario.to_json() + "\n").map_err(|e| TelemetryError::io(&path, e))?;
    Ok(path)
}
