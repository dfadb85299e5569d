//! Offline processing of run directories: lane indicators, nearest objects
//! per radar and a plan-view SVG plot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::sensors::Mount;
use crate::telemetry::{read_log, read_run_scenario, RadarRow, RunLog, TelemetryError, TICK};
use crate::world::{LaneIndex, Road, Scenario, SegmentKind};

pub const LANE_INDICATORS_FILE: &str = "lane_indicators.csv";
pub const NEAREST_OBJECTS_FILE: &str = "nearest_objects.csv";
pub const PLOT_FILE: &str = "plot.svg";

pub const BLACK: &str = "#000000";
pub const YELLOW: &str = "#E6C800";
pub const BLUE: &str = "#1F4FFF";
pub const LIGHT_BLUE: &str = "#7FB2FF";
pub const RED: &str = "#D62728";
/// Obstacles no radar ever saw, and the vehicle box when off the road.
pub const GRAY: &str = "#7F7F7F";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("log has no vehicle rows")]
    EmptyLog,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneIndicator {
    pub t_us: u64,
    pub lane_index: LaneIndex,
    /// Signed offset from the road center line, positive left.
    pub center_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearestEntry {
    pub object_id: u32,
    pub range: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NearestObjects {
    pub t_us: u64,
    pub front: Option<NearestEntry>,
    pub left: Option<NearestEntry>,
    pub right: Option<NearestEntry>,
}

impl NearestObjects {
    pub fn get(&self, mount: Mount) -> Option<NearestEntry> {
        match mount {
            Mount::Front => self.front,
            Mount::Left => self.left,
            Mount::Right => self.right,
        }
    }

    fn slot(&mut self, mount: Mount) -> &mut Option<NearestEntry> {
        match mount {
            Mount::Front => &mut self.front,
            Mount::Left => &mut self.left,
            Mount::Right => &mut self.right,
        }
    }
}

pub fn lane_index(offset: f64, road: &Road) -> LaneIndex {
    road.lane_index(offset)
}

/// Closest reading per sensor; equal ranges go to the smaller id.
pub fn nearest_objects(t_us: u64, rows: &[RadarRow]) -> NearestObjects {
    let mut out = NearestObjects {
        t_us,
        ..Default::default()
    };
    for r in rows {
        let slot = out.slot(r.sensor);
        let better = match slot {
            None => true,
            Some(e) => r.range < e.range || (r.range == e.range && r.object_id < e.object_id),
        };
        if better {
            *slot = Some(NearestEntry {
                object_id: r.object_id,
                range: r.range,
                azimuth: r.azimuth,
            });
        }
    }
    out
}

pub fn lane_indicators(log: &RunLog, road: &Road) -> Vec<LaneIndicator> {
    log.vehicle
        .iter()
        .map(|v| {
            let (_, offset, _) = road.project(v.x, v.y);
            LaneIndicator {
                t_us: v.t_us,
                lane_index: road.lane_index(offset),
                center_offset: offset,
            }
        })
        .collect()
}

/// Nearest objects for every tick that has at least one radar row.
pub fn nearest_by_tick(radar: &[RadarRow]) -> Vec<NearestObjects> {
    radar
        .chunk_by(|a, b| a.t_us == b.t_us)
        .map(|rows| nearest_objects(rows[0].t_us, rows))
        .collect()
}

#[derive(Serialize)]
struct LaneIndicatorRecord {
    t_us: u64,
    lane_index: String,
    center_offset: f64,
}

#[derive(Serialize)]
struct NearestRecord {
    t_us: u64,
    sensor: Mount,
    object_id: u32,
    range: f64,
    azimuth: f64,
}

const LANE_INDICATOR_COLUMNS: [&str; 3] = ["t_us", "lane_index", "center_offset"];
const NEAREST_COLUMNS: [&str; 5] = ["t_us", "sensor", "object_id", "range", "azimuth"];

fn write_csv<T: Serialize>(
    path: &Path,
    columns: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<(), AnalysisError> {
    let err = |source| AnalysisError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(err)?;
    w.write_record(columns).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Processes a run directory and writes the derived tables and plot into
/// `out` (the run directory itself when `None`). Returns the written paths.
pub fn analyze(
    dir: &Path,
    out: Option<&Path>,
    plot_only: bool,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let log = read_log(dir)?;
    let scenario = read_run_scenario(dir, &log.header)?;
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out).map_err(|source| AnalysisError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let svg = render_plot(&log, &scenario)?;
    let mut written = Vec::new();

    if !plot_only {
        let path = out.join(LANE_INDICATORS_FILE);
        write_csv(
            &path,
            &LANE_INDICATOR_COLUMNS,
            lane_indicators(&log, &scenario.road)
                .into_iter()
                .map(|l| LaneIndicatorRecord {
                    t_us: l.t_us,
                    lane_index: l.lane_index.to_string(),
                    center_offset: l.center_offset,
                }),
        )?;
        written.push(path);

        let path = out.join(NEAREST_OBJECTS_FILE);
        let records = nearest_by_tick(&log.radar);
        let records = records.iter().flat_map(|n| {
            Mount::ALL.into_iter().filter_map(move |m| {
                n.get(m).map(|e| NearestRecord {
                    t_us: n.t_us,
                    sensor: m,
                    object_id: e.object_id,
                    range: e.range,
                    azimuth: e.azimuth,
                })
            })
        });
        write_csv(&path, &NEAREST_COLUMNS, records)?;
        written.push(path);
    }

    let path = out.join(PLOT_FILE);
    fs::write(&path, svg).map_err(|source| AnalysisError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}

// ---- plot ------------------------------------------------------------------

const PX_PER_M: f64 = 4.0;
const MARGIN_M: f64 = 8.0;
const ROAD_STEP_M: f64 = 1.0;
const PATH_DECIMATION: usize = 10;
const CAR_LENGTH: f64 = 4.5;
const CAR_WIDTH: f64 = 1.8;

fn sensor_color(m: Mount) -> &'static str {
    match m {
        Mount::Front => RED,
        Mount::Left => BLUE,
        Mount::Right => LIGHT_BLUE,
    }
}

/// Points along the curve at a fixed lateral offset from the center line.
/// Straight segments contribute their end points only.
fn offset_curve(road: &Road, offset: f64) -> Vec<(f64, f64)> {
    let mut stations = vec![0.0];
    let mut s0 = 0.0;
    for seg in road.segments() {
        if seg.kind == SegmentKind::Arc {
            let n = (seg.length / ROAD_STEP_M).ceil().max(1.0) as usize;
            stations.extend((1..n).map(|i| s0 + seg.length * i as f64 / n as f64));
        }
        s0 += seg.length;
        stations.push(s0.min(road.total_length()));
    }
    stations
        .into_iter()
        .map(|s| {
            let (p, _) = road.frame_at(s).expect("s within road");
            let (nx, ny) = p.left_normal();
            (p.x + offset * nx, p.y + offset * ny)
        })
        .collect()
}

struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Self {
            min_x: x0 - MARGIN_M,
            max_y: y1 + MARGIN_M,
            width: (x1 - x0 + 2.0 * MARGIN_M) * PX_PER_M,
            height: (y1 - y0 + 2.0 * MARGIN_M) * PX_PER_M,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.min_x) * PX_PER_M, (self.max_y - y) * PX_PER_M)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = self.px(x, y);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{px:.2},{py:.2}");
        }
        s
    }

    fn path_d(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = self.px(x, y);
            let _ = write!(s, "{}{px:.2} {py:.2}", if i == 0 { "M" } else { " L" });
        }
        s
    }
}

struct Detection {
    id: u32,
    t_us: u64,
    sensor: Mount,
    from: (f64, f64),
    at: (f64, f64),
}

/// Last detection of every obstacle, with the vehicle position at that tick.
/// When several sensors see it on the same tick, front wins over left over
/// right.
fn last_detections(log: &RunLog) -> Vec<Detection> {
    let mut out: Vec<Detection> = Vec::new();
    let mut vi = 0;
    for r in &log.radar {
        while vi + 1 < log.vehicle.len() && log.vehicle[vi].t_us < r.t_us {
            vi += 1;
        }
        let v = &log.vehicle[vi];
        let bearing = v.rot_z + r.azimuth;
        let det = Detection {
            id: r.object_id,
            t_us: r.t_us,
            sensor: r.sensor,
            from: (v.x, v.y),
            at: (v.x + r.range * bearing.cos(), v.y + r.range * bearing.sin()),
        };
        match out.iter_mut().find(|d| d.id == r.object_id) {
            Some(d) if r.t_us > d.t_us || (r.t_us == d.t_us && r.sensor < d.sensor) => *d = det,
            Some(_) => {}
            None => out.push(det),
        }
    }
    out.sort_by_key(|d| d.id);
    out
}

/// Renders the plan view of a run. Output depends only on the inputs.
pub fn render_plot(log: &RunLog, scenario: &Scenario) -> Result<String, AnalysisError> {
    let last = log.vehicle.last().ok_or(AnalysisError::EmptyLog)?;
    let road = &scenario.road;
    let half = road.half_width();

    let curbs = [offset_curve(road, -half), offset_curve(road, half)];
    let lane_lines: Vec<Vec<(f64, f64)>> = (1..road.num_lanes())
        .map(|k| offset_curve(road, road.lane_right_boundary(k)))
        .collect();
    let mut path: Vec<(f64, f64)> = log
        .vehicle
        .iter()
        .step_by(PATH_DECIMATION)
        .map(|v| (v.x, v.y))
        .collect();
    if !(log.vehicle.len() - 1).is_multiple_of(PATH_DECIMATION) {
        path.push((last.x, last.y));
    }

    let detections = last_detections(log);
    let steps = log.vehicle.len();
    let undetected: Vec<(u32, f64, f64)> = scenario
        .obstacles
        .iter()
        .filter(|o| !detections.iter().any(|d| d.id == o.id))
        .map(|o| {
            let mut o = *o;
            for _ in 0..steps {
                o.advance(TICK);
            }
            (o.id, o.x, o.y)
        })
        .collect();

    let frame = Frame::fit(
        curbs
            .iter()
            .flatten()
            .copied()
            .chain(path.iter().copied())
            .chain(detections.iter().map(|d| d.at))
            .chain(undetected.iter().map(|&(_, x, y)| (x, y))),
    );

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(
        svg,
        r##"<rect class="background" x="0" y="0" width="100%" height="100%" fill="#FFFFFF"/>"##
    );
    for (name, c) in ["curb right", "curb left"].iter().zip(&curbs) {
        let _ = writeln!(
            svg,
            r#"<path class="{name}" d="{}" fill="none" stroke="{BLACK}" stroke-width="2"/>"#,
            frame.path_d(c)
        );
    }
    for l in &lane_lines {
        let _ = writeln!(
            svg,
            r#"<path class="lane-line" d="{}" fill="none" stroke="{YELLOW}" stroke-width="1.5" stroke-dasharray="8 6"/>"#,
            frame.path_d(l)
        );
    }
    let _ = writeln!(
        svg,
        r#"<polyline class="path" points="{}" fill="none" stroke="{BLUE}" stroke-width="1.5"/>"#,
        frame.points(&path)
    );
    for d in &detections {
        let (x1, y1) = frame.px(d.from.0, d.from.1);
        let (x2, y2) = frame.px(d.at.0, d.at.1);
        let c = sensor_color(d.sensor);
        let _ = writeln!(
            svg,
            r#"<line class="ray {s}" data-id="{id}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{c}" stroke-width="1"/>"#,
            s = d.sensor,
            id = d.id
        );
        let _ = writeln!(
            svg,
            r#"<circle class="obstacle {s}" data-id="{id}" cx="{x2:.2}" cy="{y2:.2}" r="{r:.2}" fill="{c}"/>"#,
            s = d.sensor,
            id = d.id,
            r = PX_PER_M
        );
    }
    for &(id, x, y) in &undetected {
        let (cx, cy) = frame.px(x, y);
        let _ = writeln!(
            svg,
            r#"<circle class="obstacle undetected" data-id="{id}" cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{GRAY}"/>"#,
            r = PX_PER_M
        );
    }

    let (_, offset, _) = road.project(last.x, last.y);
    let box_color = match road.lane_index(offset) {
        LaneIndex::Lane(k) if k % 2 == 0 => BLUE,
        LaneIndex::Lane(_) => LIGHT_BLUE,
        LaneIndex::OffRoad => GRAY,
    };
    let (cx, cy) = frame.px(last.x, last.y);
    let (w, h) = (CAR_LENGTH * PX_PER_M, CAR_WIDTH * PX_PER_M);
    let _ = writeln!(
        svg,
        r#"<rect class="vehicle" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{box_color}" stroke="{BLACK}" transform="rotate({deg:.3} {cx:.2} {cy:.2})"/>"#,
        x = cx - w / 2.0,
        y = cy - h / 2.0,
        deg = -last.rot_z.to_degrees(),
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
