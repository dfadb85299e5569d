//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Isometry2, Point2, UnitComplex, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use drivesim::monitor::{EpisodeChecker, PhoneEvent, PhoneEventKind, PhoneMode, PhoneSource};
use drivesim::sensors::{Mount, RadarConfig, RadarReading};
use drivesim::telemetry::TICK_US;
use drivesim::vehicle::VehicleState;
use drivesim::world::{Obstacle, Scenario};

pub fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).expect("fixture scenario")
}

/// Straight road, lane width 3.5, vehicle at rest centered in lane 0.
pub fn straight(num_lanes: u32, length: f64) -> Scenario {
    let start = -(f64::from(num_lanes) / 2.0 - 0.5) * 3.5;
    scenario(&format!(
        r#"{{"road": {{"segments": [{{"kind": "straight", "length": {length}}}], "lane_width": 3.5, "num_lanes": {num_lanes}}},
            "vehicle_start": [0, {start}, 0, 0], "seed": 11}}"#
    ))
}

pub fn with_speed(mut sc: Scenario, speed: f64) -> Scenario {
    sc.vehicle_start.speed = speed;
    sc
}

// ---- radar oracle ------------------------------------------------------------

/// Brute-force reference: rigid transform through nalgebra, sector test via
/// rotation composition instead of angle wrapping.
pub fn radar_oracle(
    cfg: &RadarConfig,
    v: &VehicleState,
    obstacles: &[Obstacle],
) -> Vec<RadarReading> {
    let body = Isometry2::new(Vector2::new(v.x, v.y), v.rot_z);
    let bore = UnitComplex::new(cfg.boresight);
    let mut out: Vec<RadarReading> = obstacles
        .iter()
        .filter_map(|o| {
            let p = body.inverse_transform_point(&Point2::new(o.x, o.y));
            let range = p.coords.norm();
            let azimuth = p.y.atan2(p.x);
            let off = bore.rotation_to(&UnitComplex::new(azimuth)).angle();
            (range <= cfg.max_range && off.abs() <= cfg.fov / 2.0).then_some(RadarReading {
                object_id: o.id,
                azimuth,
                elevation: 0.0,
                range,
                object_speed: o.speed,
                object_heading: o.heading,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.range
            .partial_cmp(&b.range)
            .unwrap()
            .then(a.object_id.cmp(&b.object_id))
    });
    out
}

pub struct RadarInstance {
    pub cfg: RadarConfig,
    pub vehicle: VehicleState,
    pub obstacles: Vec<Obstacle>,
}

pub fn random_radar_instance(rng: &mut ChaCha8Rng) -> RadarInstance {
    let mount = Mount::ALL[rng.random_range(0..3)];
    let cfg = RadarConfig {
        mount,
        boresight: rng.random_range(-PI..PI),
        fov: rng.random_range(0.05..=PI),
        max_range: rng.random_range(5.0..200.0),
    };
    let vehicle = VehicleState {
        x: rng.random_range(-500.0..500.0),
        y: rng.random_range(-500.0..500.0),
        rot_z: rng.random_range(-3.0 * PI..3.0 * PI),
        ..Default::default()
    };
    let n = rng.random_range(0..25);
    let obstacles = (0..n)
        .map(|i| Obstacle {
            id: i + 1,
            x: vehicle.x + rng.random_range(-220.0..220.0),
            y: vehicle.y + rng.random_range(-220.0..220.0),
            heading: rng.random_range(-PI..PI),
            speed: rng.random_range(0.0..40.0),
        })
        .collect();
    RadarInstance {
        cfg,
        vehicle,
        obstacles,
    }
}

/// Field-wise comparison; returns a description of the first mismatch.
pub fn compare_readings(
    got: &[RadarReading],
    want: &[RadarReading],
    tol: f64,
) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} readings, oracle has {}", got.len(), want.len()));
    }
    for (g, w) in got.iter().zip(want) {
        let fields = [
            (g.azimuth, w.azimuth),
            (g.elevation, w.elevation),
            (g.range, w.range),
            (g.object_speed, w.object_speed),
            (g.object_heading, w.object_heading),
        ];
        if g.object_id != w.object_id || fields.iter().any(|(a, b)| (a - b).abs() > tol) {
            return Err(format!("{g:?} != {w:?}"));
        }
    }
    Ok(())
}

// ---- phone statistics --------------------------------------------------------

pub struct RingStats {
    pub gaps: Vec<f64>,
    pub events: Vec<PhoneEvent>,
    pub order_errors: usize,
}

/// Drives a scripted phone source until `rings + 1` rings have sounded.
pub fn ring_gaps(seed: u64, rings: usize) -> RingStats {
    let mut src = PhoneSource::new(seed, PhoneMode::Scripted, TICK_US);
    let mut ring_times = vec![src.next_ring()];
    let mut events = Vec::new();
    let mut checker = EpisodeChecker::default();
    let mut order_errors = 0;
    while ring_times.len() <= rings {
        // jump straight to the tick holding the next ring
        let due = (ring_times.last().unwrap() * 1e6).ceil() as u64;
        let t_us = due.div_ceil(TICK_US) * TICK_US;
        for ev in src.phone_step(t_us) {
            if checker.accept(ev.kind).is_err() {
                order_errors += 1;
            }
            if ev.kind == PhoneEventKind::Ring {
                ring_times.push(src.next_ring());
            }
            events.push(ev);
        }
    }
    let gaps = ring_times
        .windows(2)
        .map(|w| w[1] - w[0])
        .take(rings)
        .collect();
    RingStats {
        gaps,
        events,
        order_errors,
    }
}

// ---- files -------------------------------------------------------------------

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// File name to SHA-256 for every regular file in `dir`.
pub fn dir_digests(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                sha256_hex(&std::fs::read(&p).unwrap()),
            )
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- plot fixture --------------------------------------------------------------

pub const PLOT_SCENARIO: &str = include_str!("../fixtures/plot_scenario.json");
pub const PLOT_GOLDEN_PATH: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/plot_golden.svg"
);

/// Four seconds of gentle weaving with front, left and right detections and
/// one obstacle that stays behind every sensor.
pub fn plot_fixture() -> (Scenario, drivesim::telemetry::RunLog) {
    use drivesim::telemetry::{run, FnInput, LoopConfig};
    use drivesim::vehicle::DriverInput;
    let sc = scenario(PLOT_SCENARIO);
    let log = run(
        &sc,
        &LoopConfig::new(4.0),
        &mut FnInput(|t: u64| Some(DriverInput::new(0.02 * (t as f64 * 0.01).sin(), 0.0, 0.0))),
    )
    .expect("fixture run");
    (sc, log)
}

/// Renders the fixture; with `DRIVESIM_BLESS=1` the golden file is rewritten.
pub fn plot_against_golden() -> Result<String, String> {
    let (sc, log) = plot_fixture();
    let svg = drivesim::analysis::render_plot(&log, &sc).map_err(|e| e.to_string())?;
    if std::env::var_os("DRIVESIM_BLESS").is_some() {
        std::fs::write(PLOT_GOLDEN_PATH, &svg).map_err(|e| e.to_string())?;
    }
    let golden = std::fs::read_to_string(PLOT_GOLDEN_PATH)
        .map_err(|e| format!("{PLOT_GOLDEN_PATH}: {e}"))?;
    if golden != svg {
        return Err(format!(
            "plot differs from golden (sha256 {} vs {})",
            sha256_hex(svg.as_bytes()),
            sha256_hex(golden.as_bytes())
        ));
    }
    Ok(svg)
}

/// Counts elements by tag and exact attribute fragment.
pub fn count_elements(svg: &str, tag: &str, fragment: &str) -> usize {
    svg.lines()
        .filter(|l| l.starts_with(&format!("<{tag} ")) && l.contains(fragment))
        .count()
}
