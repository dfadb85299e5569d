//! The 200 Hz simulation loop, run logs and replay.
//!
//! Virtual time is the only clock the simulation reads. Every record of tick
//! `n` (0-based) is stamped with the virtual time at the end of that tick,
//! `(n + 1) * 5000` µs. Wall-clock pacing, when enabled, only sleeps between
//! ticks and never feeds back into state.

mod input;
mod log;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

pub use self::input::{
    replay, ConstantInput, FnInput, InputSource, SafetyPatch, ScriptedInput, TickInput,
};
pub use self::log::{
    read_header, read_log, read_run_scenario, write_log, write_run_scenario, InputRow, LaneRow,
    LogHeader, PhoneRow, PlatformRow, RadarRow, RunLog, TouchRow, VehicleRow, HEADER_FILE,
    SCENARIO_FILE, TABLES,
};

use crate::analysis::{nearest_objects, NearestObjects};
use crate::bridge::{SafetyFlags, Snapshot};
use crate::monitor::{
    encode_phone, encode_touch, sample_touch, PhoneEventKind, PhoneMode, PhoneSource, TouchSample,
    TOUCH_PERIOD_US,
};
use crate::net::UdpSinks;
use crate::platform::{
    cue, encode_command, trigger_shake, EndpointReport, PlatformEndpoint, SafetyState, ShakeState,
};
use crate::sensors::{lane_scan_unchecked, radar_scan, RadarConfig};
use crate::vehicle::{CollisionEvent, Dynamics, VehicleError, VehicleState};
use crate::world::Scenario;

/// Loop period in seconds (200 Hz).
pub const TICK: f64 = 0.005;
pub const TICK_US: u64 = 5_000;
/// Live snapshots go out every 10th tick (20 Hz).
pub const SNAPSHOT_EVERY: u64 = 10;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{file}: column `{column}` {problem}")]
    Schema {
        file: String,
        column: String,
        problem: &'static str,
    },
    #[error("missing table {0}")]
    MissingTable(PathBuf),
    #[error("{path}: {message}")]
    Scenario { path: PathBuf, message: String },
    #[error("input source exhausted at tick {tick}")]
    InputExhausted { tick: u64 },
    #[error("duration must be a positive multiple of the 5 ms tick, got {0} s")]
    BadDuration(f64),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
}

impl TelemetryError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TelemetryError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    /// Virtual seconds to simulate.
    pub duration: f64,
    /// Pace ticks against the wall clock.
    pub realtime: bool,
    /// Overrides the scenario seed when set.
    pub seed: Option<u64>,
}

impl LoopConfig {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            realtime: false,
            seed: None,
        }
    }

    /// Number of ticks; the duration must land on the tick grid.
    pub fn ticks(&self) -> Result<u64, TelemetryError> {
        let n = (self.duration / TICK).round();
        if !(self.duration > 0.0 && n >= 1.0 && (n * TICK - self.duration).abs() < 1e-9) {
            return Err(TelemetryError::BadDuration(self.duration));
        }
        Ok(n as u64)
    }
}

pub fn artifact_version() -> String {
    format!("drivesim {}", env!("CARGO_PKG_VERSION"))
}

/// Loop state owned by the simulation thread.
pub struct Simulator {
    scenario: Scenario,
    dynamics: Dynamics,
    safety: SafetyState,
    shake: ShakeState,
    seq: u32,
    tick: u64,
    endpoint: PlatformEndpoint,
    phone: PhoneSource,
    radars: [RadarConfig; 3],
    sinks: Option<UdpSinks>,
    touch_seq: u32,
    phone_seq: u32,
    last_touch: TouchSample,
    last_radar: Vec<RadarRow>,
    last_phone: Option<PhoneEventKind>,
    pending_question: Option<String>,
    collisions: Vec<CollisionEvent>,
    clamped_inputs: u64,
    log: RunLog,
}

impl Simulator {
    pub fn new(scenario: &Scenario, seed: u64, phone_mode: PhoneMode) -> Self {
        let vehicle = VehicleState::at_start(&scenario.vehicle_start);
        let header = LogHeader {
            scenario_sha256: scenario.sha256(),
            seed,
            tick: TICK,
            version: artifact_version(),
        };
        Self {
            dynamics: Dynamics::new(vehicle, scenario.obstacles.clone(), scenario.vehicle),
            scenario: scenario.clone(),
            safety: SafetyState::all_ok(),
            shake: ShakeState::default(),
            seq: 0,
            tick: 0,
            endpoint: PlatformEndpoint::new(),
            phone: PhoneSource::new(seed, phone_mode, TICK_US),
            radars: RadarConfig::default_suite(),
            sinks: None,
            touch_seq: 0,
            phone_seq: 0,
            last_touch: TouchSample {
                t_us: 0,
                quadrants: [false; 4],
            },
            last_radar: Vec::new(),
            last_phone: None,
            pending_question: None,
            collisions: Vec::new(),
            clamped_inputs: 0,
            log: RunLog::new(header),
        }
    }

    pub fn with_sinks(mut self, sinks: UdpSinks) -> Self {
        self.sinks = Some(sinks);
        self
    }

    pub fn with_safety(mut self, safety: SafetyState) -> Self {
        self.safety = safety;
        self
    }

    pub fn ticks_done(&self) -> u64 {
        self.tick
    }

    pub fn vehicle(&self) -> &VehicleState {
        &self.dynamics.vehicle
    }

    pub fn safety(&self) -> SafetyState {
        self.safety
    }

    pub fn endpoint(&self) -> &PlatformEndpoint {
        &self.endpoint
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    /// Advances one tick: input, dynamics, shake, cueing, platform packet,
    /// radar, lane sensor, touch (every other tick) and phone events.
    pub fn step(&mut self, input: &TickInput) -> Result<(), TelemetryError> {
        let t_us = (self.tick + 1) * TICK_US;
        let t = t_us as f64 * 1e-6;
        let driver = input.driver.clamped();
        if driver != input.driver {
            self.clamped_inputs += 1;
        }
        apply_safety(&mut self.safety, &input.safety);

        if let Some(ev) = self.dynamics.step(&driver, TICK)? {
            self.shake = trigger_shake(&self.scenario.gains, t);
            self.collisions.push(ev);
        }
        let v = self.dynamics.vehicle;
        debug_assert_eq!(v.t_us, t_us);

        let cmd = cue(
            &v,
            &self.scenario.gains,
            &self.shake,
            &self.safety,
            self.seq,
        );
        self.seq = self.seq.wrapping_add(1);
        let packet = encode_command(&cmd);
        if let Some(s) = &mut self.sinks {
            s.send_platform(&packet);
        }
        self.endpoint.ingest(&packet);

        self.last_radar.clear();
        for cfg in &self.radars {
            for r in radar_scan(cfg, &v, &self.dynamics.obstacles) {
                self.last_radar.push(RadarRow {
                    t_us,
                    sensor: cfg.mount,
                    object_id: r.object_id,
                    azimuth: r.azimuth,
                    elevation: r.elevation,
                    range: r.range,
                    object_speed: r.object_speed,
                    object_heading: r.object_heading,
                });
            }
        }
        let lane = lane_scan_unchecked(&self.scenario.road, &v, &self.scenario.preview_distances);

        let log = &mut self.log;
        log.input.push(InputRow {
            t_us,
            steering: driver.steering,
            throttle: driver.throttle,
            brake: driver.brake,
        });
        log.vehicle.push(VehicleRow {
            t_us,
            x: v.x,
            y: v.y,
            z: v.z,
            rot_x: v.rot_x,
            rot_y: v.rot_y,
            rot_z: v.rot_z,
            speed: v.speed,
            heading: v.heading(),
            yaw_rate: v.yaw_rate,
        });
        log.platform.push(PlatformRow {
            t_us,
            seq: cmd.seq,
            pitch: cmd.pitch,
            roll: cmd.roll,
            yaw: cmd.yaw,
            heave: cmd.heave,
            flags: cmd.flags.bits(),
        });
        log.radar.extend_from_slice(&self.last_radar);
        for (k, st) in lane.stations.iter().enumerate() {
            log.lane.push(LaneRow {
                t_us,
                station: k as u8,
                left_marker: st.left_marker,
                right_marker: st.right_marker,
                left_curb: st.left_curb,
                right_curb: st.right_curb,
                curvature: st.curvature,
            });
        }

        if t_us.is_multiple_of(TOUCH_PERIOD_US) {
            let hands = self.scenario.hands.distances_at(t);
            let sample = sample_touch(&hands, &self.scenario.touch, t_us)
                .expect("touch sampled on the 10 ms grid");
            let [q1, q2, q3, q4] = sample.quadrants.map(u8::from);
            log.touch.push(TouchRow {
                t_us,
                q1,
                q2,
                q3,
                q4,
            });
            if let Some(s) = &mut self.sinks {
                s.send_touch(&encode_touch(self.touch_seq, &sample));
            }
            self.touch_seq = self.touch_seq.wrapping_add(1);
            self.last_touch = sample;
        }

        let mut events = self.phone.phone_step(t_us);
        for &kind in &input.phone {
            match self.phone.acknowledge(kind, t_us) {
                Ok(ev) => events.push(ev),
                Err(e) => ::log::warn!("ignoring phone response at {t_us} us: {e}"),
            }
        }
        for ev in events {
            match ev.kind {
                PhoneEventKind::Ring => self.pending_question = Some(ev.question.clone()),
                PhoneEventKind::Pickup => self.pending_question = None,
                _ => {}
            }
            self.last_phone = Some(ev.kind);
            if let Some(s) = &mut self.sinks {
                s.send_phone(&encode_phone(self.phone_seq, &ev));
            }
            self.phone_seq = self.phone_seq.wrapping_add(1);
            self.log.phone.push(PhoneRow {
                t_us: ev.t_us,
                kind: ev.kind,
                question: ev.question,
            });
        }

        self.tick += 1;
        Ok(())
    }

    /// Copy of the operator-facing state at the current tick.
    pub fn snapshot(&self) -> Snapshot {
        let v = &self.dynamics.vehicle;
        let t_us = self.tick * TICK_US;
        let nearest: NearestObjects = nearest_objects(t_us, &self.last_radar);
        let (_, offset, _) = self.scenario.road.project(v.x, v.y);
        let lane_index = self.scenario.road.lane_index(offset);
        Snapshot {
            t_us,
            x: v.x,
            y: v.y,
            heading: v.heading(),
            speed: v.speed,
            attitude: self.endpoint.attitude().into(),
            safety: SafetyFlags::from(self.safety),
            shake_active: self.shake.is_active_at(&self.scenario.gains, v.t()),
            nearest,
            lane_index,
            touch: self.last_touch.quadrants,
            last_phone_event: self.last_phone,
            question: self.pending_question.clone(),
        }
    }

    pub fn finish(self) -> RunOutput {
        RunOutput {
            report: self.endpoint.report(),
            collisions: self.collisions,
            clamped_inputs: self.clamped_inputs,
            send_errors: self.sinks.as_ref().map_or(0, |s| s.send_errors()),
            log: self.log,
        }
    }
}

fn apply_safety(safety: &mut SafetyState, patch: &SafetyPatch) {
    if let Some(v) = patch.gate_closed {
        safety.gate_closed = v;
    }
    if let Some(v) = patch.seatbelt_on {
        safety.seatbelt_on = v;
    }
    if let Some(v) = patch.estop_local {
        safety.estop_local = v;
    }
    if let Some(v) = patch.estop_remote {
        safety.estop_remote = v;
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    pub report: EndpointReport,
    pub collisions: Vec<CollisionEvent>,
    /// Ticks whose driver input had to be clamped.
    pub clamped_inputs: u64,
    pub send_errors: u64,
}

/// Optional extras for [`run_with`].
pub type SnapshotHook<'a> = Box<dyn FnMut(&Snapshot) + 'a>;

pub struct RunOptions<'a> {
    pub phone_mode: PhoneMode,
    pub sinks: Option<UdpSinks>,
    pub initial_safety: SafetyState,
    /// Called every [`SNAPSHOT_EVERY`] ticks.
    pub on_snapshot: Option<SnapshotHook<'a>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            phone_mode: PhoneMode::Scripted,
            sinks: None,
            initial_safety: SafetyState::all_ok(),
            on_snapshot: None,
        }
    }
}

/// Runs the loop headless with default options.
pub fn run(
    scenario: &Scenario,
    config: &LoopConfig,
    driver: &mut dyn InputSource,
) -> Result<RunLog, TelemetryError> {
    run_with(scenario, config, driver, RunOptions::default()).map(|o| o.log)
}

pub fn run_with(
    scenario: &Scenario,
    config: &LoopConfig,
    driver: &mut dyn InputSource,
    mut opts: RunOptions<'_>,
) -> Result<RunOutput, TelemetryError> {
    let ticks = config.ticks()?;
    let seed = config.seed.unwrap_or(scenario.seed);
    let mut sim = Simulator::new(scenario, seed, opts.phone_mode).with_safety(opts.initial_safety);
    if let Some(sinks) = opts.sinks.take() {
        sim = sim.with_sinks(sinks);
    }
    let start = Instant::now();
    for tick in 0..ticks {
        let input = driver
            .next_input(tick)
            .ok_or(TelemetryError::InputExhausted { tick })?;
        sim.step(&input)?;
        if sim.ticks_done().is_multiple_of(SNAPSHOT_EVERY) {
            if let Some(cb) = opts.on_snapshot.as_mut() {
                cb(&sim.snapshot());
            }
        }
        if config.realtime {
            let due = start + Duration::from_micros((tick + 1) * TICK_US);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
    }
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::DriverInput;

    fn straight_scenario() -> Scenario {
        Scenario::from_json(
            r#"{"road": {"segments": [{"kind": "straight", "length": 1000}], "lane_width": 3.5, "num_lanes": 2},
                "vehicle_start": [0, -1.75, 0, 0], "seed": 5}"#,
        )
        .unwrap()
    }

    #[test]
    fn tick_counts() {
        assert_eq!(LoopConfig::new(10.0).ticks().unwrap(), 2000);
        assert_eq!(LoopConfig::new(0.005).ticks().unwrap(), 1);
        assert!(LoopConfig::new(0.0).ticks().is_err());
        assert!(LoopConfig::new(0.0123).ticks().is_err());
    }

    #[test]
    fn table_sizes_for_ten_seconds() {
        let log = run(
            &straight_scenario(),
            &LoopConfig::new(10.0),
            &mut ConstantInput(DriverInput::default()),
        )
        .unwrap();
        assert_eq!(log.vehicle.len(), 2000);
        assert_eq!(log.input.len(), 2000);
        assert_eq!(log.platform.len(), 2000);
        assert_eq!(log.lane.len(), 8000);
        assert_eq!(log.touch.len(), 1000);
        assert!(log.touch.iter().all(|r| r.t_us % 10_000 == 0));
        let seqs: Vec<u32> = log.platform.iter().map(|p| p.seq).collect();
        assert_eq!(seqs, (0..2000).collect::<Vec<_>>());
    }

    #[test]
    fn zero_input_stays_put() {
        let sc = straight_scenario();
        let log = run(
            &sc,
            &LoopConfig::new(2.0),
            &mut ConstantInput(DriverInput::default()),
        )
        .unwrap();
        let last = log.vehicle.last().unwrap();
        assert_eq!((last.x, last.y, last.speed), (0.0, -1.75, 0.0));
    }

    #[test]
    fn exhausted_input_reports_tick() {
        let sc = straight_scenario();
        let mut script = ScriptedInput::new(vec![DriverInput::default(); 7]);
        match run(&sc, &LoopConfig::new(1.0), &mut script) {
            Err(TelemetryError::InputExhausted { tick }) => assert_eq!(tick, 7),
            other => panic!("unexpected {other:?}"),
        }
        let mut empty = ScriptedInput::default();
        assert!(matches!(
            run(&sc, &LoopConfig::new(1.0), &mut empty),
            Err(TelemetryError::InputExhausted { tick: 0 })
        ));
    }

    #[test]
    fn clamped_inputs_are_counted_and_logged_clamped() {
        let sc = straight_scenario();
        let out = run_with(
            &sc,
            &LoopConfig::new(0.05),
            &mut ConstantInput(DriverInput::new(4.0, 2.0, 0.0)),
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.clamped_inputs, 10);
        assert!(out
            .log
            .input
            .iter()
            .all(|r| r.steering == 1.0 && r.throttle == 1.0));
    }

    #[test]
    fn snapshots_every_tenth_tick() {
        let sc = straight_scenario();
        let mut stamps = Vec::new();
        run_with(
            &sc,
            &LoopConfig::new(1.0),
            &mut ConstantInput(DriverInput::default()),
            RunOptions {
                on_snapshot: Some(Box::new(|s: &Snapshot| stamps.push(s.t_us))),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(stamps.len(), 20);
        assert_eq!(stamps[0], 50_000);
        assert_eq!(*stamps.last().unwrap(), 1_000_000);
    }

    #[test]
    fn estop_patch_reaches_platform() {
        let sc = straight_scenario();
        let mut sim = Simulator::new(&sc, 1, PhoneMode::Scripted);
        sim.step(&TickInput::default()).unwrap();
        assert!(!sim.endpoint().estopped());
        let stop = TickInput {
            safety: SafetyPatch {
                estop_remote: Some(true),
                ..Default::default()
            },
            ..Default::default()
        };
        sim.step(&stop).unwrap();
        let row = sim.log().platform.last().unwrap();
        assert_eq!(row.flags & 0x02, 0x02);
        assert_eq!([row.pitch, row.roll, row.yaw, row.heave], [0.0; 4]);
        assert!(sim.endpoint().estopped());
        // latched until explicitly cleared
        sim.step(&TickInput::default()).unwrap();
        assert!(sim.endpoint().estopped());
        let clear = TickInput {
            safety: SafetyPatch {
                estop_remote: Some(false),
                ..Default::default()
            },
            ..Default::default()
        };
        sim.step(&clear).unwrap();
        assert!(!sim.endpoint().estopped());
    }

    #[test]
    fn collision_triggers_shake() {
        let sc = Scenario::from_json(
            r#"{"road": {"segments": [{"kind": "straight", "length": 1000}], "lane_width": 3.5, "num_lanes": 2},
                "vehicle_start": [0, -1.75, 0, 10],
                "obstacles": [{"id": 3, "x": 20, "y": -1.75, "heading": 0, "speed": 0}]}"#,
        )
        .unwrap();
        let out = run_with(
            &sc,
            &LoopConfig::new(3.0),
            &mut ConstantInput(DriverInput::default()),
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.collisions.len(), 1);
        let hit = out.collisions[0];
        assert_eq!(hit.obstacle_id, 3);
        let shaking: Vec<_> = out
            .log
            .platform
            .iter()
            .filter(|p| p.flags & 0x01 != 0)
            .collect();
        // 1 s shake at 200 Hz
        assert_eq!(shaking.len(), 200);
        assert_eq!(shaking[0].t_us, hit.t_us);
        assert!(out.log.radar.iter().any(|r| r.object_id == 3));
    }
}
