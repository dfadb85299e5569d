//! Scenario definition and road geometry.
//!
//! The road center line is a chain of constant-curvature segments starting at
//! `origin`. Heading is measured counter-clockwise from +x and lateral offsets
//! are positive to the left of the direction of travel.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::monitor::{HandTrack, TouchCalibration};
use crate::platform::CueingGains;
use crate::vehicle::VehicleParams;

/// Default look-ahead distances for the lane-marker sensor, in meters.
pub const DEFAULT_PREVIEW_DISTANCES: [f64; 3] = [10.0, 20.0, 30.0];

/// Extra margin beyond the curbs inside which a point still counts as "near" the road.
pub const OFF_ROAD_MARGIN: f64 = 10.0;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("arc length {s} outside road range [0, {total}]")]
    ArcLengthOutOfRange { s: f64, total: f64 },
    #[error("point ({x}, {y}) is {distance:.3} m from the road center line (limit {limit:.3} m)")]
    TooFarFromRoad {
        x: f64,
        y: f64,
        distance: f64,
        limit: f64,
    },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> WorldError {
    WorldError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Unit vector pointing to the left of the heading.
    pub fn left_normal(&self) -> (f64, f64) {
        (-self.heading.sin(), self.heading.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Straight,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadSegment {
    pub kind: SegmentKind,
    pub length: f64,
    /// Signed curvature in 1/m, positive curves left.
    pub curvature: f64,
}

impl RoadSegment {
    pub fn straight(length: f64) -> Self {
        Self {
            kind: SegmentKind::Straight,
            length,
            curvature: 0.0,
        }
    }

    pub fn arc(length: f64, curvature: f64) -> Self {
        Self {
            kind: SegmentKind::Arc,
            length,
            curvature,
        }
    }

    fn validate(&self, idx: usize) -> Result<(), WorldError> {
        let field = |name: &str| format!("road.segments[{idx}].{name}");
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid(field("length"), "must be a positive finite number"));
        }
        if !(self.curvature.is_finite() && self.curvature.abs() < 1.0) {
            return Err(invalid(field("curvature"), "magnitude must be below 1/m"));
        }
        match self.kind {
            SegmentKind::Straight if self.curvature != 0.0 => Err(invalid(
                field("curvature"),
                "straight segments have zero curvature",
            )),
            SegmentKind::Arc if self.curvature == 0.0 => Err(invalid(
                field("curvature"),
                "arc segments need nonzero curvature",
            )),
            _ => Ok(()),
        }
    }

    /// Pose reached after travelling `u` meters along the segment from `start`.
    pub fn advance(&self, start: Pose2, u: f64) -> Pose2 {
        let k = self.curvature;
        let h0 = start.heading;
        if k == 0.0 {
            Pose2::new(start.x + u * h0.cos(), start.y + u * h0.sin(), h0)
        } else {
            let h = h0 + k * u;
            Pose2::new(
                start.x + (h.sin() - h0.sin()) / k,
                start.y - (h.cos() - h0.cos()) / k,
                wrap_angle(h),
            )
        }
    }

    /// Nearest point parameter `u` in `[0, length]` to `(px, py)`.
    fn nearest_param(&self, start: Pose2, px: f64, py: f64) -> f64 {
        let k = self.curvature;
        if k == 0.0 {
            let (c, s) = (start.heading.cos(), start.heading.sin());
            let u = (px - start.x) * c + (py - start.y) * s;
            return u.clamp(0.0, self.length);
        }
        let (nx, ny) = start.left_normal();
        let cx = start.x + nx / k;
        let cy = start.y + ny / k;
        let (dx, dy) = (px - cx, py - cy);
        if dx == 0.0 && dy == 0.0 {
            // Every point on the arc is equidistant; smallest s wins.
            return 0.0;
        }
        let phi0 = start.heading - k.signum() * PI / 2.0;
        let psi = dy.atan2(dx);
        let sweep = ((psi - phi0) * k.signum()).rem_euclid(2.0 * PI);
        let u = sweep / k.abs();
        if u <= self.length {
            return u;
        }
        // Outside the swept angle the distance along the circle is monotone
        // towards each end, so the nearest point is an endpoint.
        let d = |u: f64| {
            let p = self.advance(start, u);
            (p.x - px).hypot(p.y - py)
        };
        if d(0.0) <= d(self.length) {
            0.0
        } else {
            self.length
        }
    }
}

/// Lane assignment for a lateral offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LaneIndex {
    Lane(u32),
    OffRoad,
}

impl fmt::Display for LaneIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LaneIndex::Lane(k) => write!(f, "{k}"),
            LaneIndex::OffRoad => f.write_str("OFF_ROAD"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    segments: Vec<RoadSegment>,
    /// Start arc length and start pose of each segment.
    starts: Vec<(f64, Pose2)>,
    total_length: f64,
    lane_width: f64,
    num_lanes: u32,
    origin: Pose2,
}

impl Road {
    pub fn new(
        segments: Vec<RoadSegment>,
        lane_width: f64,
        num_lanes: u32,
        origin: Pose2,
    ) -> Result<Self, WorldError> {
        if segments.is_empty() {
            return Err(invalid("road.segments", "at least one segment is required"));
        }
        for (i, seg) in segments.iter().enumerate() {
            seg.validate(i)?;
        }
        if !(lane_width.is_finite() && lane_width > 0.0) {
            return Err(invalid("road.lane_width", "must be positive"));
        }
        if num_lanes < 1 {
            return Err(invalid("road.num_lanes", "must be at least 1"));
        }
        if !(origin.x.is_finite() && origin.y.is_finite() && origin.heading.is_finite()) {
            return Err(invalid("road.origin", "must be finite"));
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut s = 0.0;
        let mut pose = origin;
        for seg in &segments {
            starts.push((s, pose));
            pose = seg.advance(pose, seg.length);
            s += seg.length;
        }
        Ok(Self {
            segments,
            starts,
            total_length: s,
            lane_width,
            num_lanes,
            origin,
        })
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn num_lanes(&self) -> u32 {
        self.num_lanes
    }

    pub fn origin(&self) -> Pose2 {
        self.origin
    }

    /// Distance from the center line to either curb.
    pub fn half_width(&self) -> f64 {
        f64::from(self.num_lanes) * self.lane_width / 2.0
    }

    /// Lateral offsets of every lane boundary, right curb first.
    pub fn boundary_offsets(&self) -> Vec<f64> {
        (0..=self.num_lanes)
            .map(|j| self.lane_right_boundary(j))
            .collect()
    }

    /// Offset of the right-hand boundary of lane `k` (lane 0 is rightmost).
    pub fn lane_right_boundary(&self, k: u32) -> f64 {
        (f64::from(k) - f64::from(self.num_lanes) / 2.0) * self.lane_width
    }

    pub fn lane_center(&self, k: u32) -> f64 {
        self.lane_right_boundary(k) + self.lane_width / 2.0
    }

    fn segment_index(&self, s: f64) -> usize {
        // Last segment whose start is <= s; the end point belongs to the final segment.
        self.starts
            .partition_point(|(s0, _)| *s0 <= s)
            .saturating_sub(1)
    }

    /// Center-line pose and signed curvature at arc length `s`.
    pub fn frame_at(&self, s: f64) -> Result<(Pose2, f64), WorldError> {
        if !(0.0..=self.total_length).contains(&s) {
            return Err(WorldError::ArcLengthOutOfRange {
                s,
                total: self.total_length,
            });
        }
        let i = self.segment_index(s);
        let (s0, start) = self.starts[i];
        let seg = &self.segments[i];
        let u = (s - s0).min(seg.length);
        Ok((seg.advance(start, u), seg.curvature))
    }

    /// Nearest center-line point without a proximity check.
    ///
    /// Returns `(s, signed offset, distance)`.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let mut best: Option<(f64, f64, f64)> = None;
        for (seg, &(s0, start)) in self.segments.iter().zip(&self.starts) {
            let u = seg.nearest_param(start, x, y);
            let q = seg.advance(start, u);
            let (dx, dy) = (x - q.x, y - q.y);
            let dist = dx.hypot(dy);
            if best.is_none_or(|(_, _, bd)| dist < bd) {
                let offset = q.heading.cos() * dy - q.heading.sin() * dx;
                best = Some((s0 + u, offset, dist));
            }
        }
        best.expect("road has at least one segment")
    }

    /// Arc length of the nearest center-line point and the signed lateral offset.
    pub fn lateral_offset(&self, x: f64, y: f64) -> Result<(f64, f64), WorldError> {
        let (s, offset, dist) = self.project(x, y);
        let limit = f64::from(self.num_lanes) * self.lane_width + OFF_ROAD_MARGIN;
        if dist > limit {
            return Err(WorldError::TooFarFromRoad {
                x,
                y,
                distance: dist,
                limit,
            });
        }
        Ok((s, offset))
    }

    /// Lane containing a lateral offset. A point exactly on a marker belongs
    /// to the lane on its right.
    pub fn lane_index(&self, offset: f64) -> LaneIndex {
        let half = self.half_width();
        if !offset.is_finite() || offset.abs() > half {
            return LaneIndex::OffRoad;
        }
        let from_left = ((half - offset) / self.lane_width).floor() as i64;
        let from_left = from_left.clamp(0, i64::from(self.num_lanes) - 1);
        LaneIndex::Lane(self.num_lanes - 1 - from_left as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl Obstacle {
    /// Constant-velocity straight-line motion.
    pub fn advance(&mut self, dt: f64) {
        self.x += self.speed * self.heading.cos() * dt;
        self.y += self.speed * self.heading.sin() * dt;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StartState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

/// The experiment world: road, obstacles, start state, seed and tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub road: Road,
    pub obstacles: Vec<Obstacle>,
    pub vehicle_start: StartState,
    pub seed: u64,
    pub gains: CueingGains,
    pub vehicle: VehicleParams,
    pub preview_distances: [f64; 3],
    pub hands: HandTrack,
    pub touch: TouchCalibration,
}

// ---- document form ---------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    kind: SegmentKind,
    length: f64,
    #[serde(default)]
    curvature: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadDoc {
    segments: Vec<SegmentDoc>,
    lane_width: f64,
    num_lanes: u32,
    #[serde(default)]
    origin: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    road: RoadDoc,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
    #[serde(default)]
    vehicle_start: Option<[f64; 4]>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    preview_distances: Option<[f64; 3]>,
    #[serde(default)]
    gains: GainsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hands: Option<HandTrack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    touch_calibration: Option<TouchCalibration>,
}

/// The `gains` block carries both cueing gains and vehicle-model constants.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    k_pitch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_roll: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_yaw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_heave: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shake_magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shake_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shake_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wheelbase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_roll_dyn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_pitch_dyn: Option<f64>,
}

impl Scenario {
    /// Parses and validates a JSON scenario document.
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| WorldError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: ScenarioDoc) -> Result<Self, WorldError> {
        let segments = doc
            .road
            .segments
            .iter()
            .map(|s| RoadSegment {
                kind: s.kind,
                length: s.length,
                curvature: s.curvature,
            })
            .collect();
        let [ox, oy, oh] = doc.road.origin;
        let road = Road::new(
            segments,
            doc.road.lane_width,
            doc.road.num_lanes,
            Pose2::new(ox, oy, oh),
        )?;

        let defaults = CueingGains::default();
        let c = &doc.gains;
        let gains = CueingGains {
            k_pitch: c.k_pitch.unwrap_or(defaults.k_pitch),
            k_roll: c.k_roll.unwrap_or(defaults.k_roll),
            k_yaw: c.k_yaw.unwrap_or(defaults.k_yaw),
            k_heave: c.k_heave.unwrap_or(defaults.k_heave),
            shake_magnitude: c.shake_magnitude.unwrap_or(defaults.shake_magnitude),
            shake_frequency: c.shake_frequency.unwrap_or(defaults.shake_frequency),
            shake_duration: c.shake_duration.unwrap_or(defaults.shake_duration),
        };
        gains
            .validate()
            .map_err(|(f, r)| invalid(format!("gains.{f}"), r))?;

        let vd = VehicleParams::default();
        let v = &doc.gains;
        let vehicle = VehicleParams {
            wheelbase: v.wheelbase.unwrap_or(vd.wheelbase),
            max_steer: v.max_steer.unwrap_or(vd.max_steer),
            k_roll_dyn: v.k_roll_dyn.unwrap_or(vd.k_roll_dyn),
            k_pitch_dyn: v.k_pitch_dyn.unwrap_or(vd.k_pitch_dyn),
        };
        vehicle
            .validate()
            .map_err(|(f, r)| invalid(format!("gains.{f}"), r))?;

        let preview = doc.preview_distances.unwrap_or(DEFAULT_PREVIEW_DISTANCES);
        if preview.iter().any(|d| !(d.is_finite() && *d > 0.0))
            || preview.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid(
                "preview_distances",
                "must be positive and strictly increasing",
            ));
        }

        let mut ids = std::collections::BTreeSet::new();
        for (i, o) in doc.obstacles.iter().enumerate() {
            if o.id == 0 {
                return Err(invalid(format!("obstacles[{i}].id"), "must be positive"));
            }
            if !ids.insert(o.id) {
                return Err(invalid(format!("obstacles[{i}].id"), "duplicate id"));
            }
            if !(o.speed.is_finite() && o.speed >= 0.0) {
                return Err(invalid(format!("obstacles[{i}].speed"), "must be >= 0"));
            }
            if ![o.x, o.y, o.heading].iter().all(|v| v.is_finite()) {
                return Err(invalid(format!("obstacles[{i}]"), "pose must be finite"));
            }
        }

        let vehicle_start = match doc.vehicle_start {
            Some([x, y, heading, speed]) => StartState {
                x,
                y,
                heading,
                speed,
            },
            None => {
                let o = road.origin();
                StartState {
                    x: o.x,
                    y: o.y,
                    heading: o.heading,
                    speed: 0.0,
                }
            }
        };
        if !(vehicle_start.speed.is_finite() && vehicle_start.speed >= 0.0) {
            return Err(invalid("vehicle_start", "speed must be >= 0"));
        }
        let (_, _, dist) = road.project(vehicle_start.x, vehicle_start.y);
        if dist.is_nan() || dist > f64::from(road.num_lanes()) * road.lane_width() {
            return Err(invalid(
                "vehicle_start",
                format!("{dist:.3} m from the center line, outside the road"),
            ));
        }

        let hands = doc.hands.unwrap_or_default();
        hands.validate().map_err(|r| invalid("hands", r))?;
        let touch = doc.touch_calibration.unwrap_or_default();
        touch
            .validate()
            .map_err(|r| invalid("touch_calibration", r))?;

        Ok(Scenario {
            road,
            obstacles: doc.obstacles,
            vehicle_start,
            seed: doc.seed,
            gains,
            vehicle,
            preview_distances: preview,
            hands,
            touch,
        })
    }

    /// Canonical JSON document; `from_json(to_json())` reproduces the scenario.
    pub fn to_json(&self) -> String {
        let g = &self.gains;
        let v = &self.vehicle;
        let o = self.road.origin();
        let s = &self.vehicle_start;
        let doc = ScenarioDoc {
            road: RoadDoc {
                segments: self
                    .road
                    .segments()
                    .iter()
                    .map(|seg| SegmentDoc {
                        kind: seg.kind,
                        length: seg.length,
                        curvature: seg.curvature,
                    })
                    .collect(),
                lane_width: self.road.lane_width(),
                num_lanes: self.road.num_lanes(),
                origin: [o.x, o.y, o.heading],
            },
            obstacles: self.obstacles.clone(),
            vehicle_start: Some([s.x, s.y, s.heading, s.speed]),
            seed: self.seed,
            preview_distances: Some(self.preview_distances),
            gains: GainsDoc {
                k_pitch: Some(g.k_pitch),
                k_roll: Some(g.k_roll),
                k_yaw: Some(g.k_yaw),
                k_heave: Some(g.k_heave),
                shake_magnitude: Some(g.shake_magnitude),
                shake_frequency: Some(g.shake_frequency),
                shake_duration: Some(g.shake_duration),
                wheelbase: Some(v.wheelbase),
                max_steer: Some(v.max_steer),
                k_roll_dyn: Some(v.k_roll_dyn),
                k_pitch_dyn: Some(v.k_pitch_dyn),
            },
            hands: Some(self.hands.clone()),
            touch_calibration: Some(self.touch),
        };
        serde_json::to_string_pretty(&doc).expect("scenario document serializes")
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn sha256(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
