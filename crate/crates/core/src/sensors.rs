//! Idealized radar and lane-marker sensors.
//!
//! The radar reports every obstacle inside its sector with exact geometry:
//! no noise, no occlusion. Elevation is always zero in the planar world.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::vehicle::VehicleState;
use crate::world::{wrap_angle, LaneIndex, Obstacle, Road, WorldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mount {
    Front,
    Left,
    Right,
}

impl Mount {
    pub const ALL: [Mount; 3] = [Mount::Front, Mount::Left, Mount::Right];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mount::Front => "front",
            Mount::Left => "left",
            Mount::Right => "right",
        }
    }
}

impl fmt::Display for Mount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "front" => Ok(Mount::Front),
            "left" => Ok(Mount::Left),
            "right" => Ok(Mount::Right),
            other => Err(format!("unknown sensor `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    pub mount: Mount,
    /// Body frame, rad, positive left.
    pub boresight: f64,
    /// Full sector width, rad.
    pub fov: f64,
    pub max_range: f64,
}

impl RadarConfig {
    /// Default geometry: front 90°/150 m, sides 90°/50 m.
    pub fn default_for(mount: Mount) -> Self {
        match mount {
            Mount::Front => Self {
                mount,
                boresight: 0.0,
                fov: FRAC_PI_2,
                max_range: 150.0,
            },
            Mount::Left => Self {
                mount,
                boresight: FRAC_PI_2,
                fov: FRAC_PI_2,
                max_range: 50.0,
            },
            Mount::Right => Self {
                mount,
                boresight: -FRAC_PI_2,
                fov: FRAC_PI_2,
                max_range: 50.0,
            },
        }
    }

    pub fn default_suite() -> [RadarConfig; 3] {
        Mount::ALL.map(Self::default_for)
    }

    pub fn is_valid(&self) -> bool {
        self.fov > 0.0
            && self.fov <= std::f64::consts::PI
            && self.max_range > 0.0
            && self.boresight.is_finite()
    }

    /// Whether a body-frame bearing and range fall inside the sector.
    pub fn covers(&self, azimuth: f64, range: f64) -> bool {
        range <= self.max_range && wrap_angle(azimuth - self.boresight).abs() <= self.fov / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarReading {
    pub object_id: u32,
    /// Body frame, rad, positive left.
    pub azimuth: f64,
    pub elevation: f64,
    pub range: f64,
    /// World-frame scalar speed of the object.
    pub object_speed: f64,
    /// World-frame heading of the object.
    pub object_heading: f64,
}

/// All obstacles inside the sensor's sector, sorted by range then id.
pub fn radar_scan(
    config: &RadarConfig,
    vehicle: &VehicleState,
    obstacles: &[Obstacle],
) -> Vec<RadarReading> {
    let (sin_h, cos_h) = vehicle.rot_z.sin_cos();
    let mut out: Vec<RadarReading> = obstacles
        .iter()
        .filter_map(|o| {
            let dx = o.x - vehicle.x;
            let dy = o.y - vehicle.y;
            let bx = cos_h * dx + sin_h * dy;
            let by = -sin_h * dx + cos_h * dy;
            let range = bx.hypot(by);
            let azimuth = by.atan2(bx);
            config.covers(azimuth, range).then_some(RadarReading {
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
            .total_cmp(&b.range)
            .then(a.object_id.cmp(&b.object_id))
    });
    out
}

/// Road data at one station.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaneStation {
    pub left_marker: f64,
    pub right_marker: f64,
    pub left_curb: f64,
    pub right_curb: f64,
    pub curvature: f64,
}

/// Station 0 is at the vehicle, stations 1..=3 at the preview distances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaneMarkerReading {
    pub stations: [LaneStation; 4],
}

/// Marker and curb distances for a lateral offset.
///
/// Inside the road the markers bound the lane from [`Road::lane_index`]. Off
/// the road the marker distances equal the signed curb distances, one of
/// which is negative.
pub fn boundary_distances(road: &Road, offset: f64) -> (f64, f64, f64, f64) {
    let half = road.half_width();
    let left_curb = half - offset;
    let right_curb = offset + half;
    match road.lane_index(offset) {
        LaneIndex::Lane(k) => {
            let rb = road.lane_right_boundary(k);
            let lb = road.lane_right_boundary(k + 1);
            (lb - offset, offset - rb, left_curb, right_curb)
        }
        LaneIndex::OffRoad => (left_curb, right_curb, left_curb, right_curb),
    }
}

fn scan_at(road: &Road, s_vehicle: f64, offset: f64, preview: &[f64; 3]) -> LaneMarkerReading {
    let total = road.total_length();
    let (left_marker, right_marker, left_curb, right_curb) = boundary_distances(road, offset);
    let mut reading = LaneMarkerReading::default();
    for (k, station) in reading.stations.iter_mut().enumerate() {
        let ahead = if k == 0 { 0.0 } else { preview[k - 1] };
        let s = (s_vehicle + ahead).clamp(0.0, total);
        let (_, curvature) = road
            .frame_at(s)
            .expect("station arc length is clamped into the road");
        *station = LaneStation {
            left_marker,
            right_marker,
            left_curb,
            right_curb,
            curvature,
        };
    }
    reading
}

/// Lane-marker sensor output at the vehicle and at three preview distances.
pub fn lane_scan(
    road: &Road,
    vehicle: &VehicleState,
    preview: &[f64; 3],
) -> Result<LaneMarkerReading, WorldError> {
    let (s, offset) = road.lateral_offset(vehicle.x, vehicle.y)?;
    Ok(scan_at(road, s, offset, preview))
}

/// Same as [`lane_scan`] without the proximity check, for logging a car that
/// has left the road entirely.
pub fn lane_scan_unchecked(
    road: &Road,
    vehicle: &VehicleState,
    preview: &[f64; 3],
) -> LaneMarkerReading {
    let (s, offset, _) = road.project(vehicle.x, vehicle.y);
    scan_at(road, s, offset, preview)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Pose2, RoadSegment};
    use std::f64::consts::PI;

    fn obstacle(id: u32, x: f64, y: f64) -> Obstacle {
        Obstacle {
            id,
            x,
            y,
            heading: 0.5,
            speed: 3.0,
        }
    }

    fn at(x: f64, y: f64, heading: f64) -> VehicleState {
        VehicleState {
            x,
            y,
            rot_z: heading,
            ..Default::default()
        }
    }

    #[test]
    fn front_boresight() {
        let r = radar_scan(
            &RadarConfig::default_for(Mount::Front),
            &at(0.0, 0.0, 0.0),
            &[obstacle(5, 10.0, 0.0)],
        );
        assert_eq!(
            r,
            vec![RadarReading {
                object_id: 5,
                azimuth: 0.0,
                elevation: 0.0,
                range: 10.0,
                object_speed: 3.0,
                object_heading: 0.5
            }]
        );
    }

    #[test]
    fn side_sensor_excludes_front_object() {
        let obs = [obstacle(5, 10.0, 0.0)];
        assert!(radar_scan(
            &RadarConfig::default_for(Mount::Left),
            &at(0.0, 0.0, 0.0),
            &obs
        )
        .is_empty());
        assert!(radar_scan(
            &RadarConfig::default_for(Mount::Right),
            &at(0.0, 0.0, 0.0),
            &obs
        )
        .is_empty());
    }

    #[test]
    fn side_sensors_use_body_frame() {
        // Heading north: an object to the west is on the left.
        let v = at(0.0, 0.0, PI / 2.0);
        let obs = [obstacle(1, -8.0, 0.0), obstacle(2, 8.0, 0.0)];
        let left = radar_scan(&RadarConfig::default_for(Mount::Left), &v, &obs);
        let right = radar_scan(&RadarConfig::default_for(Mount::Right), &v, &obs);
        assert_eq!(left.len(), 1);
        assert_eq!(left[0].object_id, 1);
        assert!((left[0].azimuth - PI / 2.0).abs() < 1e-12);
        assert_eq!(right[0].object_id, 2);
        assert!((right[0].azimuth + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn range_limit_and_ordering() {
        let obs = [
            obstacle(9, 20.0, 0.0),
            obstacle(4, 0.0, 20.0),
            obstacle(3, 20.0, 1.0),
            obstacle(8, 151.0, 0.0),
            obstacle(2, -20.0, 0.0),
        ];
        let r = radar_scan(
            &RadarConfig::default_for(Mount::Front),
            &at(0.0, 0.0, 0.0),
            &obs,
        );
        let ids: Vec<_> = r.iter().map(|x| x.object_id).collect();
        assert_eq!(ids, vec![9, 3]);
        // equal range: smaller id first
        let obs = [obstacle(7, 10.0, 1.0), obstacle(6, 10.0, -1.0)];
        let r = radar_scan(
            &RadarConfig::default_for(Mount::Front),
            &at(0.0, 0.0, 0.0),
            &obs,
        );
        assert_eq!(r[0].object_id, 6);
    }

    #[test]
    fn sector_edge_is_inclusive() {
        let cfg = RadarConfig::default_for(Mount::Front);
        assert!(cfg.covers(PI / 4.0, 10.0));
        assert!(!cfg.covers(PI / 4.0 + 1e-9, 10.0));
        assert!(cfg.covers(0.0, 150.0));
        assert!(!cfg.covers(0.0, 150.0 + 1e-9));
        // Wrapped difference across ±π.
        let rear = RadarConfig {
            mount: Mount::Front,
            boresight: PI,
            fov: 0.5,
            max_range: 10.0,
        };
        assert!(rear.covers(-PI + 0.1, 5.0));
    }

    fn two_lane(seg: RoadSegment) -> Road {
        Road::new(vec![seg], 3.5, 2, Pose2::default()).unwrap()
    }

    #[test]
    fn centered_in_lane_zero() {
        let road = two_lane(RoadSegment::straight(200.0));
        let r = lane_scan(&road, &at(50.0, -1.75, 0.0), &[10.0, 20.0, 30.0]).unwrap();
        for st in r.stations {
            assert_eq!(st.right_marker, 1.75);
            assert_eq!(st.right_curb, 1.75);
            assert_eq!(st.left_marker, 1.75);
            assert_eq!(st.left_curb, 5.25);
            assert_eq!(st.curvature, 0.0);
        }
    }

    /// Brute force over all boundary offsets: nearest boundary on each side.
    #[test]
    fn markers_match_boundary_enumeration() {
        let road = Road::new(
            vec![RoadSegment::straight(100.0)],
            3.25,
            4,
            Pose2::default(),
        )
        .unwrap();
        let bounds = road.boundary_offsets();
        for i in 0..=1000 {
            let off = -6.49 + 12.98 * f64::from(i) / 1000.0;
            if bounds.contains(&off) {
                continue;
            }
            let left = bounds
                .iter()
                .filter(|b| **b > off)
                .map(|b| b - off)
                .fold(f64::INFINITY, f64::min);
            let right = bounds
                .iter()
                .filter(|b| **b < off)
                .map(|b| off - b)
                .fold(f64::INFINITY, f64::min);
            let (lm, rm, lc, rc) = boundary_distances(&road, off);
            assert!((lm - left).abs() < 1e-12, "off {off}");
            assert!((rm - right).abs() < 1e-12, "off {off}");
            assert!((lm + rm - 3.25).abs() < 1e-9);
            assert!(lc >= lm && rc >= rm);
        }
    }

    #[test]
    fn on_marker_belongs_to_right_lane() {
        let road = two_lane(RoadSegment::straight(100.0));
        let (lm, rm, _, _) = boundary_distances(&road, 0.0);
        assert_eq!((lm, rm), (0.0, 3.5));
    }

    #[test]
    fn off_road_distances_are_signed_curbs() {
        let road = two_lane(RoadSegment::straight(100.0));
        let (lm, rm, lc, rc) = boundary_distances(&road, 4.0);
        assert_eq!((lm, rm, lc, rc), (-0.5, 7.5, -0.5, 7.5));
    }

    #[test]
    fn arc_curvature_at_every_station() {
        let road = two_lane(RoadSegment::arc(300.0, 0.01));
        let (p, _) = road.frame_at(40.0).unwrap();
        let r = lane_scan(&road, &at(p.x, p.y, p.heading), &[10.0, 20.0, 30.0]).unwrap();
        assert!(r.stations.iter().all(|s| s.curvature == 0.01));
    }

    #[test]
    fn preview_clamps_at_road_end() {
        let road = Road::new(
            vec![RoadSegment::straight(100.0), RoadSegment::arc(20.0, -0.02)],
            3.5,
            2,
            Pose2::default(),
        )
        .unwrap();
        let r = lane_scan(&road, &at(95.0, 0.5, 0.0), &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.stations[0].curvature, 0.0);
        assert_eq!(r.stations[1].curvature, -0.02);
        assert_eq!(r.stations[3].curvature, -0.02);
    }

    #[test]
    fn vehicle_far_off_road_errors() {
        let road = two_lane(RoadSegment::straight(100.0));
        assert!(lane_scan(&road, &at(50.0, 30.0, 0.0), &[10.0, 20.0, 30.0]).is_err());
        let r = lane_scan_unchecked(&road, &at(50.0, 30.0, 0.0), &[10.0, 20.0, 30.0]);
        assert_eq!(r.stations[0].left_curb, -26.5);
    }
}
