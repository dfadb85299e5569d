//! Deterministic desk-scale driving simulator: a fixed 200 Hz loop over a
//! kinematic vehicle, motion-platform cueing with interlocks, idealized radar
//! and lane sensors, driver-distraction monitoring, CSV run logs and offline
//! analysis, plus a WebSocket bridge for a live cockpit.
//!
//! ```
//! use drivesim::telemetry::{run, ConstantInput, LoopConfig};
//! use drivesim::vehicle::DriverInput;
//! use drivesim::world::Scenario;
//!
//! let scenario = Scenario::from_json(r#"{
//!     "road": {"segments": [{"kind": "straight", "length": 500}], "lane_width": 3.5, "num_lanes": 2},
//!     "vehicle_start": [0, -1.75, 0, 0]
//! }"#).unwrap();
//! let log = run(&scenario, &LoopConfig::new(1.0), &mut ConstantInput(DriverInput::new(0.0, 1.0, 0.0))).unwrap();
//! assert_eq!(log.vehicle.len(), 200);
//! ```

pub mod analysis;
pub mod bridge;
pub mod monitor;
pub mod net;
pub mod platform;
pub mod rng;
pub mod sensors;
pub mod telemetry;
pub mod vehicle;
pub mod world;
