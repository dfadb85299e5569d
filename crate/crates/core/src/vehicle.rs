//! Fixed-step kinematic bicycle with a drag-free longitudinal model.
//!
//! Full throttle takes the car from rest to 60 mph in 12 s and full brake
//! from 60 mph to rest in 4 s. With no drag both targets hold exactly.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::world::{wrap_angle, Obstacle, StartState};

/// 60 mph in m/s.
pub const SIXTY_MPH: f64 = 26.8224;
/// Peak acceleration at full throttle, m/s².
pub const A_MAX: f64 = SIXTY_MPH / 12.0;
/// Peak deceleration at full brake, m/s².
pub const B_MAX: f64 = SIXTY_MPH / 4.0;

pub const VEHICLE_RADIUS: f64 = 2.0;
pub const OBSTACLE_RADIUS: f64 = 1.0;
pub const COLLISION_DISTANCE: f64 = VEHICLE_RADIUS + OBSTACLE_RADIUS;
/// Separation beyond the contact distance needed before an obstacle can collide again.
pub const COLLISION_HYSTERESIS: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum VehicleError {
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriverInput {
    /// [-1, 1], positive steers left.
    pub steering: f64,
    /// [0, 1]
    pub throttle: f64,
    /// [0, 1]
    pub brake: f64,
}

fn clamp_or_zero(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(lo, hi)
    }
}

impl DriverInput {
    pub fn new(steering: f64, throttle: f64, brake: f64) -> Self {
        Self {
            steering,
            throttle,
            brake,
        }
    }

    /// Clamps every field into range. NaN becomes 0.
    pub fn clamped(self) -> Self {
        Self {
            steering: clamp_or_zero(self.steering, -1.0, 1.0),
            throttle: clamp_or_zero(self.throttle, 0.0, 1.0),
            brake: clamp_or_zero(self.brake, 0.0, 1.0),
        }
    }

    pub fn is_in_range(&self) -> bool {
        *self == self.clamped()
    }
}

/// Vehicle-model constants. The values are configuration: the steering and
/// cue-source constants were never published for the original rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Road-wheel angle at full steering input, rad.
    pub max_steer: f64,
    /// Roll cue per unit lateral acceleration.
    pub k_roll_dyn: f64,
    /// Pitch cue per unit longitudinal acceleration.
    pub k_pitch_dyn: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            max_steer: 30f64.to_radians(),
            k_roll_dyn: 0.03,
            k_pitch_dyn: -0.02,
        }
    }
}

impl VehicleParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.wheelbase.is_finite() && self.wheelbase > 0.0) {
            return Err(("wheelbase", "must be positive"));
        }
        if !(self.max_steer.is_finite() && self.max_steer > 0.0 && self.max_steer < 1.5) {
            return Err(("max_steer", "must be in (0, 1.5) rad"));
        }
        if !self.k_roll_dyn.is_finite() {
            return Err(("k_roll_dyn", "must be finite"));
        }
        if !self.k_pitch_dyn.is_finite() {
            return Err(("k_pitch_dyn", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Roll cue source, rad.
    pub rot_x: f64,
    /// Pitch cue source, rad.
    pub rot_y: f64,
    /// Heading, rad in (-π, π].
    pub rot_z: f64,
    pub speed: f64,
    pub yaw_rate: f64,
    /// Virtual time in microseconds.
    pub t_us: u64,
}

impl VehicleState {
    pub fn at_start(start: &StartState) -> Self {
        Self {
            x: start.x,
            y: start.y,
            rot_z: wrap_angle(start.heading),
            speed: start.speed,
            ..Self::default()
        }
    }

    pub fn heading(&self) -> f64 {
        self.rot_z
    }

    pub fn t(&self) -> f64 {
        self.t_us as f64 * 1e-6
    }
}

/// Commanded longitudinal acceleration. No drag or rolling resistance.
pub fn longitudinal_accel(input: &DriverInput) -> f64 {
    A_MAX * input.throttle - B_MAX * input.brake
}

/// Advances the vehicle by one explicit-Euler step.
///
/// Position and heading use the pre-step speed. Speed is clamped at zero after
/// integration. The pitch cue uses the realized acceleration, so a stationary
/// car with the brake held produces no pitch.
pub fn step(
    state: &VehicleState,
    input: &DriverInput,
    params: &VehicleParams,
    dt: f64,
) -> Result<VehicleState, VehicleError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(VehicleError::BadTimeStep(dt));
    }
    let input = input.clamped();
    let accel = longitudinal_accel(&input);
    let delta = params.max_steer * input.steering;
    let v = state.speed;
    let yaw_rate = v * delta.tan() / params.wheelbase;
    let h = state.rot_z;
    let speed = (v + accel * dt).max(0.0);
    let realized = (speed - v) / dt;
    Ok(VehicleState {
        x: state.x + v * h.cos() * dt,
        y: state.y + v * h.sin() * dt,
        z: 0.0,
        rot_x: params.k_roll_dyn * v * yaw_rate,
        rot_y: params.k_pitch_dyn * realized,
        rot_z: wrap_angle(h + yaw_rate * dt),
        speed,
        yaw_rate,
        t_us: state.t_us + (dt * 1e6).round() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub obstacle_id: u32,
    pub t_us: u64,
    pub relative_speed: f64,
}

fn distance(vehicle: &VehicleState, o: &Obstacle) -> f64 {
    (o.x - vehicle.x).hypot(o.y - vehicle.y)
}

fn relative_speed(vehicle: &VehicleState, o: &Obstacle) -> f64 {
    let h = vehicle.rot_z;
    let dvx = vehicle.speed * h.cos() - o.speed * o.heading.cos();
    let dvy = vehicle.speed * h.sin() - o.speed * o.heading.sin();
    dvx.hypot(dvy)
}

/// Nearest overlapping obstacle, ties broken by smaller id. No hysteresis.
pub fn check_collision(vehicle: &VehicleState, obstacles: &[Obstacle]) -> Option<CollisionEvent> {
    obstacles
        .iter()
        .map(|o| (distance(vehicle, o), o))
        .filter(|(d, _)| *d < COLLISION_DISTANCE)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(_, o)| CollisionEvent {
            obstacle_id: o.id,
            t_us: vehicle.t_us,
            relative_speed: relative_speed(vehicle, o),
        })
}

/// Tracks contact episodes so each one yields a single event.
#[derive(Debug, Clone, Default)]
pub struct ContactTracker {
    in_contact: BTreeSet<u32>,
}

impl ContactTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn in_contact(&self, id: u32) -> bool {
        self.in_contact.contains(&id)
    }

    /// Updates contact episodes and returns an event for the nearest newly
    /// overlapping obstacle, if any.
    pub fn update(
        &mut self,
        vehicle: &VehicleState,
        obstacles: &[Obstacle],
    ) -> Option<CollisionEvent> {
        let mut fresh: Option<(f64, &Obstacle)> = None;
        for o in obstacles {
            let d = distance(vehicle, o);
            if self.in_contact.contains(&o.id) {
                if d > COLLISION_DISTANCE + COLLISION_HYSTERESIS {
                    self.in_contact.remove(&o.id);
                }
            } else if d < COLLISION_DISTANCE {
                self.in_contact.insert(o.id);
                let better = match fresh {
                    None => true,
                    Some((bd, bo)) => d < bd || (d == bd && o.id < bo.id),
                };
                if better {
                    fresh = Some((d, o));
                }
            }
        }
        fresh.map(|(_, o)| CollisionEvent {
            obstacle_id: o.id,
            t_us: vehicle.t_us,
            relative_speed: relative_speed(vehicle, o),
        })
    }
}

/// Vehicle plus moving obstacles, advanced together one tick at a time.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub vehicle: VehicleState,
    pub obstacles: Vec<Obstacle>,
    pub params: VehicleParams,
    contacts: ContactTracker,
}

impl Dynamics {
    pub fn new(vehicle: VehicleState, obstacles: Vec<Obstacle>, params: VehicleParams) -> Self {
        Self {
            vehicle,
            obstacles,
            params,
            contacts: ContactTracker::new(),
        }
    }

    /// Steps the vehicle, moves the obstacles, then checks for a new contact.
    pub fn step(
        &mut self,
        input: &DriverInput,
        dt: f64,
    ) -> Result<Option<CollisionEvent>, VehicleError> {
        self.vehicle = step(&self.vehicle, input, &self.params, dt)?;
        for o in &mut self.obstacles {
            o.advance(dt);
        }
        Ok(self.contacts.update(&self.vehicle, &self.obstacles))
    }
}
