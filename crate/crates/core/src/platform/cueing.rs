use std::f64::consts::PI;

use bitflags::bitflags;

use crate::vehicle::VehicleState;

/// ±20° pitch and roll envelope.
pub const MAX_TILT: f32 = 0.349_065_86;
/// ±0.1 m heave envelope.
pub const MAX_HEAVE: f32 = 0.1;
/// Heave excursion of the shake at full pitch amplitude, m.
pub const SHAKE_HEAVE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CueingGains {
    pub k_pitch: f64,
    pub k_roll: f64,
    pub k_yaw: f64,
    pub k_heave: f64,
    /// Peak pitch amplitude of the collision shake, rad.
    pub shake_magnitude: f64,
    pub shake_frequency: f64,
    pub shake_duration: f64,
}

impl Default for CueingGains {
    fn default() -> Self {
        Self {
            k_pitch: 1.0,
            k_roll: 1.0,
            k_yaw: 1.0,
            k_heave: 1.0,
            shake_magnitude: 0.05,
            shake_frequency: 8.0,
            shake_duration: 1.0,
        }
    }
}

impl CueingGains {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        let finite = [
            ("k_pitch", self.k_pitch),
            ("k_roll", self.k_roll),
            ("k_yaw", self.k_yaw),
            ("k_heave", self.k_heave),
            ("shake_magnitude", self.shake_magnitude),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err((name, "must be finite"));
            }
        }
        if !(self.shake_frequency.is_finite() && self.shake_frequency > 0.0) {
            return Err(("shake_frequency", "must be positive"));
        }
        if !(self.shake_duration.is_finite() && self.shake_duration > 0.0) {
            return Err(("shake_duration", "must be positive"));
        }
        Ok(())
    }
}

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct CommandFlags: u8 {
        const SHAKE_ACTIVE = 0x01;
        const ESTOP = 0x02;
        const MOTION_ENABLED = 0x04;
    }
}

/// One four-axis platform command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlatformCommand {
    pub seq: u32,
    pub t_us: u64,
    pub pitch: f32,
    pub roll: f32,
    pub yaw: f32,
    pub heave: f32,
    pub flags: CommandFlags,
}

impl PlatformCommand {
    pub fn axes(&self) -> [f32; 4] {
        [self.pitch, self.roll, self.yaw, self.heave]
    }

    pub fn within_envelope(&self) -> bool {
        self.pitch.abs() <= MAX_TILT && self.roll.abs() <= MAX_TILT && self.heave.abs() <= MAX_HEAVE
    }
}

/// Interlock inputs: entry gate, seat belt and the two kill-switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SafetyState {
    pub gate_closed: bool,
    pub seatbelt_on: bool,
    pub estop_local: bool,
    pub estop_remote: bool,
}

impl Default for SafetyState {
    /// Gate closed, belt on, no kill-switch pressed.
    fn default() -> Self {
        Self::all_ok()
    }
}

impl SafetyState {
    pub fn all_ok() -> Self {
        Self {
            gate_closed: true,
            seatbelt_on: true,
            estop_local: false,
            estop_remote: false,
        }
    }

    pub fn motion_permitted(&self) -> bool {
        self.gate_closed && self.seatbelt_on && !self.estop_local && !self.estop_remote
    }

    pub fn estop(&self) -> bool {
        self.estop_local || self.estop_remote
    }

    /// All 16 combinations, in bit order (gate, belt, local, remote).
    pub fn enumerate() -> impl Iterator<Item = SafetyState> {
        (0u8..16).map(|b| SafetyState {
            gate_closed: b & 1 != 0,
            seatbelt_on: b & 2 != 0,
            estop_local: b & 4 != 0,
            estop_remote: b & 8 != 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShakeState {
    pub active: bool,
    pub t_start: f64,
    pub magnitude: f64,
}

impl ShakeState {
    /// Whether the envelope is still running at time `t`.
    pub fn is_active_at(&self, gains: &CueingGains, t: f64) -> bool {
        self.active && !expired(t - self.t_start, gains.shake_duration)
    }
}

/// Virtual time is whole microseconds; compare at half that resolution so
/// `t_start + duration` lands on the expired side despite rounding.
fn expired(tau: f64, duration: f64) -> bool {
    tau >= duration - 0.5e-6
}

/// Starts (or restarts) the collision shake at time `t`.
pub fn trigger_shake(gains: &CueingGains, t: f64) -> ShakeState {
    ShakeState {
        active: true,
        t_start: t,
        magnitude: gains.shake_magnitude,
    }
}

/// Pitch and heave offsets of the decaying-sinusoid shake envelope.
pub fn shake_offset(shake: &ShakeState, gains: &CueingGains, t: f64) -> (f64, f64) {
    let tau = t - shake.t_start;
    if !shake.active || tau < 0.0 || expired(tau, gains.shake_duration) {
        return (0.0, 0.0);
    }
    let pitch = shake.magnitude
        * (-3.0 * tau / gains.shake_duration).exp()
        * (2.0 * PI * gains.shake_frequency * tau).sin();
    let heave = SHAKE_HEAVE * pitch / shake.magnitude.abs().max(f64::EPSILON);
    (pitch, heave)
}

fn clamp_axis(v: f64, limit: f32) -> f32 {
    (v as f32).clamp(-limit, limit)
}

/// Maps the vehicle state to a platform command, honoring the interlocks.
pub fn cue(
    vstate: &VehicleState,
    gains: &CueingGains,
    shake: &ShakeState,
    safety: &SafetyState,
    seq: u32,
) -> PlatformCommand {
    let mut cmd = PlatformCommand {
        seq,
        t_us: vstate.t_us,
        ..PlatformCommand::default()
    };
    if safety.estop() {
        cmd.flags |= CommandFlags::ESTOP;
    }
    if !safety.motion_permitted() {
        return cmd;
    }
    let t = vstate.t();
    let (pitch_off, heave_off) = shake_offset(shake, gains, t);
    cmd.pitch = clamp_axis(gains.k_pitch * vstate.rot_y + pitch_off, MAX_TILT);
    cmd.roll = clamp_axis(gains.k_roll * vstate.rot_x, MAX_TILT);
    cmd.yaw = (gains.k_yaw * vstate.rot_z) as f32;
    cmd.heave = clamp_axis(gains.k_heave * vstate.z + heave_off, MAX_HEAVE);
    cmd.flags |= CommandFlags::MOTION_ENABLED;
    if shake.is_active_at(gains, t) {
        cmd.flags |= CommandFlags::SHAKE_ACTIVE;
    }
    cmd
}
