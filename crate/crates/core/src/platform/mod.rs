//! Motion cueing, interlocks, the platform command codec and a simulated
//! platform endpoint.

mod codec;
mod cueing;
mod endpoint;

pub use codec::{decode_command, encode_command, DecodeError, MAGIC, PACKET_LEN, VERSION};
pub use cueing::{
    cue, shake_offset, trigger_shake, CommandFlags, CueingGains, PlatformCommand, SafetyState,
    ShakeState, MAX_HEAVE, MAX_TILT, SHAKE_HEAVE,
};
pub use endpoint::{EndpointReport, IngestOutcome, PlatformEndpoint};
