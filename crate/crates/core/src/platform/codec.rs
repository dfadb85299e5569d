//! Fixed 38-byte platform command datagram.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FD01"
//!      4     1  version (1)
//!      5     1  flags (bit0 shake, bit1 estop, bit2 motion enabled)
//!      6     4  seq        u32 LE
//!     10     8  t_us       u64 LE
//!     18    16  pitch, roll, yaw, heave   f32 LE
//!     34     4  CRC-32 (IEEE, reflected) of bytes 0..34, LE
//! ```

use thiserror::Error;

use super::cueing::{CommandFlags, PlatformCommand};

pub const MAGIC: [u8; 4] = *b"FD01";
pub const VERSION: u8 = 1;
pub const PACKET_LEN: usize = 38;
const CRC_OFFSET: usize = 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("bad length {0}, expected 38")]
    BadLength(usize),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("crc mismatch: computed {computed:08x}, packet {received:08x}")]
    BadCrc { computed: u32, received: u32 },
}

pub fn encode_command(cmd: &PlatformCommand) -> [u8; PACKET_LEN] {
    let mut buf = [0u8; PACKET_LEN];
    buf[0..4].copy_from_slice(&MAGIC);
    buf[4] = VERSION;
    buf[5] = cmd.flags.bits();
    buf[6..10].copy_from_slice(&cmd.seq.to_le_bytes());
    buf[10..18].copy_from_slice(&cmd.t_us.to_le_bytes());
    for (i, v) in cmd.axes().iter().enumerate() {
        let at = 18 + 4 * i;
        buf[at..at + 4].copy_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf[..CRC_OFFSET]);
    buf[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
    buf
}

pub fn decode_command(bytes: &[u8]) -> Result<PlatformCommand, DecodeError> {
    if bytes.len() != PACKET_LEN {
        return Err(DecodeError::BadLength(bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::BadVersion(bytes[4]));
    }
    let computed = crc32fast::hash(&bytes[..CRC_OFFSET]);
    let received = u32::from_le_bytes(bytes[CRC_OFFSET..].try_into().unwrap());
    if computed != received {
        return Err(DecodeError::BadCrc { computed, received });
    }
    let f32_at = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    Ok(PlatformCommand {
        seq: u32::from_le_bytes(bytes[6..10].try_into().unwrap()),
        t_us: u64::from_le_bytes(bytes[10..18].try_into().unwrap()),
        pitch: f32_at(18),
        roll: f32_at(22),
        yaw: f32_at(26),
        heave: f32_at(30),
        flags: CommandFlags::from_bits_retain(bytes[5]),
    })
}
