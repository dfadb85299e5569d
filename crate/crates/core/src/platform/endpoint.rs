//! Simulated motion-platform control computer.

use serde::Serialize;

use super::codec::{decode_command, DecodeError};
use super::cueing::{CommandFlags, PlatformCommand};

/// Status document published by the endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointReport {
    pub received: u64,
    pub gaps: u64,
    pub crc_errors: u64,
    pub attitude: [f32; 4],
    pub estopped: bool,
}

/// What happened to a single datagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IngestOutcome {
    Accepted { gap: bool },
    Rejected(DecodeError),
}

#[derive(Debug, Clone, Default)]
pub struct PlatformEndpoint {
    received: u64,
    gaps: u64,
    crc_errors: u64,
    /// Length, magic and version failures.
    malformed: u64,
    last_seq: Option<u32>,
    last_command: Option<PlatformCommand>,
    attitude: [f32; 4],
    estopped: bool,
}

impl PlatformEndpoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ingests one datagram. Errors are counted, never propagated.
    ///
    /// An estop flag latches the platform to neutral; only a packet with the
    /// estop flag clear and motion enabled releases the latch.
    pub fn ingest(&mut self, bytes: &[u8]) -> IngestOutcome {
        let cmd = match decode_command(bytes) {
            Ok(cmd) => cmd,
            Err(e) => {
                match e {
                    DecodeError::BadCrc { .. } => self.crc_errors += 1,
                    _ => self.malformed += 1,
                }
                return IngestOutcome::Rejected(e);
            }
        };
        self.received += 1;
        let gap = self
            .last_seq
            .is_some_and(|last| cmd.seq != last.wrapping_add(1));
        if gap {
            self.gaps += 1;
        }
        self.last_seq = Some(cmd.seq);

        let estop = cmd.flags.contains(CommandFlags::ESTOP);
        let enabled = cmd.flags.contains(CommandFlags::MOTION_ENABLED);
        if estop {
            self.estopped = true;
        } else if self.estopped && enabled {
            self.estopped = false;
        }
        self.attitude = if !self.estopped && enabled {
            cmd.axes()
        } else {
            [0.0; 4]
        };
        self.last_command = Some(cmd);
        IngestOutcome::Accepted { gap }
    }

    pub fn attitude(&self) -> [f32; 4] {
        self.attitude
    }

    pub fn estopped(&self) -> bool {
        self.estopped
    }

    pub fn last_command(&self) -> Option<&PlatformCommand> {
        self.last_command.as_ref()
    }

    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    pub fn report(&self) -> EndpointReport {
        EndpointReport {
            received: self.received,
            gaps: self.gaps,
            crc_errors: self.crc_errors,
            attitude: self.attitude,
            estopped: self.estopped,
        }
    }

    pub fn status_json(&self) -> String {
        serde_json::to_string(&self.report()).expect("report serializes")
    }
}
