mod common;

use std::net::UdpSocket;
use std::time::{Duration, Instant};

use drivesim::net::PlatformListener;
use drivesim::platform::{
    cue, decode_command, encode_command, CommandFlags, CueingGains, DecodeError, PlatformCommand,
    PlatformEndpoint, SafetyState, ShakeState, MAX_TILT,
};
use drivesim::vehicle::VehicleState;
use proptest::prelude::*;

/// All-zero command with seq 0, t_us 0 and no flags, CRC-32 computed with zlib.
const GOLDEN_ZERO: [u8; 38] = [
    0x46, 0x44, 0x30, 0x31, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x07, 0x84, 0x3e, 0xfa,
];

#[test]
fn golden_packet_bytes() {
    assert_eq!(encode_command(&PlatformCommand::default()), GOLDEN_ZERO);
    assert_eq!(
        decode_command(&GOLDEN_ZERO).unwrap(),
        PlatformCommand::default()
    );
}

#[test]
fn every_bit_flip_of_golden_is_rejected() {
    for byte in 0..38 {
        for bit in 0..8 {
            let mut p = GOLDEN_ZERO;
            p[byte] ^= 1 << bit;
            assert!(decode_command(&p).is_err(), "byte {byte} bit {bit}");
        }
    }
}

#[test]
fn truncated_and_foreign_packets() {
    assert!(matches!(
        decode_command(&GOLDEN_ZERO[..37]),
        Err(DecodeError::BadLength(37))
    ));
    let mut p = GOLDEN_ZERO;
    p[0] = b'X';
    assert!(matches!(decode_command(&p), Err(DecodeError::BadMagic(_))));
}

#[test]
fn safety_table() {
    let states: Vec<SafetyState> = SafetyState::enumerate().collect();
    assert_eq!(states.len(), 16);
    let v = VehicleState {
        speed: 20.0,
        yaw_rate: 0.3,
        rot_x: 0.1,
        rot_y: -0.05,
        rot_z: 0.7,
        ..Default::default()
    };
    let gains = CueingGains::default();
    for s in states {
        let ok = s.gate_closed && s.seatbelt_on && !s.estop_local && !s.estop_remote;
        assert_eq!(s.motion_permitted(), ok, "{s:?}");
        let cmd = cue(&v, &gains, &ShakeState::default(), &s, 0);
        assert_eq!(cmd.flags.contains(CommandFlags::MOTION_ENABLED), ok);
        assert_eq!(
            cmd.flags.contains(CommandFlags::ESTOP),
            s.estop_local || s.estop_remote
        );
        if !ok {
            assert_eq!(cmd.axes(), [0.0; 4]);
        }
    }
}

#[test]
fn cue_respects_envelope() {
    let v = VehicleState {
        rot_x: 3.0,
        rot_y: -3.0,
        ..Default::default()
    };
    let cmd = cue(
        &v,
        &CueingGains::default(),
        &ShakeState::default(),
        &SafetyState::all_ok(),
        0,
    );
    assert_eq!(cmd.roll, MAX_TILT);
    assert_eq!(cmd.pitch, -MAX_TILT);
    assert!(cmd.within_envelope());
}

fn packet(seq: u32, flags: CommandFlags) -> [u8; 38] {
    encode_command(&PlatformCommand {
        seq,
        pitch: 0.1,
        flags,
        ..Default::default()
    })
}

#[test]
fn estop_latch_needs_explicit_clear() {
    let mut ep = PlatformEndpoint::new();
    ep.ingest(&packet(0, CommandFlags::MOTION_ENABLED));
    assert_eq!(ep.attitude()[0], 0.1);
    ep.ingest(&packet(1, CommandFlags::ESTOP));
    assert!(ep.estopped());
    // estop released but motion not enabled: still latched
    ep.ingest(&packet(2, CommandFlags::empty()));
    assert!(ep.estopped());
    assert_eq!(ep.attitude(), [0.0; 4]);
    ep.ingest(&packet(
        3,
        CommandFlags::MOTION_ENABLED | CommandFlags::ESTOP,
    ));
    assert!(ep.estopped());
    ep.ingest(&packet(4, CommandFlags::MOTION_ENABLED));
    assert!(!ep.estopped());
    assert_eq!(ep.attitude()[0], 0.1);
}

#[test]
fn listener_over_loopback() {
    let listener = PlatformListener::bind("127.0.0.1:0").unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    for seq in [0u32, 1, 2, 4] {
        tx.send_to(
            &packet(seq, CommandFlags::MOTION_ENABLED),
            listener.local_addr(),
        )
        .unwrap();
    }
    let mut bad = packet(5, CommandFlags::MOTION_ENABLED);
    bad[10] ^= 0x40;
    tx.send_to(&bad, listener.local_addr()).unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    while Instant::now() < deadline {
        let e = listener.endpoint();
        if e.report().received == 4 && e.report().crc_errors == 1 {
            break;
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    let report = listener.stop().report();
    assert_eq!((report.received, report.gaps, report.crc_errors), (4, 1, 1));
}

fn finite_f32() -> impl Strategy<Value = f32> {
    prop::num::f32::NORMAL | prop::num::f32::ZERO | prop::num::f32::SUBNORMAL
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn codec_round_trip(
        seq: u32,
        t_us: u64,
        flags in 0u8..8,
        pitch in finite_f32(),
        roll in finite_f32(),
        yaw in finite_f32(),
        heave in finite_f32(),
    ) {
        let cmd = PlatformCommand {
            seq,
            t_us,
            pitch,
            roll,
            yaw,
            heave,
            flags: CommandFlags::from_bits_truncate(flags),
        };
        let bytes = encode_command(&cmd);
        let back = decode_command(&bytes).unwrap();
        prop_assert_eq!(back, cmd);
        prop_assert_eq!(encode_command(&back), bytes);
    }
}
