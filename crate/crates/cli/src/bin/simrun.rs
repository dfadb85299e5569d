//! Runs the 200 Hz loop on a scenario and writes the run directory.

use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use drivesim::bridge::{BridgeServer, LiveInput, Mailbox, SnapshotBoard, DEFAULT_WS_PORT};
use drivesim::monitor::PhoneMode;
use drivesim::net::{SinkAddrs, UdpSinks};
use drivesim::telemetry::{
    run_with, write_log, write_run_scenario, ConstantInput, InputSource, LoopConfig, RunOptions,
    ScriptedInput,
};
use drivesim::vehicle::DriverInput;
use drivesim::world::Scenario;

#[derive(Parser, Debug)]
#[command(
    version,
    about = "Run the driving-simulator loop and record a run directory"
)]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Virtual seconds to simulate (multiple of 0.005).
    #[arg(long)]
    duration: f64,
    /// Driver input script laid out like input.csv.
    #[arg(long, conflicts_with = "live")]
    input: Option<PathBuf>,
    /// Take driver input from the cockpit WebSocket. Implies --realtime.
    #[arg(long)]
    live: bool,
    /// Pace ticks against the wall clock.
    #[arg(long)]
    realtime: bool,
    /// Output run directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Platform command destination.
    #[arg(long, default_value = "127.0.0.1:47001")]
    platform_addr: String,
    /// Touch datagram destination.
    #[arg(long, default_value = "127.0.0.1:47002")]
    touch_addr: String,
    /// Phone event datagram destination.
    #[arg(long, default_value = "127.0.0.1:47003")]
    phone_addr: String,
    /// Do not send any UDP datagrams.
    #[arg(long)]
    no_udp: bool,
    /// Cockpit WebSocket port (live mode).
    #[arg(long, default_value_t = DEFAULT_WS_PORT)]
    ws_port: u16,
    /// Serve cockpit static files from DIR on the WebSocket port (live mode).
    #[arg(long, value_name = "DIR", num_args = 0..=1, default_missing_value = "ui/dist")]
    serve_ui: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if args.serve_ui.is_some() && !args.live {
        bail!("--serve-ui requires --live");
    }

    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))?;
    let scenario = Scenario::from_json(&text)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    let config = LoopConfig {
        duration: args.duration,
        realtime: args.realtime || args.live,
        seed: args.seed,
    };
    config.ticks()?;

    let sinks = if args.no_udp {
        None
    } else {
        let addrs = SinkAddrs::parse(&args.platform_addr, &args.touch_addr, &args.phone_addr)?;
        Some(UdpSinks::new(addrs).context("opening UDP socket")?)
    };

    let mut bridge = None;
    let board = SnapshotBoard::new();
    let mut driver: Box<dyn InputSource> = if args.live {
        let mailbox = Mailbox::new();
        let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, args.ws_port));
        bridge = Some(
            BridgeServer::start(addr, mailbox.clone(), board.clone(), args.serve_ui.clone())
                .with_context(|| format!("starting cockpit bridge on {addr}"))?,
        );
        Box::new(LiveInput::new(mailbox))
    } else if let Some(path) = &args.input {
        let script = ScriptedInput::from_csv(path)?;
        if script.clamped_rows() > 0 {
            log::warn!(
                "{} input rows were out of range and clamped",
                script.clamped_rows()
            );
        }
        Box::new(script)
    } else {
        log::info!("no --input given, driving with zero input");
        Box::new(ConstantInput(DriverInput::default()))
    };

    let publish = board.clone();
    let opts = RunOptions {
        phone_mode: if args.live {
            PhoneMode::Interactive
        } else {
            PhoneMode::Scripted
        },
        sinks,
        on_snapshot: args
            .live
            .then(|| Box::new(move |s: &_| publish.publish(s)) as Box<dyn FnMut(&_)>),
        ..Default::default()
    };
    let out = run_with(&scenario, &config, driver.as_mut(), opts)?;
    if let Some(b) = bridge {
        b.shutdown();
    }

    let mut files = write_log(&out.log, &args.out)?;
    files.push(write_run_scenario(&args.out, &scenario)?);

    let summary = serde_json::json!({
        "out": args.out,
        "ticks": out.log.vehicle.len(),
        "collisions": out.collisions.len(),
        "clamped_inputs": out.clamped_inputs,
        "udp_send_errors": out.send_errors,
        "endpoint": out.report,
        "files": files,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
