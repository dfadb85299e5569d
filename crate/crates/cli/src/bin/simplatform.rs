//! Stand-in for the motion-platform control computer: validates the command
//! stream and prints its status as JSON lines.

use std::thread;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::Parser;
use drivesim::net::PlatformListener;

#[derive(Parser, Debug)]
#[command(
    version,
    about = "Receive platform command datagrams and report stream health"
)]
struct Args {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:47001")]
    listen: String,
    /// Status print interval in milliseconds.
    #[arg(long, default_value_t = 1000)]
    interval_ms: u64,
    /// Exit after this many seconds (runs until killed when omitted).
    #[arg(long)]
    duration: Option<f64>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let listener =
        PlatformListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    log::info!("platform endpoint listening on {}", listener.local_addr());
    let start = Instant::now();
    let deadline = args.duration.map(Duration::from_secs_f64);
    let interval = Duration::from_millis(args.interval_ms.max(1));
    loop {
        thread::sleep(interval);
        if deadline.is_some_and(|d| start.elapsed() >= d) {
            break;
        }
        println!("{}", listener.endpoint().status_json());
    }
    println!("{}", listener.stop().status_json());
    Ok(())
}
