//! Derives lane indicators, nearest objects and the plan-view plot from a
//! run directory.

use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;
use drivesim::analysis::analyze;

#[derive(Parser, Debug)]
#[command(version, about = "Process a run directory written by simrun")]
struct Args {
    /// Run directory.
    #[arg(long)]
    run: PathBuf,
    /// Only render plot.svg.
    #[arg(long)]
    plot_only: bool,
    /// Where to write outputs (defaults to the run directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    for path in analyze(&args.run, args.out.as_deref(), args.plot_only)? {
        println!("{}", path.display());
    }
    Ok(())
}
