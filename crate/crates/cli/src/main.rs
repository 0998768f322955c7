mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Shape optimization of wave-breaking obstacles.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long, env = "COASTOPT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for the per-wave solves.
    #[arg(long, env = "COASTOPT_THREADS")]
    pub threads: Option<usize>,
    /// Mesh file, overriding `mesh`.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Finite element order, overriding `order`.
    #[arg(long)]
    pub order: Option<u8>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state for every wave and export fields and coast traces.
    Solve(Common),
    /// Topological derivative, clustering and obstacle geometry.
    Topo(Common),
    /// Run the shape optimization.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        eps_stop: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// Snapshot stride, overriding `output.snapshot_stride`.
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Validate a mesh file (or the mesh of a configuration).
    Check {
        path: PathBuf,
        /// Minimum cell area accepted.
        #[arg(long, default_value_t = 0.0)]
        area_floor: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(c) => commands::solve(&c),
        Command::Topo(c) => commands::topo(&c),
        Command::Optimize {
            common,
            max_iterations,
            eps_stop,
            rho,
            snapshot_stride,
        } => commands::optimize(
            &common,
            commands::OptimizeOverrides {
                max_iterations,
                eps_stop,
                rho,
                snapshot_stride,
            },
        ),
        Command::Check { path, area_floor } => commands::check(&path, area_floor),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
