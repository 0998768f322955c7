use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use coastopt_meshgen::{default_h, fixture, FIXTURES};

/// Writes a fixture mesh in GMSH v2.2 ASCII format.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// One of: circle, rectangle, rounded, empty, compact, island.
    fixture: String,
    /// Far-field mesh size.
    #[arg(long)]
    h: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(domain) = fixture(&args.fixture, args.h) else {
        eprintln!("unknown fixture `{}`; expected one of {}", args.fixture, FIXTURES.join(", "));
        return ExitCode::from(2);
    };
    let h = args.h.unwrap_or_else(|| default_h(&args.fixture));
    let mesh = match domain.mesh(h) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let text = mesh.to_msh();
    match args.out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("{}: {e}", p.display());
                return ExitCode::FAILURE;
            }
            eprintln!("{}: {} nodes, {} triangles", p.display(), mesh.nodes.len(), mesh.triangles.len());
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
