use std::fs;
use std::path::{Path, PathBuf};

use coastopt_core::export::{
    coast_trace_csv, field_vtk, labels_csv, objective_svg, vertex_parts, vtk_legacy, write_atomic, PointData,
    StreamingCsv,
};
use coastopt_core::mesh::{build_periodic_pairing, check_shape_validity, load_msh, write_msh, BoundaryTag, Region};
use coastopt_core::objective::eval_objective;
use coastopt_core::optimize::{evaluate, run_optimization, run_topology_then_shape, IterationRecord, TerminationReason};
use coastopt_core::Mesh;

use crate::config::{ConfigError, RunConfig};
use crate::Common;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_STAGNATED: u8 = 3;
pub const EXIT_INVALID_SHAPE: u8 = 4;
pub const EXIT_MAX_ITERATIONS: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] coastopt_core::Error),
    #[error("cannot create {path}: {source}")]
    OutDir { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Threads(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub struct OptimizeOverrides {
    pub max_iterations: Option<usize>,
    pub eps_stop: Option<f64>,
    pub rho: Option<f64>,
    pub snapshot_stride: Option<usize>,
}

struct Run {
    config: RunConfig,
    mesh: Mesh,
    out: PathBuf,
}

fn prepare(c: &Common) -> Result<Run> {
    let mut config = RunConfig::load(&c.config)?;
    if let Some(m) = &c.mesh {
        config.mesh = m.clone();
    }
    if let Some(o) = c.order {
        config.order = o;
    }
    if let Some(d) = &c.out_dir {
        config.output.dir = d.clone();
    }
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let mesh = load_msh(&config.mesh, &config.physical_names()?)?;
    let out = config.output.dir.clone();
    fs::create_dir_all(&out).map_err(|source| CliError::OutDir {
        path: out.clone(),
        source,
    })?;
    Ok(Run { config, mesh, out })
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    write_atomic(&path, text.as_bytes())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn solve(c: &Common) -> Result<u8> {
    let run = prepare(c)?;
    let oc = run.config.optimize_config()?;
    let (states, _) = evaluate(&run.mesh, &oc)?;
    let parts = eval_objective(&states, &run.mesh, &oc.objective)?;
    for (i, s) in states.iter().enumerate() {
        write(run.out.join(format!("u_{i}.vtk")), &field_vtk(&run.mesh, &s.u, "u")?)?;
        write(run.out.join(format!("trace_{i}.csv")), &coast_trace_csv(&run.mesh, &s.u)?)?;
    }
    println!(
        "objective {} (tracking {}, area {}, perimeter {})",
        parts.total(),
        parts.tracking,
        parts.area,
        parts.perimeter
    );
    Ok(EXIT_OK)
}

pub fn topo(c: &Common) -> Result<u8> {
    let run = prepare(c)?;
    let oc = run.config.optimize_config()?;
    let out = run_topology_then_shape(&run.mesh, &oc, &run.config.topology_config()?)?;
    let (states, _) = evaluate(&run.mesh, &oc)?;
    let [_, _, abs] = vertex_parts(&run.mesh, &states[0].u)?;
    let vtk = vtk_legacy(
        &run.mesh,
        "topological derivative",
        &[PointData::Scalar("topological_derivative", &out.field.values), PointData::Scalar("u_abs", &abs)],
    )?;
    write(run.out.join("topo.vtk"), &vtk)?;
    write(run.out.join("clusters.csv"), &labels_csv(&out.selection.points, &out.clusters.labels)?)?;
    if let Some(geo) = &out.geometry {
        write(run.out.join("obstacle.geo"), geo)?;
    }
    println!("{}", out.instructions());
    Ok(EXIT_OK)
}

pub fn optimize(c: &Common, o: OptimizeOverrides) -> Result<u8> {
    let mut run = prepare(c)?;
    if let Some(v) = o.max_iterations {
        run.config.stopping.max_iterations = v;
    }
    if let Some(v) = o.eps_stop {
        run.config.stopping.eps_stop = v;
    }
    if let Some(v) = o.rho {
        run.config.line_search.rho = v;
    }
    if let Some(v) = o.snapshot_stride {
        run.config.output.snapshot_stride = v;
    }
    let oc = run.config.optimize_config()?;
    write(run.out.join("config.toml"), &run.config.to_toml())?;
    let stride = run.config.output.snapshot_stride;
    let mut history = StreamingCsv::create(run.out.join("history.csv"), IterationRecord::<f64>::CSV_HEADER)?;
    let result = run_optimization(&run.mesh, &oc, |rec, mesh, states| {
        history.row(&rec.csv_row())?;
        if stride > 0 && rec.iteration % stride == 0 {
            let path = run.out.join(format!("snapshot_{:04}.vtk", rec.iteration));
            write_atomic(&path, field_vtk(mesh, &states[0].u, "u")?.as_bytes())?;
        }
        eprintln!("iteration {} objective {}", rec.iteration, rec.objective);
        Ok(())
    });
    history.finish()?;
    let result = result?;
    let names = run.config.physical_names()?;
    write(run.out.join("final.msh"), &write_msh(&result.mesh, &names))?;
    let (states, _) = evaluate(&result.mesh, &oc)?;
    write(run.out.join("final_u.vtk"), &field_vtk(&result.mesh, &states[0].u, "u")?)?;
    let objectives = result.history.objectives();
    write(run.out.join("objective.svg"), &objective_svg(&objectives, "objective"))?;
    let iterations = result.history.records.len() - 1;
    match (&result.reason, &result.last_report) {
        (TerminationReason::InvalidShape, Some(r)) if !r.crossing_pairs.is_empty() => {
            println!("invalid-shape (intersecting segments) after {iterations} iterations")
        }
        (TerminationReason::InvalidShape, _) => println!("invalid-shape (inverted cells) after {iterations} iterations"),
        (reason, _) => println!("{reason} after {iterations} iterations"),
    }
    println!(
        "objective {} -> {}",
        objectives[0],
        objectives.last().copied().unwrap_or(objectives[0])
    );
    Ok(match result.reason {
        TerminationReason::Converged => EXIT_OK,
        TerminationReason::Stagnated => EXIT_STAGNATED,
        TerminationReason::InvalidShape => EXIT_INVALID_SHAPE,
        TerminationReason::MaxIterations => EXIT_MAX_ITERATIONS,
    })
}

pub fn check(path: &Path, area_floor: f64) -> Result<u8> {
    let (mesh_path, names) = if path.extension().is_some_and(|e| e == "toml") {
        let c = RunConfig::load(path)?;
        let n = c.physical_names()?;
        (c.mesh, n)
    } else {
        (path.to_path_buf(), Default::default())
    };
    let mesh: Mesh = load_msh(&mesh_path, &names)?;
    println!(
        "{}: {} vertices, {} cells ({} obstacle)",
        mesh_path.display(),
        mesh.n_vertices(),
        mesh.n_cells(),
        mesh.regions().iter().filter(|&&r| r == Region::Obstacle).count()
    );
    for tag in BoundaryTag::ALL {
        let n = mesh.edges_with_tag(tag).count();
        if n > 0 {
            println!("  {tag}: {n} edges, length {}", mesh.boundary_length(tag)?);
        }
    }
    let pairing = build_periodic_pairing(&mesh, 1e-9 * (1.0 + mesh.mean_edge_length()));
    match &pairing {
        Ok(p) if p.is_empty() => println!("  no periodic sides"),
        Ok(_) => println!("  periodic sides pair up"),
        Err(e) => println!("  {e}"),
    }
    let report = check_shape_validity(&mesh, area_floor);
    println!(
        "  {} crossing obstacle segment pairs, {} cells at or below the area floor",
        report.crossing_pairs.len(),
        report.inverted_cells.len()
    );
    Ok(if report.is_valid() && pairing.is_ok() {
        println!("valid");
        EXIT_OK
    } else {
        println!("invalid");
        EXIT_INVALID_SHAPE
    })
}
