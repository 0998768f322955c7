//! Outer optimization loop and the topology phase that seeds it.

use std::sync::Arc;
use std::time::Instant;

use crate::adjoint::{solve_adjoint_multiwave, LateralCondition};
use crate::deform::{line_search, solve_lame_mu, solve_shape_gradient, LineSearchOutcome, LineSearchState};
use crate::error::{Error, Result};
use crate::fem::Order;
use crate::geom::Vec2;
use crate::mesh::{check_shape_validity, Region, TriMesh, ValidityReport};
use crate::objective::{eval_objective, ObjectiveParts, ObjectiveSpec};
use crate::scalar::Real;
use crate::sensitivity::{assemble_shape_gradient, topological_derivative, TopoField};
use crate::state::{solve_states_on, Discretization, Regime, StateSolution};
use crate::topo_init::{dbscan, emit_obstacle_geometry, obstacle_outlines, select_candidates, ClusterResult, Selection};

/// How the gradient is scaled before the line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepNormalization {
    /// `W` as computed; `rho` is a multiplier.
    Raw,
    /// `W / max|W|`; `rho` is the largest vertex displacement of a full step.
    #[default]
    MaxNorm,
}

#[derive(Debug, Clone)]
pub struct OptimizeConfig<T> {
    pub objective: ObjectiveSpec<T>,
    pub regime: Regime<T>,
    pub order: Order,
    pub lateral: LateralCondition,
    pub mu_min: T,
    pub mu_max: T,
    pub line_search: LineSearchState<T>,
    pub normalization: StepNormalization,
    pub eps_stop: T,
    pub max_iterations: usize,
}

impl<T: Real> OptimizeConfig<T> {
    pub fn new(objective: ObjectiveSpec<T>, regime: Regime<T>) -> Self {
        Self {
            objective,
            regime,
            order: Order::P1,
            lateral: LateralCondition::Periodic,
            mu_min: T::lit(10.0),
            mu_max: T::lit(100.0),
            line_search: LineSearchState::new(T::lit(0.04)),
            normalization: StepNormalization::default(),
            eps_stop: T::lit(1e-6),
            max_iterations: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.line_search.validate()?;
        if !(self.mu_min > T::zero() && self.mu_min <= self.mu_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < mu_min <= mu_max, got {} and {}",
                self.mu_min, self.mu_max
            )));
        }
        if !(self.eps_stop >= T::zero()) {
            return Err(Error::InvalidParameter(format!("eps_stop must be >= 0, got {}", self.eps_stop)));
        }
        Ok(())
    }
}

/// One row of the run history. Row 0 is the starting mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub objective: T,
    pub parts: ObjectiveParts<T>,
    /// Norm of the gradient that produced this iterate (zero for row 0).
    pub gradient_norm: T,
    /// Largest vertex displacement of the accepted step.
    pub step: T,
    pub trials: usize,
    pub valid: bool,
    pub wall_seconds: f64,
}

impl<T: Real> IterationRecord<T> {
    pub const CSV_HEADER: &'static str =
        "iteration,objective,tracking,area,perimeter,gradient_norm,step,trials,valid,wall_seconds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3}",
            self.iteration,
            self.objective,
            self.parts.tracking,
            self.parts.area,
            self.parts.perimeter,
            self.gradient_norm,
            self.step,
            self.trials,
            self.valid as u8,
            self.wall_seconds
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory<T> {
    pub records: Vec<IterationRecord<T>>,
}

impl<T: Real> RunHistory<T> {
    pub fn objectives(&self) -> Vec<T> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].objective < w[0].objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Gradient norm at or below `eps_stop`.
    Converged,
    /// No step size gave a decrease and no trial was invalid.
    Stagnated,
    /// The line search only found meshes with crossing segments or inverted cells.
    InvalidShape,
    MaxIterations,
}

impl TerminationReason {
    pub fn label(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Stagnated => "stagnated",
            Self::InvalidShape => "invalid-shape",
            Self::MaxIterations => "max-iterations",
        }
    }
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub mesh: TriMesh<T>,
    pub history: RunHistory<T>,
    pub reason: TerminationReason,
    /// Validity report of the last rejected trial, for `InvalidShape`.
    pub last_report: Option<ValidityReport>,
}

/// States for every wave and the objective on `mesh`.
pub fn evaluate<T: Real>(
    mesh: &TriMesh<T>,
    config: &OptimizeConfig<T>,
) -> Result<(Vec<StateSolution<T>>, ObjectiveParts<T>)> {
    let disc = Arc::new(Discretization::new(mesh, config.order, config.regime)?);
    let states = solve_states_on(mesh, &disc, &config.objective.waves)?;
    let parts = eval_objective(&states, mesh, &config.objective)?;
    Ok((states, parts))
}

/// Runs the shape optimization. `observe` sees every history row together
/// with its mesh and states as soon as it exists; an error from it aborts
/// the run.
pub fn run_optimization<T: Real>(
    mesh: &TriMesh<T>,
    config: &OptimizeConfig<T>,
    mut observe: impl FnMut(&IterationRecord<T>, &TriMesh<T>, &[StateSolution<T>]) -> Result<()>,
) -> Result<RunResult<T>> {
    config.validate()?;
    config.regime.validate(mesh)?;
    let report = check_shape_validity(mesh, T::zero());
    if !report.is_valid() {
        return Err(Error::InvalidMesh(format!(
            "starting mesh is invalid: {} crossing pairs, {} inverted cells",
            report.crossing_pairs.len(),
            report.inverted_cells.len()
        )));
    }
    let area_floor = T::lit(1e-3) * mesh.min_cell_area();
    let start = Instant::now();
    let mut ls = config.line_search;
    let mut current = mesh.clone();
    let (mut states, parts) = evaluate(&current, config)?;
    let mut objective = parts.total();
    let first = IterationRecord {
        iteration: 0,
        objective,
        parts,
        gradient_norm: T::zero(),
        step: T::zero(),
        trials: 0,
        valid: true,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    observe(&first, &current, &states)?;
    let mut history = RunHistory { records: vec![first] };
    let mut last_report = None;
    let mut reason = TerminationReason::MaxIterations;
    for iteration in 1..=config.max_iterations {
        let adjoints = solve_adjoint_multiwave(&current, &states, &config.objective, config.lateral)?;
        let assembly = assemble_shape_gradient(&current, &states, &adjoints, &config.objective)?;
        let mu = solve_lame_mu(&current, config.mu_min, config.mu_max)?;
        let grad = solve_shape_gradient(&current, &assembly, &mu)?;
        if grad.norm <= config.eps_stop {
            reason = TerminationReason::Converged;
            break;
        }
        let w = match config.normalization {
            StepNormalization::Raw => grad.w,
            StepNormalization::MaxNorm => grad.w.scaled(T::one() / grad.w.max_norm()),
        };
        let mut trial_states = None;
        let mut trial_parts = None;
        let outcome = line_search(&current, &w, objective, area_floor, &mut ls, |m| {
            let (s, p) = evaluate(m, config)?;
            trial_states = Some(s);
            trial_parts = Some(p);
            Ok(p.total())
        })?;
        match outcome {
            LineSearchOutcome::Accepted {
                mesh: next,
                objective: j,
                scale,
                trials,
            } => {
                let record = IterationRecord {
                    iteration,
                    objective: j,
                    parts: trial_parts.expect("accepted trial was evaluated"),
                    gradient_norm: grad.norm,
                    step: scale.abs() * w.max_norm(),
                    trials,
                    valid: true,
                    wall_seconds: start.elapsed().as_secs_f64(),
                };
                states = trial_states.expect("accepted trial was evaluated");
                observe(&record, &next, &states)?;
                history.records.push(record);
                objective = j;
                current = next;
            }
            LineSearchOutcome::Failed {
                invalid_trials,
                last_report: rep,
                ..
            } => {
                reason = if invalid_trials > 0 {
                    TerminationReason::InvalidShape
                } else {
                    TerminationReason::Stagnated
                };
                last_report = rep;
                break;
            }
        }
    }
    Ok(RunResult {
        mesh: current,
        history,
        reason,
        last_report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyConfig<T> {
    /// Fraction of eligible vertices kept.
    pub quantile: T,
    /// DBSCAN radius in mesh units; `None` means four mean edge lengths.
    pub eps: Option<T>,
    pub min_points: usize,
    /// Hull dilation; `None` means two mean edge lengths.
    pub pad: Option<T>,
    /// Minimum distance of candidates from the boundary; `None` means the
    /// dilation plus two mean edge lengths.
    pub margin: Option<T>,
}

impl<T: Real> Default for TopologyConfig<T> {
    fn default() -> Self {
        Self {
            quantile: T::lit(0.05),
            eps: None,
            min_points: 10,
            pad: None,
            margin: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopologyOutcome<T> {
    pub field: TopoField<T>,
    /// Empty when nothing was selected.
    pub selection: Selection<T>,
    pub clusters: ClusterResult<T>,
    pub outlines: Vec<Vec<Vec2<T>>>,
    /// `.geo` text; `None` when no cluster was found.
    pub geometry: Option<String>,
}

impl<T: Real> TopologyOutcome<T> {
    pub fn instructions(&self) -> String {
        match self.geometry {
            Some(_) => format!(
                "{} obstacle outline(s) written; mesh the .geo file with gmsh -2 -format msh22 and run optimize on the result",
                self.outlines.len()
            ),
            None => Error::NoBeneficialObstacle.to_string(),
        }
    }
}

/// Topological derivative on an obstacle-free mesh, clustered into
/// obstacle outlines and written as a `.geo` description for remeshing.
pub fn run_topology_then_shape<T: Real>(
    mesh: &TriMesh<T>,
    config: &OptimizeConfig<T>,
    topo: &TopologyConfig<T>,
) -> Result<TopologyOutcome<T>> {
    config.objective.validate()?;
    if mesh.has_region(Region::Obstacle) {
        return Err(Error::InvalidMesh("topology phase needs a mesh without obstacle region".into()));
    }
    let (states, _) = evaluate(mesh, config)?;
    let adjoints = solve_adjoint_multiwave(mesh, &states, &config.objective, config.lateral)?;
    let field = topological_derivative(mesh, &states, &adjoints)?;
    let h = mesh.mean_edge_length();
    let pad = topo.pad.unwrap_or(T::lit(2.0) * h);
    let margin = topo.margin.unwrap_or(pad + T::lit(2.0) * h);
    let selection = match select_candidates(mesh, &field, topo.quantile, margin) {
        Ok(s) => s,
        Err(Error::EmptySelection(_)) => Selection {
            vertices: Vec::new(),
            points: Vec::new(),
            degenerate: false,
        },
        Err(e) => return Err(e),
    };
    let clusters = dbscan(&selection.points, topo.eps.unwrap_or(T::lit(4.0) * h), topo.min_points)?;
    if clusters.n_clusters == 0 {
        return Ok(TopologyOutcome {
            field,
            selection,
            clusters,
            outlines: Vec::new(),
            geometry: None,
        });
    }
    let outlines = obstacle_outlines(&selection.points, &clusters, pad)?;
    let geometry = emit_obstacle_geometry(mesh, &outlines, h)?;
    Ok(TopologyOutcome {
        field,
        selection,
        clusters,
        outlines,
        geometry: Some(geometry),
    })
}
