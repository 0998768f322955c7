//! Adjoint of the discrete state problem.
//!
//! The state operator `A` is complex symmetric, so the adjoint system is
//! `conj(A) v = -2 w G` with `G` the tracking residual on `G1`. With this
//! scaling the derivative of the objective along any perturbation of the
//! operator and load is `Re(v^H (dA u - db))`.

use crate::error::{Error, Result};
use crate::fem::{ComplexNodalField, Constraints, Pair, PreparedSystem};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::objective::{tracking_residual, ObjectiveSpec};
use crate::scalar::Real;
use crate::state::StateSolution;
use crate::wave::WaveSpec;

/// How the adjoint is closed on the lateral boundaries `G2`, `G3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LateralCondition {
    /// Same periodic coupling as the state; the exact discrete adjoint.
    #[default]
    Periodic,
    /// Homogeneous Dirichlet on `G2` and `G3`. Kept for comparison only: it
    /// is not the adjoint of the periodic state and its gradients are biased.
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct AdjointSolution<T> {
    pub v: ComplexNodalField<T>,
    pub wave: WaveSpec<T>,
    /// Weight the load was scaled by.
    pub weight: T,
}

fn adjoint_load<T: Real>(
    state: &StateSolution<T>,
    mesh: &TriMesh<T>,
    spec: &ObjectiveSpec<T>,
    weight: T,
) -> Result<Vec<Pair<T>>> {
    let s = -T::lit(2.0) * weight;
    Ok(tracking_residual(state, mesh, spec)?
        .into_iter()
        .map(|p| [p[0] * s, p[1] * s])
        .collect())
}

fn solve_weighted<T: Real>(
    mesh: &TriMesh<T>,
    state: &StateSolution<T>,
    spec: &ObjectiveSpec<T>,
    weight: T,
    lateral: LateralCondition,
) -> Result<AdjointSolution<T>> {
    state.u.check_mesh(mesh)?;
    let dofs = state.dofs();
    if weight == T::zero() {
        return Ok(AdjointSolution {
            v: ComplexNodalField::zeros(dofs.n_dofs(), dofs.order(), mesh.generation()),
            wave: state.wave,
            weight,
        });
    }
    let load = adjoint_load(state, mesh, spec, weight)?;
    let x = match lateral {
        LateralCondition::Periodic => state.system.solve_conj(&load)?,
        LateralCondition::Dirichlet => {
            let mut c = Constraints::none(dofs.n_dofs());
            for (i, &a) in state.disc.active.iter().enumerate() {
                if !a {
                    c.fix(i, [T::zero(); 2]);
                }
            }
            for tag in [BoundaryTag::G2, BoundaryTag::G3] {
                for e in mesh.edges_with_tag(tag) {
                    for d in dofs.boundary_dofs(e) {
                        c.fix(d, [T::zero(); 2]);
                    }
                }
            }
            let sys = PreparedSystem::new(state.system.full_matrix(), &c, dofs.coords())?;
            sys.solve_conj(&load)?
        }
    };
    Ok(AdjointSolution {
        v: ComplexNodalField::from_pairs(&x, dofs.order(), mesh.generation()),
        wave: state.wave,
        weight,
    })
}

/// Adjoint of the single-wave tracking objective (unit weight).
pub fn solve_adjoint<T: Real>(
    mesh: &TriMesh<T>,
    state: &StateSolution<T>,
    spec: &ObjectiveSpec<T>,
    lateral: LateralCondition,
) -> Result<AdjointSolution<T>> {
    solve_weighted(mesh, state, spec, T::one(), lateral)
}

/// One adjoint per wave, each load scaled by the wave's weight in `spec`.
pub fn solve_adjoint_multiwave<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    spec: &ObjectiveSpec<T>,
    lateral: LateralCondition,
) -> Result<Vec<AdjointSolution<T>>> {
    use rayon::prelude::*;
    if states.len() != spec.waves.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} states for {} waves",
            states.len(),
            spec.waves.len()
        )));
    }
    states
        .par_iter()
        .zip(spec.waves.par_iter())
        .map(|(s, w)| solve_weighted(mesh, s, spec, w.weight, lateral))
        .collect()
}
