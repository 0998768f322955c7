//! Shape gradient via linear elasticity and backtracking descent steps.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness_mass, matrix_pattern, Block2, BlockCsr, CellGeometry, Constraints, DofMap, Order, Pair, PreparedSystem};
use crate::geom::Vec2;
use crate::mesh::{check_shape_validity, BoundaryTag, NodalVectorField, TriMesh, ValidityReport};
use crate::scalar::Real;
use crate::sensitivity::ShapeGradientAssembly;

/// Harmonic interpolation of `mu_max` on `G5` and `mu_min` on `G1`..`G4`,
/// clamped to `[mu_min, mu_max]`. One value per vertex.
pub fn solve_lame_mu<T: Real>(mesh: &TriMesh<T>, mu_min: T, mu_max: T) -> Result<Vec<T>> {
    if !(mu_min > T::zero() && mu_max >= mu_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < mu_min <= mu_max, got {mu_min}, {mu_max}"
        )));
    }
    if !mesh.has_tag(BoundaryTag::G5) {
        return Err(Error::UnknownTag(BoundaryTag::G5.to_string()));
    }
    let n = mesh.n_vertices();
    if mu_min == mu_max {
        return Ok(vec![mu_min; n]);
    }
    let dofs = DofMap::new(mesh, Order::P1);
    let mut a = matrix_pattern(&dofs, mesh.n_cells());
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    assemble_stiffness_mass(mesh, &dofs, &mut a, |_| Some((one, zero)));
    let mut c = Constraints::none(n);
    for (i, &on) in mesh.vertex_mask(&BoundaryTag::OUTER).iter().enumerate() {
        if on {
            c.fix(i, [mu_min, T::zero()]);
        }
    }
    for i in mesh.tagged_vertices(BoundaryTag::G5) {
        c.fix(i, [mu_max, T::zero()]);
    }
    let sys = PreparedSystem::new(&a, &c, mesh.vertices())?;
    let x = sys.solve(&vec![[T::zero(); 2]; n])?;
    Ok(x.iter().map(|p| p[0].max(mu_min).min(mu_max)).collect())
}

/// Elasticity operator with `lambda = 0`: `integral of 2 mu eps(W) : eps(V)`,
/// `mu` averaged per cell. Vertex blocks couple the `x` and `y` components.
pub fn elasticity_matrix<T: Real>(mesh: &TriMesh<T>, mu: &[T]) -> Result<BlockCsr<T>> {
    if mu.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "mu has {} values, mesh has {} vertices",
            mu.len(),
            mesh.n_vertices()
        )));
    }
    let mut k = BlockCsr::from_groups(mesh.n_vertices(), mesh.cells().iter().map(|c| c.as_slice()));
    let locals: Vec<[Block2<T>; 9]> = mesh
        .cells()
        .par_iter()
        .enumerate()
        .map(|(c, cell)| {
            let geo = CellGeometry::new(mesh.cell_points(c));
            let mbar = (mu[cell[0]] + mu[cell[1]] + mu[cell[2]]) / T::lit(3.0);
            let s = mbar * geo.area;
            let mut out = [Block2::zero(); 9];
            for a in 0..3 {
                let ga = geo.grad_lambda[a];
                for b in 0..3 {
                    let gb = geo.grad_lambda[b];
                    let dot = ga.dot(gb);
                    // [d][e] = delta_de ga.gb + ga_e gb_d
                    out[a * 3 + b] = Block2([
                        s * (dot + ga.x * gb.x),
                        s * (ga.y * gb.x),
                        s * (ga.x * gb.y),
                        s * (dot + ga.y * gb.y),
                    ]);
                }
            }
            out
        })
        .collect();
    for (cell, loc) in mesh.cells().iter().zip(locals) {
        for a in 0..3 {
            for b in 0..3 {
                k.add(cell[a], cell[b], loc[a * 3 + b]);
            }
        }
    }
    Ok(k)
}

/// Riesz representative of the shape derivative.
#[derive(Debug, Clone)]
pub struct ShapeGradient<T> {
    pub w: NodalVectorField<T>,
    /// `sqrt(DJ[W])`, the norm induced by the elasticity form.
    pub norm: T,
}

/// Solves the elasticity system with the assembled derivative as load and
/// zero displacement on `G1`..`G4`.
pub fn solve_shape_gradient<T: Real>(
    mesh: &TriMesh<T>,
    rhs: &ShapeGradientAssembly<T>,
    mu: &[T],
) -> Result<ShapeGradient<T>> {
    let n = mesh.n_vertices();
    if rhs.support_mask.len() != n {
        return Err(Error::DimensionMismatch("shape derivative assembled on another mesh".into()));
    }
    let r = rhs.rhs();
    if r.iter().all(|v| v.x == T::zero() && v.y == T::zero()) {
        return Ok(ShapeGradient {
            w: NodalVectorField::zeros(n),
            norm: T::zero(),
        });
    }
    let k = elasticity_matrix(mesh, mu)?;
    let mut c = Constraints::none(n);
    for (i, &on) in mesh.vertex_mask(&BoundaryTag::OUTER).iter().enumerate() {
        if on {
            c.fix(i, [T::zero(); 2]);
        }
    }
    let load: Vec<Pair<T>> = r.iter().map(|v| [v.x, v.y]).collect();
    let sys = PreparedSystem::new(&k, &c, mesh.vertices())?;
    let x = sys.solve(&load)?;
    let w = NodalVectorField(x.iter().map(|p| Vec2::new(p[0], p[1])).collect());
    let dj: T = r.iter().zip(w.values()).map(|(a, b)| a.dot(*b)).sum();
    Ok(ShapeGradient {
        w,
        norm: dj.max(T::zero()).sqrt(),
    })
}

/// Backtracking parameters and current step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchState<T> {
    pub rho: T,
    pub shrink: T,
    pub max_trials: usize,
}

impl<T: Real> LineSearchState<T> {
    pub fn new(rho: T) -> Self {
        Self {
            rho,
            shrink: T::lit(0.5),
            max_trials: 25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero()) || !(self.shrink > T::zero() && self.shrink < T::one()) || self.max_trials == 0 {
            return Err(Error::InvalidParameter(format!(
                "line search needs rho > 0, 0 < shrink < 1 and at least one trial, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum LineSearchOutcome<T> {
    Accepted {
        mesh: TriMesh<T>,
        objective: T,
        /// Signed displacement scale applied to `W`.
        scale: T,
        trials: usize,
    },
    /// No trial was both valid and decreasing.
    Failed {
        invalid_trials: usize,
        non_decreasing_trials: usize,
        last_report: Option<ValidityReport>,
    },
}

/// Tries `mesh - rho shrink^t W` for `t = 0, 1, ...` and accepts the first
/// valid mesh with a strictly smaller objective. On acceptance `rho` becomes
/// the accepted step length; it never grows.
pub fn line_search<T: Real>(
    mesh: &TriMesh<T>,
    w: &NodalVectorField<T>,
    current: T,
    area_floor: T,
    state: &mut LineSearchState<T>,
    mut objective: impl FnMut(&TriMesh<T>) -> Result<T>,
) -> Result<LineSearchOutcome<T>> {
    state.validate()?;
    let mut invalid = 0;
    let mut flat = 0;
    let mut last_report = None;
    if w.max_norm() == T::zero() {
        return Ok(LineSearchOutcome::Failed {
            invalid_trials: 0,
            non_decreasing_trials: 0,
            last_report,
        });
    }
    let mut step = state.rho;
    for t in 0..state.max_trials {
        let trial = mesh.apply_displacement(w, -step)?;
        let report = check_shape_validity(&trial, area_floor);
        if !report.is_valid() {
            invalid += 1;
            last_report = Some(report);
        } else {
            let j = objective(&trial)?;
            if j < current {
                state.rho = step;
                return Ok(LineSearchOutcome::Accepted {
                    mesh: trial,
                    objective: j,
                    scale: -step,
                    trials: t + 1,
                });
            }
            flat += 1;
        }
        step = step * state.shrink;
    }
    Ok(LineSearchOutcome::Failed {
        invalid_trials: invalid,
        non_decreasing_trials: flat,
        last_report,
    })
}
