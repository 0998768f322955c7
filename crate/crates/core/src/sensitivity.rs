//! Shape and topological sensitivities.
//!
//! Deformation fields are vector-valued P1 functions on the mesh vertices.
//! For the basis field `V = e_d lambda_a` the volume form of the shape
//! derivative reduces, cell by cell, to
//!
//! ```text
//! Re[(tr G - k^2 m) d_d lambda_a - sum_f G_df d_f lambda_a - sum_e d_e lambda_a G_ed]
//! ```
//!
//! with `G_ef = integral of d_e conj(v) d_f u` and `m = integral of conj(v) u`.
//! On affine cells this is the exact derivative of the discrete objective.

use num_complex::Complex;
use rayon::prelude::*;

use crate::adjoint::AdjointSolution;
use crate::error::{Error, Result};
use crate::fem::element::{dunavant4, edge_mass, gauss_edge};
use crate::fem::field::centroid_lambda;
use crate::fem::CellGeometry;
use crate::geom::Vec2;
use crate::mesh::{BoundaryTag, NodalVectorField, Region, TriMesh};
use crate::objective::ObjectiveSpec;
use crate::scalar::Real;
use crate::state::{pabc_coefficient, Regime, StateSolution};

/// Shape derivative as a linear functional on P1 deformation fields, split by source.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeGradientAssembly<T> {
    /// Vertices whose basis fields were assembled.
    pub support_mask: Vec<bool>,
    pub tracking: Vec<Vec2<T>>,
    pub area: Vec<Vec2<T>>,
    pub perimeter: Vec<Vec2<T>>,
}

impl<T: Real> ShapeGradientAssembly<T> {
    pub fn zeros(support_mask: Vec<bool>) -> Self {
        let n = support_mask.len();
        Self {
            support_mask,
            tracking: vec![Vec2::zero(); n],
            area: vec![Vec2::zero(); n],
            perimeter: vec![Vec2::zero(); n],
        }
    }

    /// Total coefficient vector, one 2-vector per vertex.
    pub fn rhs(&self) -> Vec<Vec2<T>> {
        (0..self.support_mask.len())
            .map(|i| self.tracking[i] + self.area[i] + self.perimeter[i])
            .collect()
    }

    /// `DJ[V]`.
    pub fn apply(&self, v: &NodalVectorField<T>) -> T {
        self.rhs().iter().zip(v.values()).map(|(r, x)| r.dot(*x)).sum()
    }
}

/// Vertices within two cell layers of `G5`, minus every vertex on `G1`..`G4`.
pub fn support_mask<T: Real>(mesh: &TriMesh<T>) -> Vec<bool> {
    let mut mask = mesh.vertex_mask(&[BoundaryTag::G5]);
    let vc = mesh.vertex_cells();
    for _ in 0..2 {
        let mut grown = mask.clone();
        for (v, &m) in mask.iter().enumerate() {
            if m {
                for &c in &vc[v] {
                    for &w in &mesh.cells()[c] {
                        grown[w] = true;
                    }
                }
            }
        }
        mask = grown;
    }
    let fixed = mesh.vertex_mask(&BoundaryTag::OUTER);
    for (m, f) in mask.iter_mut().zip(fixed) {
        *m &= !f;
    }
    mask
}

fn check_pairs<T: Real>(mesh: &TriMesh<T>, states: &[StateSolution<T>], adjoints: &[AdjointSolution<T>]) -> Result<()> {
    if states.len() != adjoints.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} states but {} adjoints",
            states.len(),
            adjoints.len()
        )));
    }
    for (s, a) in states.iter().zip(adjoints) {
        s.u.check_mesh(mesh)?;
        a.v.check_mesh(mesh)?;
    }
    Ok(())
}

fn cplx<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `(G, m)` of one state/adjoint pair on one cell.
fn cell_moments<T: Real>(
    s: &StateSolution<T>,
    a: &AdjointSolution<T>,
    geo: &CellGeometry<T>,
    c: usize,
) -> ([[Complex<T>; 2]; 2], Complex<T>) {
    let dofs = s.dofs();
    let mut g = [[cplx(); 2]; 2];
    let mut m = cplx();
    for (lambda, w) in dunavant4::<T>() {
        let (u, gu) = s.u.eval_cell(dofs, geo, c, lambda);
        let (v, gv) = a.v.eval_cell(dofs, geo, c, lambda);
        let wa = w * geo.area;
        for e in 0..2 {
            for f in 0..2 {
                g[e][f] = g[e][f] + gv[e].conj() * gu[f] * wa;
            }
        }
        m = m + v.conj() * u * wa;
    }
    (g, m)
}

fn scatter<T: Real>(out: &mut [Vec2<T>], mesh: &TriMesh<T>, locals: Vec<(usize, [Vec2<T>; 3])>, mask: &[bool]) {
    for (c, loc) in locals {
        for (i, &v) in mesh.cells()[c].iter().enumerate() {
            if mask[v] {
                out[v] = out[v] + loc[i];
            }
        }
    }
}

fn touches_mask<T: Real>(mesh: &TriMesh<T>, mask: &[bool], c: usize) -> bool {
    mesh.cells()[c].iter().any(|&v| mask[v])
}

/// Tracking part of the shape derivative in volume form, summed over waves.
pub fn assemble_volume_shape_derivative<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    adjoints: &[AdjointSolution<T>],
    mask: &[bool],
) -> Result<Vec<Vec2<T>>> {
    check_pairs(mesh, states, adjoints)?;
    let mut out = vec![Vec2::zero(); mesh.n_vertices()];
    if states.is_empty() {
        return Ok(out);
    }
    let regime = states[0].regime;
    let locals: Vec<(usize, [Vec2<T>; 3])> = (0..mesh.n_cells())
        .into_par_iter()
        .filter_map(|c| {
            let weight = regime.weight(mesh.regions()[c])?;
            if !touches_mask(mesh, mask, c) {
                return None;
            }
            let geo = CellGeometry::new(mesh.cell_points(c));
            let mut loc = [Vec2::zero(); 3];
            for (s, a) in states.iter().zip(adjoints) {
                if a.weight == T::zero() {
                    continue;
                }
                let (g, m) = cell_moments(s, a, &geo, c);
                let k2 = s.wave.k * s.wave.k;
                let bulk = g[0][0] + g[1][1] - m * k2;
                for (i, l) in loc.iter_mut().enumerate() {
                    let gl = geo.grad_lambda[i];
                    let dl = [gl.x, gl.y];
                    let mut comp = [T::zero(); 2];
                    for (d, out) in comp.iter_mut().enumerate() {
                        let mut z = bulk * dl[d];
                        for f in 0..2 {
                            z = z - g[d][f] * dl[f] - g[f][d] * dl[f];
                        }
                        *out = z.re * weight;
                    }
                    *l = *l + Vec2::new(comp[0], comp[1]);
                }
            }
            Some((c, loc))
        })
        .collect();
    scatter(&mut out, mesh, locals, mask);
    obstacle_robin_part(mesh, states, adjoints, mask, &mut out);
    Ok(out)
}

/// Edge-length variation of the absorbing `G5` term of a scattering obstacle.
fn obstacle_robin_part<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    adjoints: &[AdjointSolution<T>],
    mask: &[bool],
    out: &mut [Vec2<T>],
) {
    for (s, a) in states.iter().zip(adjoints) {
        if s.regime.is_transmissive() || a.weight == T::zero() {
            continue;
        }
        let c = pabc_coefficient(s.wave.k, s.wave.alpha_obstacle);
        if c == cplx() {
            continue;
        }
        let dofs = s.dofs();
        for e in mesh.edges_with_tag(BoundaryTag::G5) {
            if !mask[e.a] && !mask[e.b] {
                continue;
            }
            let len = mesh.edge_length(e);
            let d = dofs.boundary_dofs(e);
            let me = edge_mass(dofs.order(), len);
            let n = d.len();
            let mut q = cplx();
            for i in 0..n {
                for j in 0..n {
                    q = q + a.v.value(d[i]).conj() * s.u.value(d[j]) * me[i * n + j];
                }
            }
            // d|e| = t . (V_b - V_a)
            let r = (c * q).re / len;
            let t = mesh.edge_vector(e).scale(T::one() / len);
            if mask[e.b] {
                out[e.b] = out[e.b] + t.scale(r);
            }
            if mask[e.a] {
                out[e.a] = out[e.a] - t.scale(r);
            }
        }
    }
}

/// `nu1 integral over Omega of div V`.
pub fn dj3<T: Real>(mesh: &TriMesh<T>, nu1: T, mask: &[bool]) -> Vec<Vec2<T>> {
    let mut out = vec![Vec2::zero(); mesh.n_vertices()];
    if nu1 == T::zero() {
        return out;
    }
    let locals: Vec<_> = (0..mesh.n_cells())
        .filter(|&c| mesh.regions()[c] == Region::Omega && touches_mask(mesh, mask, c))
        .map(|c| {
            let geo = CellGeometry::new(mesh.cell_points(c));
            let s = nu1 * geo.area;
            (c, [0, 1, 2].map(|i| geo.grad_lambda[i].scale(s)))
        })
        .collect();
    scatter(&mut out, mesh, locals, mask);
    out
}

/// `nu2 integral over G5 of the tangential divergence of V`; on straight
/// edges this is `t . (V_b - V_a)` per edge.
pub fn dj4<T: Real>(mesh: &TriMesh<T>, nu2: T, mask: &[bool]) -> Vec<Vec2<T>> {
    let mut out = vec![Vec2::zero(); mesh.n_vertices()];
    if nu2 == T::zero() {
        return out;
    }
    for e in mesh.edges_with_tag(BoundaryTag::G5) {
        let t = mesh.edge_vector(e).scale(nu2 / mesh.edge_length(e));
        if mask[e.b] {
            out[e.b] = out[e.b] + t;
        }
        if mask[e.a] {
            out[e.a] = out[e.a] - t;
        }
    }
    out
}

/// Curvature form of the perimeter derivative: `nu2 sum over G5 vertices of
/// kappa_i <V_i, n_i>` with the discrete curvature vector of a closed polygon.
pub fn dj4_curvature_form<T: Real>(mesh: &TriMesh<T>, nu2: T, v: &NodalVectorField<T>) -> T {
    let mut total = T::zero();
    let mut incoming = vec![Vec2::zero(); mesh.n_vertices()];
    let mut outgoing = vec![Vec2::zero(); mesh.n_vertices()];
    for e in mesh.edges_with_tag(BoundaryTag::G5) {
        let t = mesh.edge_vector(e).scale(T::one() / mesh.edge_length(e));
        outgoing[e.a] = t;
        incoming[e.b] = t;
    }
    for i in mesh.tagged_vertices(BoundaryTag::G5) {
        total += (incoming[i] - outgoing[i]).dot(v.values()[i]);
    }
    nu2 * total
}

/// All parts of the shape derivative for the given states and adjoints.
pub fn assemble_shape_gradient<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    adjoints: &[AdjointSolution<T>],
    spec: &ObjectiveSpec<T>,
) -> Result<ShapeGradientAssembly<T>> {
    let mask = support_mask(mesh);
    let tracking = assemble_volume_shape_derivative(mesh, states, adjoints, &mask)?;
    let area = dj3(mesh, spec.nu1, &mask);
    let perimeter = dj4(mesh, spec.nu2, &mask);
    Ok(ShapeGradientAssembly {
        support_mask: mask,
        tracking,
        area,
        perimeter,
    })
}

/// Boundary form density on `G5`: per edge, the edge mean of
/// `Re[grad conj(v) . grad u - k^2 conj(v) u]` from the water side.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDensity<T> {
    /// Indices into `TriMesh::boundary_edges`.
    pub edges: Vec<usize>,
    pub density: Vec<T>,
}

impl<T: Real> BoundaryDensity<T> {
    /// `sum over edges of g_e |e| <V(midpoint), n_e>`.
    pub fn apply(&self, mesh: &TriMesh<T>, v: &NodalVectorField<T>) -> T {
        let half = T::lit(0.5);
        self.edges
            .iter()
            .zip(&self.density)
            .map(|(&i, &g)| {
                let e = &mesh.boundary_edges()[i];
                let vm = (v.values()[e.a] + v.values()[e.b]).scale(half);
                g * mesh.edge_length(e) * vm.dot(mesh.outward_normal(e))
            })
            .sum()
    }
}

/// Boundary form of the tracking shape derivative for a sound-hard obstacle.
pub fn assemble_boundary_shape_derivative<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    adjoints: &[AdjointSolution<T>],
) -> Result<BoundaryDensity<T>> {
    check_pairs(mesh, states, adjoints)?;
    for s in states {
        if s.regime != Regime::Scatterer {
            return Err(Error::RegimeMismatch("boundary form needs a scattering obstacle".into()));
        }
        if s.wave.alpha_obstacle != cplx() {
            return Err(Error::InvalidParameter(
                "boundary form holds for fully reflecting obstacles only (alpha = 0 on G5)".into(),
            ));
        }
    }
    let mut edges = Vec::new();
    let mut density = Vec::new();
    let rule = gauss_edge::<T>(3);
    for (i, e) in mesh.boundary_edges().iter().enumerate() {
        if e.tag != BoundaryTag::G5 {
            continue;
        }
        let geo = CellGeometry::new(mesh.cell_points(e.cell));
        let pa = mesh.vertices()[e.a];
        let pb = mesh.vertices()[e.b];
        let mut g = T::zero();
        for (s, a) in states.iter().zip(adjoints) {
            if a.weight == T::zero() {
                continue;
            }
            let k2 = s.wave.k * s.wave.k;
            for &(t, w) in &rule {
                let x = pa + (pb - pa).scale(t);
                let lambda = barycentric_in(&geo, x);
                let (u, gu) = s.u.eval_cell(s.dofs(), &geo, e.cell, lambda);
                let (v, gv) = a.v.eval_cell(s.dofs(), &geo, e.cell, lambda);
                g += w * (gv[0].conj() * gu[0] + gv[1].conj() * gu[1] - v.conj() * u * k2).re;
            }
        }
        edges.push(i);
        density.push(g);
    }
    Ok(BoundaryDensity { edges, density })
}

fn barycentric_in<T: Real>(geo: &CellGeometry<T>, x: Vec2<T>) -> [T; 3] {
    let p0 = geo.points[0];
    let l1 = geo.grad_lambda[1].dot(x - p0);
    let l2 = geo.grad_lambda[2].dot(x - p0);
    [T::one() - l1 - l2, l1, l2]
}

/// Topological derivative, one value per vertex: the first-order change of
/// the objective per unit area of a small obstacle inserted at the vertex,
/// up to a positive shape factor. Negative values mark beneficial spots.
#[derive(Debug, Clone, PartialEq)]
pub struct TopoField<T> {
    pub values: Vec<T>,
}

/// `-Re[grad conj(v) . grad u - k^2 conj(v) u]` at cell centroids, summed
/// over waves and averaged to vertices with area weights. The sign follows
/// from the boundary form: growing a hole moves `G5` against its normal.
pub fn topological_derivative<T: Real>(
    mesh: &TriMesh<T>,
    states: &[StateSolution<T>],
    adjoints: &[AdjointSolution<T>],
) -> Result<TopoField<T>> {
    check_pairs(mesh, states, adjoints)?;
    let cell_vals: Vec<Option<(T, T)>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let s0 = states.first()?;
            s0.regime.weight(mesh.regions()[c])?;
            let geo = CellGeometry::new(mesh.cell_points(c));
            let mut val = T::zero();
            for (s, a) in states.iter().zip(adjoints) {
                let (u, gu) = s.u.eval_cell(s.dofs(), &geo, c, centroid_lambda());
                let (v, gv) = a.v.eval_cell(s.dofs(), &geo, c, centroid_lambda());
                let k2 = s.wave.k * s.wave.k;
                val -= (gv[0].conj() * gu[0] + gv[1].conj() * gu[1] - v.conj() * u * k2).re;
            }
            Some((val, geo.area))
        })
        .collect();
    let mut num = vec![T::zero(); mesh.n_vertices()];
    let mut den = vec![T::zero(); mesh.n_vertices()];
    for (c, cv) in cell_vals.into_iter().enumerate() {
        if let Some((val, area)) = cv {
            for &v in &mesh.cells()[c] {
                num[v] += val * area;
                den[v] += area;
            }
        }
    }
    let values = num
        .into_iter()
        .zip(den)
        .map(|(n, d)| if d > T::zero() { n / d } else { T::zero() })
        .collect();
    Ok(TopoField { values })
}
