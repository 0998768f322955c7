//! Assembly of volume, Robin and load terms into block systems.
//!
//! Test functions enter conjugated; since the Lagrange basis is real, a
//! complex coefficient `c` in front of a real local matrix simply becomes
//! the block `[[Re c, -Im c], [Im c, Re c]]` for every entry.

use num_complex::Complex;
use rayon::prelude::*;

use super::dofs::DofMap;
use super::element::{edge_mass, edge_values, gauss_edge, CellGeometry};
use super::sparse::{Block2, BlockCsr, Pair};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mesh::{BoundaryTag, Region, TriMesh};
use crate::scalar::Real;

/// Empty matrix with the pattern of all cell couplings.
pub fn matrix_pattern<T: Real>(dofs: &DofMap<T>, n_cells: usize) -> BlockCsr<T> {
    BlockCsr::from_groups(dofs.n_dofs(), (0..n_cells).map(|c| dofs.cell(c)))
}

/// Adds `stiff * (grad u, grad v) + mass * (u, v)` over every cell, with
/// per-region coefficients. Cells whose region maps to `None` are skipped.
pub fn assemble_stiffness_mass<T: Real>(
    mesh: &TriMesh<T>,
    dofs: &DofMap<T>,
    matrix: &mut BlockCsr<T>,
    coeff: impl Fn(Region) -> Option<(Complex<T>, Complex<T>)> + Sync,
) {
    let order = dofs.order();
    let locals: Vec<(usize, Vec<T>, Vec<T>, Complex<T>, Complex<T>)> = (0..mesh.n_cells())
        .into_par_iter()
        .filter_map(|c| {
            let (ks, ms) = coeff(mesh.regions()[c])?;
            let geo = CellGeometry::new(mesh.cell_points(c));
            let (k, m) = geo.stiffness_mass(order);
            Some((c, k, m, ks, ms))
        })
        .collect();
    for (c, k, m, ks, ms) in locals {
        let d = dofs.cell(c);
        if ks != Complex::new(T::zero(), T::zero()) {
            matrix.add_local(d, &k, Block2::complex(ks));
        }
        if ms != Complex::new(T::zero(), T::zero()) {
            matrix.add_local(d, &m, Block2::complex(ms));
        }
    }
}

fn require_tag<T: Real>(mesh: &TriMesh<T>, tag: BoundaryTag) -> Result<()> {
    if mesh.has_tag(tag) {
        Ok(())
    } else {
        Err(Error::UnknownTag(tag.to_string()))
    }
}

/// Adds `c * (u, v)` over the edges carrying `tag`. A zero coefficient adds nothing.
pub fn assemble_robin<T: Real>(
    mesh: &TriMesh<T>,
    dofs: &DofMap<T>,
    matrix: &mut BlockCsr<T>,
    tag: BoundaryTag,
    c: Complex<T>,
) -> Result<()> {
    require_tag(mesh, tag)?;
    if c == Complex::new(T::zero(), T::zero()) {
        return Ok(());
    }
    let block = Block2::complex(c);
    for e in mesh.edges_with_tag(tag) {
        let m = edge_mass(dofs.order(), mesh.edge_length(e));
        matrix.add_local(&dofs.boundary_dofs(e), &m, block);
    }
    Ok(())
}

/// Adds `integral of g * v` over the edges carrying `tag`, with 2-point
/// Gauss quadrature. `g` receives the point and the outward unit normal.
pub fn assemble_boundary_load<T: Real>(
    mesh: &TriMesh<T>,
    dofs: &DofMap<T>,
    rhs: &mut [Pair<T>],
    tag: BoundaryTag,
    g: impl Fn(Vec2<T>, Vec2<T>) -> Complex<T>,
) -> Result<()> {
    require_tag(mesh, tag)?;
    let order = dofs.order();
    let mut phi = vec![T::zero(); order.n_edge()];
    let rule = gauss_edge::<T>(2);
    for e in mesh.edges_with_tag(tag) {
        let pa = mesh.vertices()[e.a];
        let pb = mesh.vertices()[e.b];
        let len = (pb - pa).norm();
        let n = mesh.outward_normal(e);
        let d = dofs.boundary_dofs(e);
        for &(t, w) in &rule {
            let x = pa + (pb - pa).scale(t);
            let gx = g(x, n) * (w * len);
            edge_values(order, t, &mut phi);
            for (a, &i) in d.iter().enumerate() {
                rhs[i][0] += gx.re * phi[a];
                rhs[i][1] += gx.im * phi[a];
            }
        }
    }
    Ok(())
}
