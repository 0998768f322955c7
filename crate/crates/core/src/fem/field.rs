use num_complex::Complex;

use super::dofs::DofMap;
use super::element::{CellGeometry, Order};
use super::sparse::Pair;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Complex finite-element function stored as real and imaginary coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexNodalField<T> {
    pub re: Vec<T>,
    pub im: Vec<T>,
    pub order: Order,
    /// Generation stamp of the mesh the field lives on.
    pub generation: u64,
}

impl<T: Real> ComplexNodalField<T> {
    pub fn zeros(n: usize, order: Order, generation: u64) -> Self {
        Self {
            re: vec![T::zero(); n],
            im: vec![T::zero(); n],
            order,
            generation,
        }
    }

    pub fn from_pairs(v: &[Pair<T>], order: Order, generation: u64) -> Self {
        Self {
            re: v.iter().map(|p| p[0]).collect(),
            im: v.iter().map(|p| p[1]).collect(),
            order,
            generation,
        }
    }

    pub fn from_fn(dofs: &DofMap<T>, f: impl Fn(Vec2<T>) -> Complex<T>) -> Self {
        let vals: Vec<Pair<T>> = dofs.coords().iter().map(|&p| {
            let z = f(p);
            [z.re, z.im]
        }).collect();
        Self::from_pairs(&vals, dofs.order(), dofs.generation())
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    #[inline]
    pub fn value(&self, i: usize) -> Complex<T> {
        Complex::new(self.re[i], self.im[i])
    }

    pub fn to_pairs(&self) -> Vec<Pair<T>> {
        self.re.iter().zip(&self.im).map(|(&a, &b)| [a, b]).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.iter().map(|&x| -x).collect(),
            order: self.order,
            generation: self.generation,
        }
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        let vals: Vec<Pair<T>> = (0..self.len())
            .map(|i| {
                let z = self.value(i) * s;
                [z.re, z.im]
            })
            .collect();
        Self::from_pairs(&vals, self.order, self.generation)
    }

    pub fn max_abs(&self) -> T {
        (0..self.len()).fold(T::zero(), |m, i| m.max(self.value(i).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.is_finite())
    }

    /// Rejects a field computed on a different mesh generation.
    pub fn check_mesh(&self, mesh: &TriMesh<T>) -> Result<()> {
        if self.generation != mesh.generation() {
            return Err(Error::StaleField {
                field: self.generation,
                mesh: mesh.generation(),
            });
        }
        Ok(())
    }

    /// Value and gradient in cell `c` at barycentric point `lambda`.
    pub fn eval_cell(
        &self,
        dofs: &DofMap<T>,
        geo: &CellGeometry<T>,
        c: usize,
        lambda: [T; 3],
    ) -> (Complex<T>, [Complex<T>; 2]) {
        let mut phi = [T::zero(); 6];
        let mut grad = [Vec2::zero(); 6];
        geo.values(self.order, lambda, &mut phi);
        geo.gradients(self.order, lambda, &mut grad);
        let mut v = Complex::new(T::zero(), T::zero());
        let mut g = [v, v];
        for (a, &d) in dofs.cell(c).iter().enumerate() {
            let z = self.value(d);
            v = v + z * phi[a];
            g[0] = g[0] + z * grad[a].x;
            g[1] = g[1] + z * grad[a].y;
        }
        (v, g)
    }
}

/// Centroid barycentric coordinates.
pub fn centroid_lambda<T: Real>() -> [T; 3] {
    let t = T::lit(1.0 / 3.0);
    [t, t, t]
}


/// `L2(Omega)` norm of `u - exact` over cells accepted by `active`, with the degree-4 cell rule.
pub fn l2_error<T: Real>(
    mesh: &TriMesh<T>,
    dofs: &DofMap<T>,
    u: &ComplexNodalField<T>,
    active: impl Fn(usize) -> bool,
    exact: impl Fn(Vec2<T>) -> Complex<T>,
) -> T {
    let mut total = T::zero();
    for c in (0..mesh.n_cells()).filter(|&c| active(c)) {
        let geo = CellGeometry::new(mesh.cell_points(c));
        for (lambda, w) in super::element::dunavant4::<T>() {
            let (v, _) = u.eval_cell(dofs, &geo, c, lambda);
            total += w * geo.area * (v - exact(geo.map(lambda))).norm_sqr();
        }
    }
    total.sqrt()
}

/// `H1` seminorm of `u - exact`, given the exact gradient.
pub fn h1_seminorm_error<T: Real>(
    mesh: &TriMesh<T>,
    dofs: &DofMap<T>,
    u: &ComplexNodalField<T>,
    active: impl Fn(usize) -> bool,
    exact_grad: impl Fn(Vec2<T>) -> [Complex<T>; 2],
) -> T {
    let mut total = T::zero();
    for c in (0..mesh.n_cells()).filter(|&c| active(c)) {
        let geo = CellGeometry::new(mesh.cell_points(c));
        for (lambda, w) in super::element::dunavant4::<T>() {
            let (_, g) = u.eval_cell(dofs, &geo, c, lambda);
            let e = exact_grad(geo.map(lambda));
            total += w * geo.area * ((g[0] - e[0]).norm_sqr() + (g[1] - e[1]).norm_sqr());
        }
    }
    total.sqrt()
}
