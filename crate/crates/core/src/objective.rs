//! Coastline objectives: tracking with variance penalty, multi-wave sums,
//! area and perimeter regularizers.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fem::element::{edge_integrals, edge_mass};
use crate::fem::Pair;
use crate::mesh::{BoundaryTag, Region, TriMesh};
use crate::scalar::Real;
use crate::state::StateSolution;
use crate::wave::WaveSpec;

/// Objective weights and the wave set the multi-wave sum runs over.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec<T> {
    /// Target elevation on the coastline, m.
    pub u_target: T,
    /// Variance weight.
    pub xi: T,
    /// Water-area weight.
    pub nu1: T,
    /// Obstacle-perimeter weight.
    pub nu2: T,
    pub waves: Vec<WaveSpec<T>>,
}

impl<T: Real> ObjectiveSpec<T> {
    pub fn new(waves: Vec<WaveSpec<T>>) -> Self {
        Self {
            u_target: T::zero(),
            xi: T::zero(),
            nu1: T::zero(),
            nu2: T::zero(),
            waves,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("xi", self.xi), ("nu1", self.nu1), ("nu2", self.nu2)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !self.u_target.is_finite() {
            return Err(Error::InvalidParameter("target elevation must be finite".into()));
        }
        if self.waves.is_empty() {
            return Err(Error::InvalidParameter("at least one wave is required".into()));
        }
        let mut total = T::zero();
        for w in &self.waves {
            w.validate()?;
            total += w.weight;
        }
        if !(total > T::zero()) {
            return Err(Error::InvalidParameter("wave weights sum to zero".into()));
        }
        Ok(())
    }
}

/// Per-part objective values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveParts<T> {
    pub tracking: T,
    pub area: T,
    pub perimeter: T,
}

impl<T: Real> ObjectiveParts<T> {
    pub fn total(&self) -> T {
        self.tracking + self.area + self.perimeter
    }
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `1/l integral of u` over `G1`.
pub fn mean_elevation<T: Real>(sol: &StateSolution<T>, mesh: &TriMesh<T>) -> Result<Complex<T>> {
    sol.u.check_mesh(mesh)?;
    let dofs = sol.dofs();
    let mut sum = zero();
    let mut len = T::zero();
    for e in mesh.edges_with_tag(BoundaryTag::G1) {
        let l = mesh.edge_length(e);
        for (&d, w) in dofs.boundary_dofs(e).iter().zip(edge_integrals(dofs.order(), l)) {
            sum = sum + sol.u.value(d) * w;
        }
        len += l;
    }
    if !(len > T::zero()) {
        return Err(Error::InvalidMesh("coastline G1 has zero length".into()));
    }
    Ok(sum / len)
}

/// `sum over G1 edges of conj(f)^T M_e g`, where `f`, `g` are shifted nodal values.
fn edge_form<T: Real>(
    sol: &StateSolution<T>,
    mesh: &TriMesh<T>,
    f_shift: Complex<T>,
    g_shift: Complex<T>,
) -> Complex<T> {
    let dofs = sol.dofs();
    let mut acc = zero();
    for e in mesh.edges_with_tag(BoundaryTag::G1) {
        let d = dofs.boundary_dofs(e);
        let m = edge_mass(dofs.order(), mesh.edge_length(e));
        let n = d.len();
        for i in 0..n {
            let fi = (sol.u.value(d[i]) - f_shift).conj();
            for j in 0..n {
                acc = acc + fi * (sol.u.value(d[j]) - g_shift) * m[i * n + j];
            }
        }
    }
    acc
}

/// `||u - u_target||^2 + xi ||u - mean||^2` on `G1`, integrated exactly.
pub fn eval_j1<T: Real>(sol: &StateSolution<T>, mesh: &TriMesh<T>, spec: &ObjectiveSpec<T>) -> Result<T> {
    let mean = mean_elevation(sol, mesh)?;
    let target = Complex::new(spec.u_target, T::zero());
    let mut j = edge_form(sol, mesh, target, target).re;
    if spec.xi != T::zero() {
        j += spec.xi * edge_form(sol, mesh, mean, mean).re;
    }
    Ok(j)
}

/// Weighted sum of per-wave tracking terms; weights come from `spec.waves`.
pub fn eval_j2<T: Real>(sols: &[StateSolution<T>], mesh: &TriMesh<T>, spec: &ObjectiveSpec<T>) -> Result<T> {
    if sols.len() != spec.waves.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} solutions for {} waves",
            sols.len(),
            spec.waves.len()
        )));
    }
    let mut total = T::zero();
    for (s, w) in sols.iter().zip(&spec.waves) {
        if w.weight != T::zero() {
            total += w.weight * eval_j1(s, mesh, spec)?;
        }
    }
    Ok(total)
}

/// `nu1 |Omega|`.
pub fn eval_j3<T: Real>(mesh: &TriMesh<T>, nu1: T) -> Result<T> {
    if nu1 == T::zero() {
        return Ok(T::zero());
    }
    Ok(nu1 * mesh.domain_area(Region::Omega)?)
}

/// `nu2 |G5|`; zero when the mesh has no obstacle boundary.
pub fn eval_j4<T: Real>(mesh: &TriMesh<T>, nu2: T) -> Result<T> {
    if nu2 == T::zero() || !mesh.has_tag(BoundaryTag::G5) {
        return Ok(T::zero());
    }
    Ok(nu2 * mesh.boundary_length(BoundaryTag::G5)?)
}

pub fn eval_objective<T: Real>(
    sols: &[StateSolution<T>],
    mesh: &TriMesh<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<ObjectiveParts<T>> {
    Ok(ObjectiveParts {
        tracking: eval_j2(sols, mesh, spec)?,
        area: eval_j3(mesh, spec.nu1)?,
        perimeter: eval_j4(mesh, spec.nu2)?,
    })
}

/// Gradient of `eval_j1` with respect to the conjugate nodal values:
/// `M (u - u_target) + xi M (u - mean)` assembled over `G1`.
pub(crate) fn tracking_residual<T: Real>(
    sol: &StateSolution<T>,
    mesh: &TriMesh<T>,
    spec: &ObjectiveSpec<T>,
) -> Result<Vec<Pair<T>>> {
    let mean = mean_elevation(sol, mesh)?;
    let dofs = sol.dofs();
    let target = Complex::new(spec.u_target, T::zero());
    let mut g = vec![[T::zero(); 2]; dofs.n_dofs()];
    for e in mesh.edges_with_tag(BoundaryTag::G1) {
        let d = dofs.boundary_dofs(e);
        let m = edge_mass(dofs.order(), mesh.edge_length(e));
        let n = d.len();
        for i in 0..n {
            let mut z = zero();
            for j in 0..n {
                let u = sol.u.value(d[j]);
                z = z + ((u - target) + (u - mean) * spec.xi) * m[i * n + j];
            }
            g[d[i]][0] += z.re;
            g[d[i]][1] += z.im;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{ComplexNodalField, Order};
    use crate::geom::Vec2;
    use crate::mesh::{rectangle, RectangleTags};
    use crate::state::{solve_state, Regime};
    use std::f64::consts::PI;

    fn strip() -> TriMesh<f64> {
        rectangle(Vec2::new(0.0, -1.0), Vec2::new(2.0, 1.0), 8, 4, RectangleTags::default()).unwrap()
    }

    fn with_field(
        m: &TriMesh<f64>,
        order: Order,
        f: impl Fn(Vec2<f64>) -> Complex<f64>,
    ) -> StateSolution<f64> {
        let w = WaveSpec::new(3.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let mut s = solve_state(m, &w, Regime::Scatterer, order).unwrap();
        s.u = ComplexNodalField::from_fn(s.dofs(), f);
        s
    }

    fn spec(u_target: f64, xi: f64) -> ObjectiveSpec<f64> {
        let mut s = ObjectiveSpec::new(vec![WaveSpec::new(3.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0))]);
        s.u_target = u_target;
        s.xi = xi;
        s
    }

    #[test]
    fn mean_of_constant_linear_and_odd_traces() {
        let m = strip();
        for order in [Order::P1, Order::P2] {
            let c = Complex::new(0.3, -1.1);
            assert!((mean_elevation(&with_field(&m, order, |_| c), &m).unwrap() - c).norm() < 1e-14);
            // G1 runs from x = 0 to x = 2
            let odd = with_field(&m, order, |p| Complex::new(p.x - 1.0, 2.0 * (1.0 - p.x)));
            assert!(mean_elevation(&odd, &m).unwrap().norm() < 1e-14);
            let lin = with_field(&m, order, |p| Complex::new(1.0 + 3.0 * p.x, 0.0));
            assert!((mean_elevation(&lin, &m).unwrap().re - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn j1_simple_values() {
        let m = strip();
        let s = with_field(&m, Order::P1, |_| Complex::new(0.7, 0.0));
        assert!(eval_j1(&s, &m, &spec(0.7, 3.0)).unwrap().abs() < 1e-15);
        // u = target + c, no variance: c^2 l
        assert!((eval_j1(&s, &m, &spec(0.2, 0.0)).unwrap() - 0.25 * 2.0).abs() < 1e-14);
        let wavy = with_field(&m, Order::P1, |p| Complex::new((3.0 * p.x).sin(), p.x));
        let a = eval_j1(&wavy, &m, &spec(0.0, 0.0)).unwrap();
        let b = eval_j1(&wavy, &m, &spec(0.0, 0.5)).unwrap();
        assert!(b > a);
    }

    #[test]
    fn j1_matches_gauss_quadrature() {
        let m = strip();
        for order in [Order::P1, Order::P2] {
            let s = with_field(&m, order, |p| Complex::new((3.0 * p.x).cos(), p.x * p.x - p.y));
            let sp = spec(0.4, 0.7);
            let mean = mean_elevation(&s, &m).unwrap();
            let mut q = 0.0;
            let dofs = s.dofs();
            let mut phi = [0.0; 3];
            for e in m.edges_with_tag(BoundaryTag::G1) {
                let d = dofs.boundary_dofs(e);
                let l = m.edge_length(e);
                for (t, w) in crate::fem::element::gauss_edge::<f64>(3) {
                    crate::fem::element::edge_values(order, t, &mut phi);
                    let u: Complex<f64> = d.iter().enumerate().map(|(a, &i)| s.u.value(i) * phi[a]).sum();
                    q += w * l * ((u - 0.4).norm_sqr() + 0.7 * (u - mean).norm_sqr());
                }
            }
            let j = eval_j1(&s, &m, &sp).unwrap();
            assert!((j - q).abs() < 1e-12 * q.max(1.0), "{j} vs {q}");
        }
    }

    #[test]
    fn j2_weights_and_regularizers() {
        let m = strip();
        let s = with_field(&m, Order::P1, |p| Complex::new(p.x, 1.0));
        let mut sp = spec(0.0, 0.0);
        let j1 = eval_j1(&s, &m, &sp).unwrap();
        assert_eq!(eval_j2(std::slice::from_ref(&s), &m, &sp).unwrap(), j1);
        sp.waves[0].weight = 0.0;
        assert_eq!(eval_j2(std::slice::from_ref(&s), &m, &sp).unwrap(), 0.0);
        assert!(eval_j2(&[], &m, &sp).is_err());
        assert_eq!(eval_j3(&m, 0.0).unwrap(), 0.0);
        assert!((eval_j3(&m, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eval_j4(&m, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn residual_is_half_gradient_of_j1() {
        // J(u + t h) = J + 2 t Re(g^H h) + O(t^2)
        let m = strip();
        let s = with_field(&m, Order::P2, |p| Complex::new(p.x.sin(), p.x * 0.5 - 1.0));
        let sp = spec(0.3, 0.8);
        let g = tracking_residual(&s, &m, &sp).unwrap();
        let h: Vec<Complex<f64>> = (0..s.u.len()).map(|i| Complex::new((i as f64).cos(), (1.7 * i as f64).sin())).collect();
        let t = 1e-6;
        let shifted = |sign: f64| {
            let mut s2 = s.clone();
            for i in 0..h.len() {
                s2.u.re[i] += sign * t * h[i].re;
                s2.u.im[i] += sign * t * h[i].im;
            }
            eval_j1(&s2, &m, &sp).unwrap()
        };
        let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * t);
        let an: f64 = 2.0 * (0..h.len()).map(|i| g[i][0] * h[i].re + g[i][1] * h[i].im).sum::<f64>();
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }
}
