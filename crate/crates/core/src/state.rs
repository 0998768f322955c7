//! Forward Helmholtz scattering problem.
//!
//! Total-field formulation on the water region:
//!
//! ```text
//! -div(phi grad u) - k^2 phi u = 0
//! du/dn + k conj(alpha) u = 0           on G1 (and G5 for a reflecting obstacle)
//! du/dn - i k u = du_inc/dn - i k u_inc on G4
//! u periodic between G2 and G3
//! ```
//!
//! With `alpha = i alpha1`, `alpha1 > 0`, the coast condition absorbs energy
//! under the `exp(-i omega t)` convention of the radiation condition.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_load, assemble_robin, assemble_stiffness_mass, matrix_pattern, BlockCsr,
    CellGeometry, ComplexNodalField, Constraints, DofMap, Order, Pair, PreparedSystem,
};
use crate::geom::Vec2;
use crate::mesh::{build_periodic_pairing, BoundaryTag, Region, TriMesh};
use crate::scalar::Real;
use crate::wave::{incident_field, incident_gradient, WaveSpec};

/// How the obstacle interacts with waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime<T> {
    /// Obstacle cells are excluded; `G5` carries an absorbing condition.
    Scatterer,
    /// Waves pass through the obstacle with contrast `phi2` (water has `phi1`).
    Transmissive { phi1: T, phi2: T },
}

impl<T: Real> Regime<T> {
    /// Stiffness/mass weight of a region, `None` when the region is excluded.
    pub fn weight(&self, region: Region) -> Option<T> {
        match (self, region) {
            (Regime::Scatterer, Region::Omega) => Some(T::one()),
            (Regime::Scatterer, Region::Obstacle) => None,
            (Regime::Transmissive { phi1, .. }, Region::Omega) => Some(*phi1),
            (Regime::Transmissive { phi2, .. }, Region::Obstacle) => Some(*phi2),
        }
    }

    /// Weight of the water region, which scales outer boundary terms.
    pub fn outer_weight(&self) -> T {
        match self {
            Regime::Scatterer => T::one(),
            Regime::Transmissive { phi1, .. } => *phi1,
        }
    }

    pub fn is_transmissive(&self) -> bool {
        matches!(self, Regime::Transmissive { .. })
    }

    pub fn validate(&self, mesh: &TriMesh<T>) -> Result<()> {
        for tag in [BoundaryTag::G1, BoundaryTag::G4] {
            if !mesh.has_tag(tag) {
                return Err(Error::UnknownTag(tag.to_string()));
            }
        }
        if let Regime::Transmissive { phi1, phi2 } = *self {
            if !(phi1 > T::zero() && phi2 > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "transmission coefficients must be positive, got ({phi1}, {phi2})"
                )));
            }
            if !mesh.has_region(Region::Obstacle) || !mesh.has_tag(BoundaryTag::G5) {
                return Err(Error::RegimeMismatch(
                    "transmissive regime needs a meshed obstacle region and a G5 interface".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Robin coefficient `k conj(alpha)` of the absorbing condition.
pub fn pabc_coefficient<T: Real>(k: T, alpha: Complex<T>) -> Complex<T> {
    alpha.conj() * k
}

/// Mesh-dependent data shared by all solves on one mesh.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub dofs: Arc<DofMap<T>>,
    /// DOF-level `(master, slave)` pairs between `G2` and `G3`.
    pub periodic: Vec<(usize, usize)>,
    /// DOFs touched by at least one active cell.
    pub active: Vec<bool>,
    pub regime: Regime<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(mesh: &TriMesh<T>, order: Order, regime: Regime<T>) -> Result<Self> {
        let dofs = DofMap::new(mesh, order);
        let periodic = periodic_pairs(mesh, &dofs)?;
        let mut active = vec![false; dofs.n_dofs()];
        for c in 0..mesh.n_cells() {
            if regime.weight(mesh.regions()[c]).is_some() {
                for &d in dofs.cell(c) {
                    active[d] = true;
                }
            }
        }
        Ok(Self {
            dofs: Arc::new(dofs),
            periodic,
            active,
            regime,
        })
    }

    pub fn order(&self) -> Order {
        self.dofs.order()
    }

    pub fn cell_active(&self, mesh: &TriMesh<T>, c: usize) -> bool {
        self.regime.weight(mesh.regions()[c]).is_some()
    }

    /// Periodic coupling plus zero values on DOFs outside the active region.
    pub fn constraints(&self) -> Constraints<T> {
        let mut c = Constraints::none(self.dofs.n_dofs());
        c.add_periodic(&self.periodic);
        for (i, &a) in self.active.iter().enumerate() {
            if !a {
                c.fix(i, [T::zero(); 2]);
            }
        }
        c
    }
}

fn periodic_pairs<T: Real>(mesh: &TriMesh<T>, dofs: &DofMap<T>) -> Result<Vec<(usize, usize)>> {
    if !mesh.has_tag(BoundaryTag::G2) && !mesh.has_tag(BoundaryTag::G3) {
        return Ok(Vec::new());
    }
    let (mut lo, mut hi) = (mesh.vertices()[0], mesh.vertices()[0]);
    for p in mesh.vertices() {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let tol = (hi - lo).norm() * T::lit(1e-6);
    let pairing = build_periodic_pairing(mesh, tol)?;
    Ok(dofs.periodic_pairs(mesh, &pairing))
}

/// Helmholtz operator `phi (K - k^2 M)` plus Robin terms `c (u, v)` on the given tags.
pub fn helmholtz_matrix<T: Real>(
    mesh: &TriMesh<T>,
    disc: &Discretization<T>,
    k: T,
    robin: &[(BoundaryTag, Complex<T>)],
) -> Result<BlockCsr<T>> {
    let mut a = matrix_pattern(&disc.dofs, mesh.n_cells());
    let k2 = k * k;
    assemble_stiffness_mass(mesh, &disc.dofs, &mut a, |r| {
        disc.regime
            .weight(r)
            .map(|w| (Complex::new(w, T::zero()), Complex::new(-k2 * w, T::zero())))
    });
    for &(tag, c) in robin {
        assemble_robin(mesh, &disc.dofs, &mut a, tag, c)?;
    }
    Ok(a)
}

/// Robin terms of the state problem for one wave.
pub fn state_robin_terms<T: Real>(mesh: &TriMesh<T>, wave: &WaveSpec<T>, regime: Regime<T>) -> Vec<(BoundaryTag, Complex<T>)> {
    let w = regime.outer_weight();
    let mut terms = vec![
        (BoundaryTag::G4, Complex::new(T::zero(), -wave.k * w)),
        (BoundaryTag::G1, pabc_coefficient(wave.k, wave.alpha_coast) * w),
    ];
    if !regime.is_transmissive() && mesh.has_tag(BoundaryTag::G5) {
        terms.push((BoundaryTag::G5, pabc_coefficient(wave.k, wave.alpha_obstacle)));
    }
    terms
}

/// Forward solution for one wave.
#[derive(Debug, Clone)]
pub struct StateSolution<T> {
    pub u: ComplexNodalField<T>,
    pub wave: WaveSpec<T>,
    pub regime: Regime<T>,
    pub disc: Arc<Discretization<T>>,
    /// Factorized operator, reused by the adjoint solve.
    pub system: Arc<PreparedSystem<T>>,
}

impl<T: Real> StateSolution<T> {
    pub fn dofs(&self) -> &DofMap<T> {
        &self.disc.dofs
    }
}

/// Sommerfeld data `du_inc/dn - i k u_inc` assembled on `G4`, scaled by `weight`.
fn incident_load<T: Real>(mesh: &TriMesh<T>, dofs: &DofMap<T>, wave: &WaveSpec<T>, weight: T) -> Result<Vec<Pair<T>>> {
    let mut rhs = vec![[T::zero(); 2]; dofs.n_dofs()];
    let ik = Complex::new(T::zero(), wave.k);
    assemble_boundary_load(mesh, dofs, &mut rhs, BoundaryTag::G4, |x, n| {
        let g = incident_gradient(wave, x);
        (g[0] * n.x + g[1] * n.y - ik * incident_field(wave, x)) * weight
    })?;
    Ok(rhs)
}

pub fn solve_state<T: Real>(mesh: &TriMesh<T>, wave: &WaveSpec<T>, regime: Regime<T>, order: Order) -> Result<StateSolution<T>> {
    let disc = Arc::new(Discretization::new(mesh, order, regime)?);
    Ok(solve_states_on(mesh, &disc, std::slice::from_ref(wave))?.remove(0))
}

/// Solves for several waves on one mesh. Waves with identical operators
/// share a factorization; distinct operators are factorized in parallel.
pub fn solve_states_on<T: Real>(mesh: &TriMesh<T>, disc: &Arc<Discretization<T>>, waves: &[WaveSpec<T>]) -> Result<Vec<StateSolution<T>>> {
    disc.regime.validate(mesh)?;
    if disc.dofs.generation() != mesh.generation() {
        return Err(Error::StaleField {
            field: disc.dofs.generation(),
            mesh: mesh.generation(),
        });
    }
    for w in waves {
        w.validate()?;
    }
    let key = |w: &WaveSpec<T>| {
        let b = |x: T| x.to_f64_lossy().to_bits();
        (b(w.k), b(w.alpha_coast.re), b(w.alpha_coast.im), b(w.alpha_obstacle.re), b(w.alpha_obstacle.im))
    };
    let mut groups: Vec<usize> = Vec::new();
    let mut index: HashMap<_, usize> = HashMap::new();
    let mut group_of = Vec::with_capacity(waves.len());
    for (i, w) in waves.iter().enumerate() {
        let g = *index.entry(key(w)).or_insert_with(|| {
            groups.push(i);
            groups.len() - 1
        });
        group_of.push(g);
    }
    let constraints = disc.constraints();
    let systems: Vec<Arc<PreparedSystem<T>>> = groups
        .par_iter()
        .map(|&i| {
            let w = &waves[i];
            let a = helmholtz_matrix(mesh, disc, w.k, &state_robin_terms(mesh, w, disc.regime))?;
            Ok(Arc::new(PreparedSystem::new(&a, &constraints, disc.dofs.coords())?))
        })
        .collect::<Result<_>>()?;
    waves
        .par_iter()
        .zip(group_of.par_iter())
        .map(|(w, &g)| {
            let rhs = incident_load(mesh, &disc.dofs, w, disc.regime.outer_weight())?;
            let x = systems[g].solve(&rhs)?;
            Ok(StateSolution {
                u: ComplexNodalField::from_pairs(&x, disc.order(), mesh.generation()),
                wave: *w,
                regime: disc.regime,
                disc: Arc::clone(disc),
                system: Arc::clone(&systems[g]),
            })
        })
        .collect()
}

/// Boundary condition `du/dn + c u = g` on `tag`.
pub struct RobinTerm<'a, T> {
    pub tag: BoundaryTag,
    pub coefficient: Complex<T>,
    pub data: &'a (dyn Fn(Vec2<T>, Vec2<T>) -> Complex<T> + Sync),
}

/// Helmholtz problem with arbitrary Robin data on every listed tag; used to
/// verify the discretization against manufactured solutions.
pub fn solve_general_robin<T: Real>(
    mesh: &TriMesh<T>,
    order: Order,
    k: T,
    terms: &[RobinTerm<'_, T>],
) -> Result<(ComplexNodalField<T>, DofMap<T>)> {
    let disc = Discretization::new(mesh, order, Regime::Scatterer)?;
    let robin: Vec<_> = terms.iter().map(|t| (t.tag, t.coefficient)).collect();
    let a = helmholtz_matrix(mesh, &disc, k, &robin)?;
    let mut rhs = vec![[T::zero(); 2]; disc.dofs.n_dofs()];
    for t in terms {
        assemble_boundary_load(mesh, &disc.dofs, &mut rhs, t.tag, |x, n| (t.data)(x, n))?;
    }
    let sys = PreparedSystem::new(&a, &disc.constraints(), disc.dofs.coords())?;
    let x = sys.solve(&rhs)?;
    let dofs = Arc::try_unwrap(disc.dofs).unwrap_or_else(|a| (*a).clone());
    Ok((ComplexNodalField::from_pairs(&x, order, mesh.generation()), dofs))
}

/// Interface flux imbalance: `L2(G5)` norm of `phi1 du/dn|_water - phi2 du/dn|_obstacle`,
/// with gradients taken from the two cells adjacent to each interface edge.
pub fn flux_jump_check<T: Real>(mesh: &TriMesh<T>, sol: &StateSolution<T>) -> Result<T> {
    let Regime::Transmissive { phi1, phi2 } = sol.regime else {
        return Err(Error::RegimeMismatch("flux jump is defined for transmissive obstacles".into()));
    };
    sol.u.check_mesh(mesh)?;
    let dofs = sol.dofs();
    let mut total = T::zero();
    let half = T::lit(0.5);
    for e in mesh.edges_with_tag(BoundaryTag::G5) {
        let Some(twin) = e.twin else { continue };
        let n = mesh.outward_normal(e);
        let mid = (mesh.vertices()[e.a] + mesh.vertices()[e.b]).scale(half);
        let flux = |c: usize| {
            let geo = CellGeometry::new(mesh.cell_points(c));
            let lambda = barycentric(&geo, mid);
            let (_, g) = sol.u.eval_cell(dofs, &geo, c, lambda);
            g[0] * n.x + g[1] * n.y
        };
        let jump = flux(e.cell) * phi1 - flux(twin) * phi2;
        total += jump.norm_sqr() * mesh.edge_length(e);
    }
    Ok(total.sqrt())
}

fn barycentric<T: Real>(geo: &CellGeometry<T>, x: Vec2<T>) -> [T; 3] {
    let p0 = geo.points[0];
    let l1 = geo.grad_lambda[1].dot(x - p0);
    let l2 = geo.grad_lambda[2].dot(x - p0);
    [T::one() - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::field::l2_error;
    use crate::mesh::{rectangle, RectangleTags};
    use std::f64::consts::PI;

    fn strip(n: usize) -> TriMesh<f64> {
        rectangle(Vec2::new(0.0, -1.0), Vec2::new(1.0, 1.0), n, n, RectangleTags::default()).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let m = strip(8);
        let w = WaveSpec::new(5.0, 0.0, 1.5 * PI, Complex::new(0.0, 0.2));
        let s = solve_state(&m, &w, Regime::Scatterer, Order::P1).unwrap();
        assert!(s.u.re.iter().chain(&s.u.im).all(|&x| x == 0.0));
    }

    #[test]
    fn normal_incidence_load_on_flat_top() {
        // n = (0, 1), d = (0, -1): g = du_inc/dn - ik u_inc = -2ik u_inc
        let w = WaveSpec::new(3.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let x = Vec2::new(0.4, 0.0);
        let g = incident_gradient(&w, x);
        let val = g[1] - Complex::new(0.0, 3.0) * incident_field(&w, x);
        let expect = Complex::new(0.0, -6.0) * incident_field(&w, x);
        assert!((val - expect).norm() < 1e-14);
    }

    #[test]
    fn plane_wave_on_periodic_strip_is_periodic_and_exactish() {
        // sound-hard coast at y = -1: exact total field is a standing wave
        let k = 4.0;
        let w = WaveSpec::new(k, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let m = strip(32);
        let s = solve_state(&m, &w, Regime::Scatterer, Order::P1).unwrap();
        let pairs = &s.disc.periodic;
        assert_eq!(pairs.len(), 33);
        for &(a, b) in pairs {
            assert_eq!(s.u.value(a), s.u.value(b));
        }
        // u = exp(-iky) + exp(ik(y + 2)), du/dy = 0 at y = -1
        let exact = |p: Vec2<f64>| Complex::new(0.0, -k * p.y).exp() + Complex::new(0.0, k * (p.y + 2.0)).exp();
        let err = l2_error(&m, s.dofs(), &s.u, |_| true, exact);
        assert!(err < 0.05, "err {err}");
    }

    #[test]
    fn alpha_zero_matrix_is_bitwise_alpha_free() {
        let m = strip(6);
        let disc = Discretization::new(&m, Order::P1, Regime::Scatterer).unwrap();
        let w = WaveSpec::new(5.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let a = helmholtz_matrix(&m, &disc, 5.0, &state_robin_terms(&m, &w, Regime::Scatterer)).unwrap();
        let b = helmholtz_matrix(&m, &disc, 5.0, &[(BoundaryTag::G4, Complex::new(0.0, -5.0))]).unwrap();
        assert_eq!(a, b);
    }

    /// `conj(u)^T M u` over the edges carrying `tag`.
    fn edge_energy(m: &TriMesh<f64>, s: &StateSolution<f64>, tag: BoundaryTag) -> f64 {
        let mut e2 = 0.0;
        for e in m.edges_with_tag(tag) {
            let mm = crate::fem::element::edge_mass(Order::P1, m.edge_length(e));
            let d = [e.a, e.b];
            for i in 0..2 {
                for j in 0..2 {
                    e2 += mm[i * 2 + j] * (s.u.value(d[i]).conj() * s.u.value(d[j])).re;
                }
            }
        }
        e2
    }

    /// Net power entering through `G4`, `-Im integral of conj(u) du/dn`, with
    /// `du/dn = i k u + g` read off the boundary condition and `g` taken from
    /// the assembled load.
    fn inflow(m: &TriMesh<f64>, s: &StateSolution<f64>) -> f64 {
        let b = incident_load(m, s.dofs(), &s.wave, 1.0).unwrap();
        let ub: f64 = (0..b.len())
            .map(|i| (s.u.value(i).conj() * Complex::new(b[i][0], b[i][1])).im)
            .sum();
        -s.wave.k * edge_energy(m, s, BoundaryTag::G4) - ub
    }

    #[test]
    fn absorbing_coast_draws_energy_in() {
        let m = strip(24);
        let mk = |a1: f64| WaveSpec::new(6.0, 1.0, 1.4 * PI, Complex::new(0.0, a1));
        let mut prev = 0.0;
        for a1 in [0.0, 0.2, 0.5] {
            let s = solve_state(&m, &mk(a1), Regime::Scatterer, Order::P1).unwrap();
            let p = inflow(&m, &s);
            // power entering at G4 leaves through the coast
            let absorbed = 6.0 * a1 * edge_energy(&m, &s, BoundaryTag::G1);
            assert!((p - absorbed).abs() < 1e-9 * (1.0 + absorbed), "a1 {a1}: {p} vs {absorbed}");
            if a1 == 0.0 {
                assert!(p.abs() < 1e-9, "p0 {p}");
            } else {
                assert!(p > 1e-3 && p > prev, "a1 {a1}: {p} after {prev}");
            }
            prev = p;
        }
    }

    #[test]
    fn regime_checks() {
        let m = strip(4);
        let w = WaveSpec::new(5.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let t = Regime::Transmissive { phi1: 1.0, phi2: 0.1 };
        assert!(matches!(solve_state(&m, &w, t, Order::P1), Err(Error::RegimeMismatch(_))));
        let s = solve_state(&m, &w, Regime::Scatterer, Order::P1).unwrap();
        assert!(matches!(flux_jump_check(&m, &s), Err(Error::RegimeMismatch(_))));
    }

    #[test]
    fn p2_standing_wave_more_accurate_than_p1() {
        let k = 4.0;
        let w = WaveSpec::new(k, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
        let m = strip(12);
        let exact = |p: Vec2<f64>| Complex::new(0.0, -k * p.y).exp() + Complex::new(0.0, k * (p.y + 2.0)).exp();
        let s1 = solve_state(&m, &w, Regime::Scatterer, Order::P1).unwrap();
        let s2 = solve_state(&m, &w, Regime::Scatterer, Order::P2).unwrap();
        let e1 = l2_error(&m, s1.dofs(), &s1.u, |_| true, exact);
        let e2 = l2_error(&m, s2.dofs(), &s2.u, |_| true, exact);
        assert!(e2 < e1 / 5.0, "e1 {e1} e2 {e2}");
    }
}
