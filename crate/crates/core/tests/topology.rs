mod common;

use std::f64::consts::PI;

use coastopt_core::adjoint::{solve_adjoint_multiwave, LateralCondition};
use coastopt_core::mesh::{with_obstacle, Region};
use coastopt_core::objective::ObjectiveSpec;
use coastopt_core::optimize::{evaluate, run_topology_then_shape, OptimizeConfig, TopologyConfig};
use coastopt_core::sensitivity::topological_derivative;
use coastopt_core::state::Regime;
use coastopt_core::topo_init::dbscan;
use coastopt_core::wave::WaveSpec;
use coastopt_core::Vec2;
use num_complex::Complex;
use proptest::prelude::*;

use common::{dbscan_reference, fixture, same_partition};

fn config() -> OptimizeConfig<f64> {
    let w = WaveSpec::new(12.0, 1.0, 1.5 * PI, Complex::new(0.0, 0.0));
    let mut c = OptimizeConfig::new(ObjectiveSpec::new(vec![w]), Regime::Scatterer);
    c.objective.nu2 = 0.0;
    c
}

#[test]
fn small_obstacle_changes_objective_with_the_sign_of_the_field() {
    let mesh = fixture("empty");
    let c = config();
    let (states, parts) = evaluate(&mesh, &c).unwrap();
    let adjoints = solve_adjoint_multiwave(&mesh, &states, &c.objective, LateralCondition::Periodic).unwrap();
    let td = topological_derivative(&mesh, &states, &adjoints).unwrap();
    let mut inner: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&i| {
            let p = mesh.vertices()[i];
            p.x > 0.5 && p.x < 4.5 && p.y > -4.5 && p.y < -0.5
        })
        .collect();
    inner.sort_by(|&a, &b| td.values[a].total_cmp(&td.values[b]));
    let change = |i: usize| {
        let c0 = mesh.vertices()[i];
        let m = with_obstacle(&mesh, |q: Vec2<f64>| (q - c0).norm() < 0.06).unwrap();
        assert!(m.has_region(Region::Obstacle));
        evaluate(&m, &c).unwrap().1.total() - parts.total()
    };
    let best = inner[0];
    let worst = inner[inner.len() - 1];
    assert!(td.values[best] < 0.0 && td.values[worst] > 0.0);
    assert!(change(best) < 0.0, "inserting at the most negative value should help");
    assert!(change(worst) > 0.0, "inserting at the most positive value should hurt");
}

#[test]
fn topology_phase_on_the_empty_fixture_proposes_obstacles() {
    let mesh = fixture("empty");
    let out = run_topology_then_shape(&mesh, &config(), &TopologyConfig::default()).unwrap();
    assert!(out.clusters.n_clusters >= 1);
    let geo = out.geometry.expect("geometry for at least one cluster");
    assert!(geo.contains("Physical Surface(\"OMEGA\", 6)"));
    assert!(geo.contains("Physical Curve(\"G5\", 5)"));
    assert!(out.outlines.iter().all(|o| o.len() >= 3));
    // every selected point carries a beneficial value
    assert!(out.selection.vertices.iter().all(|&i| out.field.values[i] < 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dbscan_agrees_with_reference(
        pts in prop::collection::vec((0u8..60, 0u8..60), 0..200),
        eps in 1.0f64..8.0,
        m in 1usize..12,
    ) {
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x as f64 * 0.5, y as f64 * 0.5)).collect();
        let v: Vec<Vec2<f64>> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let got = dbscan(&v, eps, m).unwrap();
        let reference = dbscan_reference(&pts, eps, m);
        prop_assert!(same_partition(&got.labels, &reference));
        let max = reference.iter().copied().max().unwrap_or(-1);
        prop_assert_eq!(got.n_clusters as i64, max + 1);
    }

    #[test]
    fn dbscan_core_partition_ignores_order(
        pts in prop::collection::vec((0u8..40, 0u8..40), 1..150),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let v: Vec<Vec2<f64>> = pts.iter().map(|&(x, y)| Vec2::new(x as f64, y as f64)).collect();
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Vec2<f64>> = order.iter().map(|&i| v[i]).collect();
        let (eps, m) = (3.0, 4);
        let a = dbscan(&v, eps, m).unwrap();
        let b = dbscan(&shuffled, eps, m).unwrap();
        prop_assert_eq!(a.n_clusters, b.n_clusters);
        // same clustering of core points up to relabeling
        let core = |p: Vec2<f64>| v.iter().filter(|q| (**q - p).norm() <= eps).count() >= m;
        let la: Vec<i64> = order.iter().filter(|&&i| core(v[i])).map(|&i| a.labels[i]).collect();
        let lb: Vec<i64> = (0..v.len()).filter(|&j| core(shuffled[j])).map(|j| b.labels[j]).collect();
        prop_assert!(same_partition(&la, &lb));
    }
}
