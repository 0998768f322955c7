use coastopt_core::mesh::{build_periodic_pairing, check_shape_validity, parse_msh, BoundaryTag, PhysicalNames, Region};
use coastopt_core::Mesh;
use coastopt_meshgen::{default_h, fixture, FIXTURES};

fn load(name: &str, h: f64) -> Mesh {
    let f = fixture(name, Some(h)).unwrap().mesh(h).unwrap();
    parse_msh(&f.to_msh(), &PhysicalNames::default()).unwrap()
}

#[test]
fn every_fixture_loads_valid_and_periodic() {
    for name in FIXTURES {
        let h = 2.0 * default_h(name);
        let m = load(name, h);
        assert!(check_shape_validity(&m, 0.0).is_valid(), "{name}");
        let pairing = build_periodic_pairing(&m, 1e-9).unwrap();
        assert!(!pairing.is_empty(), "{name}");
        for tag in [BoundaryTag::G1, BoundaryTag::G2, BoundaryTag::G3, BoundaryTag::G4] {
            assert!(m.has_tag(tag), "{name} lacks {tag}");
        }
        let obstacle = name != "empty";
        assert_eq!(m.has_tag(BoundaryTag::G5), obstacle, "{name}");
        assert_eq!(m.has_region(Region::Obstacle), obstacle, "{name}");
    }
}

#[test]
fn circle_obstacle_has_expected_size() {
    let m = load("circle", 0.08);
    let len = m.boundary_length(BoundaryTag::G5).unwrap();
    assert!((len - std::f64::consts::PI).abs() < 1e-3, "perimeter {len}");
    let area = m.domain_area(Region::Obstacle).unwrap();
    assert!((area - std::f64::consts::PI * 0.25).abs() < 2e-3, "area {area}");
}

#[test]
fn refinement_increases_vertex_count() {
    let coarse = load("compact", 0.08).n_vertices();
    let fine = load("compact", 0.04).n_vertices();
    let r = fine as f64 / coarse as f64;
    assert!((3.0..5.0).contains(&r), "ratio {r}");
}
