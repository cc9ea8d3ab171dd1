//! Cross-checks of the constraint-generation solver against the dense
//! full-enumeration oracle in `common`: on every mesh small enough to list
//! all simple source→sink curves, the two must agree to 1e-6 relative.

mod common;

use modsurf::modulus::{solve_modulus, ModulusValue, SolveOptions};
use modsurf::runner::build_surface;
use modsurf::surface::{FamilySpec, MetricMesh, QuadFrame};

fn tight() -> SolveOptions<f64> {
    SolveOptions {
        eps_admissibility: 1e-9,
        eps_gap: 1e-9,
        max_iterations: None,
    }
}

fn cross_check(mesh: &MetricMesh<f64>, frame: Option<&QuadFrame>, family: &FamilySpec, tag: &str) {
    let rf = family.resolve(mesh, frame).unwrap();
    let paths = common::enumerate_simple_paths(
        mesh,
        &rf.sources,
        &rf.sinks,
        rf.allowed.as_deref(),
        40,
    )
    .unwrap_or_else(|| panic!("{tag}: more than 40 simple source-sink paths"));
    assert!(!paths.is_empty(), "{tag}: no paths enumerated");
    let expect = common::dense_qp_modulus(mesh, &paths);
    let got = solve_modulus(mesh, family, frame, &tight()).unwrap();
    assert!(got.certified, "{tag}: solver did not certify");
    match got.value {
        ModulusValue::Finite(v) => {
            assert!(
                (v - expect).abs() <= 1e-6 * expect.max(1.0),
                "{tag}: solver {v} vs dense QP {expect}"
            );
        }
        ModulusValue::Infinite => {
            assert!(expect.is_infinite(), "{tag}: solver ∞ vs dense QP {expect}");
        }
    }
}

fn zoo_check(name: &str, n: usize, family: FamilySpec, fam: &str) {
    let (mesh, frame) = build_surface(name, n).unwrap();
    cross_check(&mesh, Some(&frame), &family, &format!("{name} n={n} {fam}"));
}

#[test]
fn unit_square_coarse() {
    zoo_check("square", 1, FamilySpec::gamma1(), "gamma1");
    zoo_check("square", 1, FamilySpec::gamma2(), "gamma2");
    zoo_check("square", 2, FamilySpec::gamma1(), "gamma1");
    zoo_check("square", 2, FamilySpec::gamma2(), "gamma2");
}

#[test]
fn rectangles_coarse() {
    zoo_check("rect2", 1, FamilySpec::gamma1(), "gamma1");
    zoo_check("rect2", 1, FamilySpec::gamma2(), "gamma2");
    zoo_check("rect3", 1, FamilySpec::gamma1(), "gamma1");
    zoo_check("rect3", 1, FamilySpec::gamma2(), "gamma2");
}

#[test]
fn conformal_weights_coarse() {
    zoo_check("conformal_poly", 2, FamilySpec::gamma1(), "gamma1");
    zoo_check("conformal_poly", 2, FamilySpec::gamma2(), "gamma2");
    zoo_check("conformal_sine", 2, FamilySpec::gamma1(), "gamma1");
    zoo_check("conformal_sine", 2, FamilySpec::gamma2(), "gamma2");
}

/// A 1×2 vertical strip of quads whose middle rung has zero length and whose
/// two faces carry different areas: curves may switch columns for free at
/// the pinch, so the working set sees genuinely degenerate constraints.
fn pinched_strip(top_area: f64) -> MetricMesh<f64> {
    let vertices = vec![
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [1.0, 1.0],
        [0.0, 2.0],
        [1.0, 2.0],
    ];
    let edges = vec![
        (0, 1, 1.0), // bottom
        (2, 3, 0.0), // pinched middle rung
        (4, 5, 1.0), // top
        (0, 2, 1.0),
        (1, 3, 1.0),
        (2, 4, 1.0),
        (3, 5, 1.0),
    ];
    let faces = vec![
        (vec![0, 1, 3, 2], 1.0),
        (vec![2, 3, 5, 4], top_area),
    ];
    MetricMesh::new(vertices, edges, faces).unwrap()
}

#[test]
fn pinched_strip_matches_dense_qp() {
    for top_area in [1.0, 2.0, 0.5] {
        let mesh = pinched_strip(top_area);
        let family = FamilySpec::connecting(vec![0, 1], vec![4, 5], None);
        cross_check(&mesh, None, &family, &format!("pinched strip a={top_area}"));
    }
}

#[test]
fn zero_area_half_gives_zero_modulus() {
    let mesh = pinched_strip(0.0);
    let family = FamilySpec::connecting(vec![0, 1], vec![4, 5], None);
    cross_check(&mesh, None, &family, "pinched strip, costless top half");
    let got = solve_modulus(&mesh, &FamilySpec::connecting(vec![0, 1], vec![4, 5], None), None, &tight()).unwrap();
    let v = got.value.finite().unwrap();
    assert!(v.abs() <= 1e-9, "free edges should carry the curves: {v}");
}

#[test]
fn zero_length_connection_is_infinite_for_both() {
    let mesh = pinched_strip(1.0);
    // The pinched rung joins the two endpoint sets directly.
    let family = FamilySpec::connecting(vec![0, 2], vec![3, 5], None);
    cross_check(&mesh, None, &family, "pinch joins source to sink");
}
