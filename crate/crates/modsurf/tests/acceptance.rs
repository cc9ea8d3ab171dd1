//! Acceptance sweep: one test per numbered criterion, so the harness output
//! reads as one pass/fail line per criterion. Every tolerance that appears
//! in an assert is the criterion's stated tolerance, not a solver knob.

mod common;

use std::collections::HashSet;
use std::f64::consts::PI;
use std::time::Instant;

use modsurf::analysis::{
    coarea_check, coarea_u_check, kappa_proved, reciprocality_from, ring_modulus, Flag,
};
use modsurf::curves::{double_traversal, extract_path};
use modsurf::level::level_set;
use modsurf::modulus::{certify, solve_modulus, ModulusResult, ModulusValue, SolveOptions};
use modsurf::potential::{build_potential, max_principle_check};
use modsurf::runner::{
    build_surface, is_smooth, random_connected_region, random_connected_subgraph,
    random_lipschitz_field, run, zoo_names, ExperimentConfig,
};
use modsurf::surface::{Arc, FamilySpec, MetricMesh, QuadFrame, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default() // 1e-6 admissibility, 1e-6 gap
}

fn solve(mesh: &MetricMesh<f64>, frame: &QuadFrame, family: &FamilySpec) -> ModulusResult<f64> {
    solve_modulus(mesh, family, Some(frame), &opts()).unwrap()
}

fn finite(r: &ModulusResult<f64>, tag: &str) -> f64 {
    assert!(r.certified, "{tag}: solve did not certify");
    r.value
        .finite()
        .unwrap_or_else(|| panic!("{tag}: expected a finite modulus"))
}

fn nearest_vertex(mesh: &MetricMesh<f64>, p: [f64; 2]) -> VertexId {
    let d2 = |v: VertexId| {
        let q = mesh.position(v);
        (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
    };
    (0..mesh.vertex_count())
        .min_by(|&a, &b| d2(a).partial_cmp(&d2(b)).unwrap())
        .unwrap()
}

const FAMILIES: [(fn() -> FamilySpec, &str); 2] = [
    (FamilySpec::gamma1, "gamma1"),
    (FamilySpec::gamma2, "gamma2"),
];

/// Rectangles at n = 64: Mod Γ₁ = a/b and Mod Γ₂ = b/a within 3%, each
/// solve within 10 s.
#[test]
fn criterion_1_rectangle_moduli() {
    for (name, aspect) in [("square", 1.0f64), ("rect2", 2.0), ("rect3", 3.0)] {
        let (mesh, frame) = build_surface(name, 64).unwrap();
        for (family, fam) in FAMILIES {
            let expect = if fam == "gamma1" { aspect } else { 1.0 / aspect };
            let clock = Instant::now();
            let r = solve(&mesh, &frame, &family());
            let secs = clock.elapsed().as_secs_f64();
            let v = finite(&r, &format!("{name} {fam}"));
            assert!(
                (v - expect).abs() <= 0.03 * expect,
                "{name} {fam}: modulus {v} outside {expect} ± 3%"
            );
            assert!(
                secs <= 10.0,
                "{name} {fam}: solve took {secs:.1} s, limit 10 s"
            );
        }
    }
}

/// Square and the two smooth conformal-weight surfaces at n = 64: the
/// product lies in [0.94, 1.06] and strictly above 1/(2000²·(4/π)²); the
/// report records a passing lower verdict against all three constants.
#[test]
fn criterion_2_reciprocal_product() {
    for name in ["square", "conformal_poly", "conformal_sine"] {
        let (mesh, frame) = build_surface(name, 64).unwrap();
        let r1 = solve(&mesh, &frame, &FamilySpec::gamma1());
        let r2 = solve(&mesh, &frame, &FamilySpec::gamma2());
        let report = reciprocality_from(&mesh, &r1, &r2, None);
        let product = report
            .product
            .finite()
            .unwrap_or_else(|| panic!("{name}: product is not finite"));
        assert!(
            (0.94..=1.06).contains(&product),
            "{name}: product {product} outside [0.94, 1.06]"
        );
        let floor = kappa_proved::<f64>().recip();
        assert!(
            product > floor,
            "{name}: product {product} not strictly above 1/κ = {floor:e}"
        );
        for verdict in &report.verdicts {
            assert_eq!(
                verdict.lower,
                Flag::Pass,
                "{name}: lower-bound verdict failed against κ = {}",
                verdict.kappa
            );
        }
    }
}

/// Collapsed disk (radius 0.5 in the 3×3 square): finite products above the
/// proved floor at n ∈ {32, 64}; the ring modulus at the disk center stays
/// above half its value under a fourfold radius shrink, while on the
/// Euclidean square it matches 2π/log(R/r) within 10%; finally Mod Γ₁ must
/// exceed the Euclidean value by ≥ 25% at n = 64.
#[test]
fn criterion_3_collapsed_disk() {
    let floor = kappa_proved::<f64>().recip();
    let mut disk64_g1 = f64::NAN;
    for n in [32usize, 64] {
        let (mesh, frame) = build_surface("collapsed_disk", n).unwrap();
        let v1 = finite(
            &solve(&mesh, &frame, &FamilySpec::gamma1()),
            &format!("collapsed_disk n={n} gamma1"),
        );
        let v2 = finite(
            &solve(&mesh, &frame, &FamilySpec::gamma2()),
            &format!("collapsed_disk n={n} gamma2"),
        );
        assert!(
            v1 * v2 >= floor,
            "collapsed_disk n={n}: product {} below 1/κ = {floor:e}",
            v1 * v2
        );
        if n == 64 {
            disk64_g1 = v1;
        }
    }

    // Ring modulus at the disk center: the whole collapsed cluster sits
    // inside every ball around the center, so shrinking r fourfold must not
    // halve the value.
    let (mesh32, _) = build_surface("collapsed_disk", 32).unwrap();
    let center = nearest_vertex(&mesh32, [1.5, 1.5]);
    let ring = |r: f64| {
        let res = ring_modulus(&mesh32, center, r, 0.4, &opts()).unwrap();
        finite(&res, &format!("collapsed_disk n=32 ring r={r}"))
    };
    let (v_base, v_mid, v_shrunk) = (ring(0.1), ring(0.05), ring(0.025));
    assert!(
        v_shrunk >= 0.5 * v_base,
        "disk-center ring modulus fell below half under a fourfold shrink: \
         {v_shrunk} < 0.5·{v_base} (r = 0.05 gave {v_mid})"
    );

    // Euclidean control: on the flat square the ring modulus approximates
    // the classical annulus value.
    let (square, square_frame) = build_surface("square", 64).unwrap();
    let c = nearest_vertex(&square, [0.5, 0.5]);
    let v = finite(
        &ring_modulus(&square, c, 0.05, 0.2, &opts()).unwrap(),
        "square ring",
    );
    let exact = 2.0 * PI / (0.2f64 / 0.05).ln();
    assert!(
        (v - exact).abs() <= 0.10 * exact,
        "square ring modulus {v} not within 10% of 2π/log(R/r) = {exact}"
    );

    // Degradation of the collapsed-disk Γ₁ modulus over its Euclidean
    // counterpart. A perfectly conducting disk of radius 0.5 in the 3×3
    // square raises the effective conductance by 2f/(1−f) ≈ 19.1%
    // (f = π/4/9 the area fraction), and the measured lift sits on that
    // value — so the 25% requirement is left to fail honestly rather than
    // tuned away.
    let euclid = finite(&solve(&square, &square_frame, &FamilySpec::gamma1()), "square gamma1");
    let lift = disk64_g1 / euclid;
    assert!(
        lift >= 1.25,
        "collapsed-disk Γ₁ at n=64 is {disk64_g1:.6}, a {:.2}% lift over the Euclidean {euclid:.6}; \
         required ≥ 25%",
        (lift - 1.0) * 100.0
    );
}

/// Coarea suite at n = 32: 20 seeded Lipschitz fields per surface satisfy
/// lhs ≤ (4L/π)·rhs·1.05; the potential-based check passes with constant
/// 2000 and slack ≥ 100×; the recorded empirical constant stays within
/// 4/π·1.1 on the smooth zoo. Total runtime ≤ 60 s.
#[test]
fn criterion_4_coarea_suite() {
    let clock = Instant::now();
    for (idx, name) in zoo_names().iter().enumerate() {
        let (mesh, frame) = build_surface(name, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7 + idx as u64);
        for k in 0..20 {
            let m = random_lipschitz_field(&mesh, 1.0, &mut rng);
            let g: Vec<f64> = if k % 2 == 0 {
                vec![1.0; mesh.edge_count()]
            } else {
                (0..mesh.edge_count())
                    .map(|_| rng.gen_range(0.1..1.1))
                    .collect()
            };
            let rep = coarea_check(&mesh, &m, 1.0, &g, 64, 0.05).unwrap();
            assert!(
                rep.pass,
                "{name} field {k:02}: coarea lhs {} exceeds bound {}",
                rep.lhs, rep.rhs
            );
        }

        let g1 = solve(&mesh, &frame, &FamilySpec::gamma1());
        let field = build_potential(&mesh, &frame, &g1.density).unwrap();
        let ones = vec![1.0; mesh.edge_count()];
        let rep = coarea_u_check(&mesh, &field, &ones, 64, 0.05).unwrap();
        assert!(
            rep.pass,
            "{name}: potential coarea lhs {} exceeds bound {}",
            rep.lhs, rep.rhs
        );
        assert!(
            rep.lhs > 0.0 && rep.rhs / rep.lhs >= 100.0,
            "{name}: potential coarea slack {} below 100×",
            rep.rhs / rep.lhs
        );
        if is_smooth(name) {
            let empirical = rep.empirical_constant.unwrap_or(f64::INFINITY);
            assert!(
                empirical <= 4.0 / PI * 1.1,
                "{name}: empirical coarea constant {empirical} above 4/π·1.1"
            );
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    assert!(secs <= 60.0, "coarea suite took {secs:.1} s, limit 60 s");
}

/// Potential suite at n = 32 on every zoo surface: exact upper gradients,
/// exact boundary values, the maximum principle on 50 seeded interior
/// regions, and connected level sets meeting ζ₂ and ζ₄ at nine levels.
#[test]
fn criterion_5_potential_suite() {
    for (idx, name) in zoo_names().iter().enumerate() {
        let (mesh, frame) = build_surface(name, 32).unwrap();
        let g1 = solve(&mesh, &frame, &FamilySpec::gamma1());
        let field = build_potential(&mesh, &frame, &g1.density).unwrap();

        let violations = field.upper_gradient_violations(&mesh);
        assert!(
            violations.is_empty(),
            "{name}: {} upper-gradient violations",
            violations.len()
        );
        for &v in frame.arc(Arc::Zeta1) {
            assert_eq!(field.value(v), 0.0, "{name}: u({v}) ≠ 0 on ζ₁");
        }
        for &v in frame.arc(Arc::Zeta3) {
            assert_eq!(field.value(v), 1.0, "{name}: u({v}) ≠ 1 on ζ₃");
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1000 + idx as u64);
        for k in 0..50 {
            let region = random_connected_region(&mesh, &frame, 30, &mut rng).unwrap();
            let rep = max_principle_check(&mesh, &frame, &field, &region).unwrap();
            assert!(
                rep.holds,
                "{name} region {k:02}: range [{}, {}] escapes boundary range [{}, {}]",
                rep.region_min, rep.region_max, rep.boundary_min, rep.boundary_max
            );
        }

        for k in 1..=9 {
            let t = k as f64 / 10.0;
            let cut = level_set(&mesh, &frame, &field, t).unwrap();
            assert!(
                cut.connected(),
                "{name} t={t}: level set is not one dual component"
            );
            assert!(
                cut.meets_arc(Arc::Zeta2) && cut.meets_arc(Arc::Zeta4),
                "{name} t={t}: level set misses ζ₂ or ζ₄"
            );
        }
    }
}

/// Certification: every zoo modulus re-verifies with admissibility residual
/// and relative gap ≤ 1e-6, and the solver agrees with dense full-enumeration
/// QP to 1e-6 relative on every mesh with at most 40 simple source–sink
/// curves.
#[test]
fn criterion_6_solver_certification() {
    for name in zoo_names() {
        let (mesh, frame) = build_surface(name, 32).unwrap();
        for (family, fam) in FAMILIES {
            let family = family();
            let r = solve(&mesh, &frame, &family);
            assert!(r.certified, "{name} {fam}: solve did not certify");
            let cert = certify(&mesh, &family, Some(&frame), &r, &opts()).unwrap();
            assert!(
                cert.admissibility_residual <= 1e-6,
                "{name} {fam}: admissibility residual {}",
                cert.admissibility_residual
            );
            assert!(
                cert.relative_gap <= 1e-6,
                "{name} {fam}: relative gap {}",
                cert.relative_gap
            );
            assert!(cert.ok, "{name} {fam}: certificate rejected: {cert:?}");
        }
    }

    for (name, n) in [
        ("square", 1),
        ("square", 2),
        ("rect2", 1),
        ("rect3", 1),
        ("conformal_poly", 2),
        ("conformal_sine", 2),
    ] {
        let (mesh, frame) = build_surface(name, n).unwrap();
        for (family, fam) in FAMILIES {
            let family = family();
            let tag = format!("{name} n={n} {fam}");
            let rf = family.resolve(&mesh, Some(&frame)).unwrap();
            let paths = common::enumerate_simple_paths(
                &mesh,
                &rf.sources,
                &rf.sinks,
                rf.allowed.as_deref(),
                40,
            )
            .unwrap_or_else(|| panic!("{tag}: more than 40 simple source-sink curves"));
            let expect = common::dense_qp_modulus(&mesh, &paths);
            let r = solve(&mesh, &frame, &family);
            match r.value {
                ModulusValue::Finite(v) => assert!(
                    (v - expect).abs() <= 1e-6 * expect.max(1.0),
                    "{tag}: solver {v} vs dense QP {expect}"
                ),
                ModulusValue::Infinite => {
                    assert!(expect.is_infinite(), "{tag}: solver ∞ vs dense QP {expect}")
                }
            }
        }
    }
}

/// Curves suite: on 50 seeded connected subgraphs per surface, the double
/// traversal covers every edge with multiplicity ≤ 2 and length ≤ 2·ℋ¹,
/// and the extracted path is injective with length ≤ ℋ¹.
#[test]
fn criterion_7_curves_suite() {
    for (idx, name) in zoo_names().iter().enumerate() {
        let (mesh, _frame) = build_surface(name, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + idx as u64);
        for k in 0..50 {
            let sub = random_connected_subgraph(&mesh, 40, &mut rng).unwrap();
            let h1: f64 = sub.iter().map(|&e| mesh.edge(e).length).sum();
            let mut verts: Vec<VertexId> = sub
                .iter()
                .flat_map(|&e| {
                    let ed = mesh.edge(e);
                    [ed.a, ed.b]
                })
                .collect();
            verts.sort_unstable();
            verts.dedup();
            let (x, y) = (verts[0], *verts.last().unwrap());

            let walk = double_traversal(&mesh, &sub, x, y).unwrap();
            let covered: HashSet<_> = walk.edges.iter().copied().collect();
            for &e in &sub {
                assert!(
                    covered.contains(&e),
                    "{name} subgraph {k:02}: edge {e} not covered by the double traversal"
                );
            }
            assert!(
                walk.length <= 2.0 * h1 * (1.0 + 1e-12),
                "{name} subgraph {k:02}: walk length {} exceeds 2·ℋ¹ = {}",
                walk.length,
                2.0 * h1
            );
            assert!(
                walk.multiplicities(&mesh).iter().all(|&m| m <= 2),
                "{name} subgraph {k:02}: an edge is traversed more than twice"
            );

            let path = extract_path(&mesh, &sub, x, y).unwrap();
            assert!(
                path.injective,
                "{name} subgraph {k:02}: extracted path repeats a vertex"
            );
            assert!(
                path.length <= h1 * (1.0 + 1e-12),
                "{name} subgraph {k:02}: path length {} exceeds ℋ¹ = {h1}",
                path.length
            );
        }
    }
}

/// Determinism: two full-suite runs with the same seed write byte-identical
/// reports.
#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut outcomes = Vec::new();
    for sub in ["first", "second"] {
        let config = ExperimentConfig {
            out_dir: dir.path().join(sub),
            ..ExperimentConfig::default()
        };
        outcomes.push(run(&config).unwrap());
    }
    let (a, b) = (&outcomes[0], &outcomes[1]);
    assert_eq!(a.hard_failures, b.hard_failures);
    assert_eq!(a.files.len(), b.files.len(), "runs wrote different file sets");
    for (fa, fb) in a.files.iter().zip(&b.files) {
        assert_eq!(fa.file_name(), fb.file_name(), "runs wrote different file sets");
        let bytes_a = std::fs::read(fa).unwrap();
        let bytes_b = std::fs::read(fb).unwrap();
        assert!(
            bytes_a == bytes_b,
            "{:?} differs between two identically-seeded runs",
            fa.file_name().unwrap()
        );
    }
}
