//! Inequality verification suites: the coarea bound for Lipschitz fields,
//! the coarea bound for the extremal potential, the ball-oscillation bound,
//! ring moduli, and the reciprocal product report that ties them together.
//!
//! Area integrals of edge fields use the mesh's edge quadrature weights
//! ([`MetricMesh::edge_area`]), which on quad meshes sum to twice the face
//! area (each face hands half its area to each of its four edges). The
//! right-hand sides computed this way carry that factor of two of extra
//! slack; the checks remain valid inequalities and are evaluated exactly as
//! reported, with a caller-supplied mesh-scale tolerance multiplier.

use std::f64::consts::PI;

use crate::graph::UnionFind;
use crate::modulus::{solve_modulus, ModulusResult, ModulusValue, SolveOptions};
use crate::potential::PotentialField;
use crate::scalar::Scalar;
use crate::surface::{Arc, EdgeId, FamilySpec, MetricMesh, QuadFrame, VertexId};
use crate::{Error, Result};

/// The proved product lower-bound constant, `2000²·(4/π)²`.
pub fn kappa_proved<T: Scalar>() -> T {
    T::of(2000.0 * 2000.0) * kappa_conjectured::<T>()
}

/// The improved constant from the sharper covering argument, `216²·(4/π)²`.
pub fn kappa_improved<T: Scalar>() -> T {
    T::of(216.0 * 216.0) * kappa_conjectured::<T>()
}

/// The conjectured sharp constant, `(4/π)²`.
pub fn kappa_conjectured<T: Scalar>() -> T {
    let f = T::of(4.0 / PI);
    f * f
}

/// Constant in the coarea bound for the potential: `lhs ≤ 2000·Σ g·ρ·w`.
pub fn coarea_potential_constant<T: Scalar>() -> T {
    T::of(2000.0)
}

/// Outcome of a single coarea comparison.
#[derive(Debug, Clone)]
pub struct CoareaReport<T> {
    /// Trapezoidal estimate of `∫ Σ_{straddling e} g(e)·dual-length(e) dt`.
    pub lhs: T,
    /// `constant · base_integral`.
    pub rhs: T,
    /// The constant multiplying the area integral (`4L/π` or `2000`).
    pub constant: T,
    /// The area integral itself: `Σ_e g(e)·edge_area(e)` (times `ρ(e)` in
    /// the potential variant).
    pub base_integral: T,
    /// Levels actually integrated, after nudging off vertex values.
    pub levels: Vec<T>,
    /// Relative slack granted to the right-hand side.
    pub tolerance: T,
    /// `lhs ≤ rhs·(1 + tolerance)`.
    pub pass: bool,
    /// Smallest `c` with `lhs ≤ c·base_integral`, when the base is positive.
    pub empirical_constant: Option<T>,
}

fn validate_edge_field<T: Scalar>(mesh: &MetricMesh<T>, g: &[T]) -> Result<()> {
    if g.len() != mesh.edge_count() {
        return Err(Error::InvalidInput(format!(
            "edge field has {} entries for a mesh with {} edges",
            g.len(),
            mesh.edge_count()
        )));
    }
    for (e, &v) in g.iter().enumerate() {
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::InvalidInput(format!(
                "edge field is negative or non-finite at edge {e}"
            )));
        }
    }
    Ok(())
}

/// Uniform levels over the value range of `values` with trapezoidal weights
/// (half weight at the two ends), each level nudged upward until it differs
/// from every vertex value. Empty when the field is constant.
fn trapezoid_levels<T: Scalar>(values: &[T], levels: usize) -> Result<Vec<(T, T)>> {
    if levels < 2 {
        return Err(Error::InvalidInput(
            "level integration needs at least two levels".into(),
        ));
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidInput("non-finite vertex value".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (hi - lo) / T::of((levels - 1) as f64);
    let scale = T::one().max(lo.abs()).max(hi.abs());
    let nudge = T::of(1e-12).max(T::epsilon() * T::of(8.0)) * scale;
    let half = T::of(0.5);
    let mut grid = Vec::with_capacity(levels);
    for i in 0..levels {
        let mut t = lo + h * T::of(i as f64);
        // Collisions with vertex values are nudged upward, except at the top
        // endpoint, where nudging up would drop the whole last level line.
        let step = if i + 1 == levels { -nudge } else { nudge };
        for _ in 0..=values.len() {
            let collides = sorted
                .binary_search_by(|x| x.partial_cmp(&t).expect("finite values"))
                .is_ok();
            if !collides {
                break;
            }
            t += step;
        }
        let w = if i == 0 || i + 1 == levels { h * half } else { h };
        grid.push((t, w));
    }
    Ok(grid)
}

/// `Σ over edges straddling t (min m < t ≤ max m) of g·dual-length`.
fn straddle_mass<T: Scalar>(mesh: &MetricMesh<T>, m: &[T], g: &[T], t: T) -> T {
    let mut acc = T::zero();
    for e in 0..mesh.edge_count() {
        let ed = mesh.edge(e);
        let (a, b) = (m[ed.a], m[ed.b]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo < t && t <= hi {
            acc += g[e] * mesh.dual_edge_length(e);
        }
    }
    acc
}

fn coarea_core<T: Scalar>(
    mesh: &MetricMesh<T>,
    m: &[T],
    g: &[T],
    levels: usize,
    tolerance: T,
    constant: T,
    base_integral: T,
) -> Result<CoareaReport<T>> {
    if !(tolerance.is_finite() && tolerance >= T::zero()) {
        return Err(Error::InvalidInput("tolerance must be finite and ≥ 0".into()));
    }
    let grid = trapezoid_levels(m, levels)?;
    let mut lhs = T::zero();
    for &(t, w) in &grid {
        lhs += straddle_mass(mesh, m, g, t) * w;
    }
    let rhs = constant * base_integral;
    let empirical_constant = if base_integral > T::zero() {
        Some(lhs / base_integral)
    } else {
        None
    };
    Ok(CoareaReport {
        lhs,
        rhs,
        constant,
        base_integral,
        levels: grid.into_iter().map(|(t, _)| t).collect(),
        tolerance,
        pass: lhs <= rhs * (T::one() + tolerance),
        empirical_constant,
    })
}

/// Verifies the coarea bound for an `L`-Lipschitz vertex field `m` against
/// the weight field `g`:
/// `∫ Σ_{m-straddling e} g·dual-length dt ≤ (4L/π)·Σ g·edge_area·(1+tol)`.
///
/// The Lipschitz bound `|m(a) − m(b)| ≤ L·length(e)` is verified edge by
/// edge first and its failure is an error, not a failing report.
pub fn coarea_check<T: Scalar>(
    mesh: &MetricMesh<T>,
    m: &[T],
    lipschitz: T,
    g: &[T],
    levels: usize,
    tolerance: T,
) -> Result<CoareaReport<T>> {
    if m.len() != mesh.vertex_count() {
        return Err(Error::InvalidInput(format!(
            "vertex field has {} entries for a mesh with {} vertices",
            m.len(),
            mesh.vertex_count()
        )));
    }
    validate_edge_field(mesh, g)?;
    if !(lipschitz.is_finite() && lipschitz > T::zero()) {
        return Err(Error::InvalidInput(
            "Lipschitz bound must be finite and positive".into(),
        ));
    }
    // Float allowance: a multiplicative 16ε plus an additive 64ε·scale term,
    // so fields assembled from shortest-path distances pass even across
    // near-zero-length edges, while genuine violations exceed the bound by
    // orders of magnitude.
    let eps = T::epsilon();
    let mul = T::one() + eps * T::of(16.0);
    for e in 0..mesh.edge_count() {
        let ed = mesh.edge(e);
        let jump = (m[ed.a] - m[ed.b]).abs();
        let scale = T::one() + m[ed.a].abs().max(m[ed.b].abs());
        let bound = lipschitz * ed.length * mul + eps * T::of(64.0) * scale;
        if jump > bound {
            return Err(Error::InvalidInput(format!(
                "field is not L-Lipschitz: edge {e} jumps by {jump:?} over length {:?}",
                ed.length
            )));
        }
    }
    let mut base = T::zero();
    for e in 0..mesh.edge_count() {
        base += g[e] * mesh.edge_area(e);
    }
    let constant = T::of(4.0 / PI) * lipschitz;
    coarea_core(mesh, m, g, levels, tolerance, constant, base)
}

/// Coarea bound for the extremal potential: same level-integral estimator
/// as [`coarea_check`] applied to the potential's values, compared against
/// `2000·Σ g·ρ·edge_area` where `ρ` is the density the potential was built
/// from. The reported empirical constant (`lhs` over the base integral) is
/// the interesting output: it stays near 1 on smooth surfaces.
pub fn coarea_u_check<T: Scalar>(
    mesh: &MetricMesh<T>,
    field: &PotentialField<T>,
    g: &[T],
    levels: usize,
    tolerance: T,
) -> Result<CoareaReport<T>> {
    if field.values().len() != mesh.vertex_count() {
        return Err(Error::InvalidInput(
            "potential was built for a different mesh".into(),
        ));
    }
    validate_edge_field(mesh, g)?;
    let mut base = T::zero();
    for e in 0..mesh.edge_count() {
        base += g[e] * field.density().value(e) * mesh.edge_area(e);
    }
    let constant = coarea_potential_constant::<T>();
    coarea_core(mesh, field.values(), g, levels, tolerance, constant, base)
}

/// One sampled (center, radius) row of the oscillation bound.
#[derive(Debug, Clone)]
pub struct OscillationRow<T> {
    pub center: VertexId,
    pub radius: T,
    /// Radius exceeded the frame bound `min(diam ζ₁, diam ζ₃)/4`; the
    /// inequality was not evaluated.
    pub skipped: bool,
    /// `max u − min u` over the center's component of `B(center, r)`.
    pub osc: T,
    /// Total measure of the value intervals attained on `B(center, r)`,
    /// one interval per connected component, overlaps merged.
    pub image_mass: T,
    /// `(4/π)·Σ ρ·edge_area` over edges inside `B(center, 2r)`.
    pub rhs: T,
    /// Both `r·osc` and `r·image_mass` are ≤ `rhs·(1+tol)`.
    pub pass: bool,
}

/// Checks `r·osc(u over B(x,r)) ≤ (4/π)·Σ_{B(x,2r)} ρ·edge_area` and the
/// image-measure variant at every sampled center and radius. Radii beyond
/// a quarter of the smaller of the ζ₁/ζ₃ arc diameters yield skipped rows.
pub fn oscillation_check<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    field: &PotentialField<T>,
    centers: &[VertexId],
    radii: &[T],
    tolerance: T,
) -> Result<Vec<OscillationRow<T>>> {
    if field.values().len() != mesh.vertex_count() {
        return Err(Error::InvalidInput(
            "potential was built for a different mesh".into(),
        ));
    }
    if !(tolerance.is_finite() && tolerance >= T::zero()) {
        return Err(Error::InvalidInput("tolerance must be finite and ≥ 0".into()));
    }
    for &x in centers {
        if x >= mesh.vertex_count() {
            return Err(Error::InvalidInput(format!("center {x} out of range")));
        }
    }
    for &r in radii {
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::InvalidInput(
                "radii must be finite and positive".into(),
            ));
        }
    }
    let r0 = arc_diameter(mesh, frame, Arc::Zeta1)
        .min(arc_diameter(mesh, frame, Arc::Zeta3))
        / T::of(4.0);
    let radius_slack = T::one() + T::epsilon() * T::of(16.0);
    let four_over_pi = T::of(4.0 / PI);
    let rho = field.density();

    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    for &x in centers {
        for &r in radii {
            if r > r0 * radius_slack {
                rows.push(OscillationRow {
                    center: x,
                    radius: r,
                    skipped: true,
                    osc: T::zero(),
                    image_mass: T::zero(),
                    rhs: T::zero(),
                    pass: true,
                });
                continue;
            }
            let ball = mesh.ball(x, r);
            let mut in_ball = vec![false; mesh.vertex_count()];
            for &v in &ball {
                in_ball[v] = true;
            }
            let mut uf = UnionFind::new(mesh.vertex_count());
            for e in 0..mesh.edge_count() {
                let ed = mesh.edge(e);
                if in_ball[ed.a] && in_ball[ed.b] {
                    uf.union(ed.a, ed.b);
                }
            }
            let component: Vec<VertexId> =
                ball.iter().copied().filter(|&v| uf.same(v, x)).collect();
            let osc = field.oscillation(&component);

            // Value interval per component, overlaps merged.
            let mut intervals: Vec<(T, T)> = Vec::new();
            let mut reps: Vec<(usize, T, T)> = Vec::new();
            for &v in &ball {
                let root = uf.find(v);
                let u = field.value(v);
                match reps.iter_mut().find(|(r0, _, _)| *r0 == root) {
                    Some((_, lo, hi)) => {
                        *lo = lo.min(u);
                        *hi = hi.max(u);
                    }
                    None => reps.push((root, u, u)),
                }
            }
            for (_, lo, hi) in reps {
                intervals.push((lo, hi));
            }
            intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
            let mut image_mass = T::zero();
            let mut open: Option<(T, T)> = None;
            for (lo, hi) in intervals {
                match open {
                    Some((olo, ohi)) if lo <= ohi => open = Some((olo, ohi.max(hi))),
                    Some((olo, ohi)) => {
                        image_mass += ohi - olo;
                        open = Some((lo, hi));
                    }
                    None => open = Some((lo, hi)),
                }
            }
            if let Some((olo, ohi)) = open {
                image_mass += ohi - olo;
            }

            let b2 = mesh.ball(x, r + r);
            let mut in_b2 = vec![false; mesh.vertex_count()];
            for &v in &b2 {
                in_b2[v] = true;
            }
            let mut mass = T::zero();
            for e in 0..mesh.edge_count() {
                let ed = mesh.edge(e);
                if in_b2[ed.a] && in_b2[ed.b] {
                    mass += rho.value(e) * mesh.edge_area(e);
                }
            }
            let rhs = four_over_pi * mass;
            let bound = rhs * (T::one() + tolerance);
            rows.push(OscillationRow {
                center: x,
                radius: r,
                skipped: false,
                osc,
                image_mass,
                rhs,
                pass: r * osc <= bound && r * image_mass <= bound,
            });
        }
    }
    Ok(rows)
}

/// Metric diameter of a frame arc: the largest pairwise length-distance
/// between its vertices (shortcuts through the interior count).
fn arc_diameter<T: Scalar>(mesh: &MetricMesh<T>, frame: &QuadFrame, arc: Arc) -> T {
    let vs = frame.arc(arc);
    let mut diam = T::zero();
    for &a in vs {
        let dist = mesh.length_distances(&[a]);
        for &b in vs {
            if let Some(d) = dist[b] {
                diam = diam.max(d);
            }
        }
    }
    diam
}

/// Modulus of the family joining `ball(center, inner)` to the complement of
/// `ball(center, outer)`, within the outer ball. The complement is entered
/// through its first vertex layer; that layer must be nonempty.
pub fn ring_modulus<T: Scalar>(
    mesh: &MetricMesh<T>,
    center: VertexId,
    inner: T,
    outer: T,
    opts: &SolveOptions<T>,
) -> Result<ModulusResult<T>> {
    if center >= mesh.vertex_count() {
        return Err(Error::InvalidInput(format!("center {center} out of range")));
    }
    if !(inner > T::zero() && inner < outer && outer.is_finite()) {
        return Err(Error::InvalidInput(
            "ring radii must satisfy 0 < inner < outer < ∞".into(),
        ));
    }
    let sources = mesh.ball(center, inner);
    let b_outer = mesh.ball(center, outer);
    let mut in_outer = vec![false; mesh.vertex_count()];
    for &v in &b_outer {
        in_outer[v] = true;
    }
    let exit: Vec<VertexId> = (0..mesh.vertex_count())
        .filter(|&v| !in_outer[v] && mesh.neighbors(v).iter().any(|&(_, u)| in_outer[u]))
        .collect();
    if exit.is_empty() {
        return Err(Error::InvalidInput(
            "outer ball covers the whole mesh; nothing to connect to".into(),
        ));
    }
    let mut ambient = b_outer;
    ambient.extend_from_slice(&exit);
    let spec = FamilySpec::connecting(sources, exit, Some(ambient));
    solve_modulus(mesh, &spec, None, opts)
}

/// Pass/fail with an explicit "cannot be decided from these values" state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Pass,
    Fail,
    Indeterminate,
}

/// Product of two moduli with explicit infinity bookkeeping: `∞·0` is
/// indeterminate, never a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductValue<T> {
    Finite(T),
    Infinite,
    Indeterminate,
}

impl<T: Scalar> ProductValue<T> {
    pub fn finite(&self) -> Option<T> {
        match self {
            ProductValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl<T: Scalar> std::fmt::Display for ProductValue<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProductValue::Finite(v) => write!(f, "{v:?}"),
            ProductValue::Infinite => write!(f, "inf"),
            ProductValue::Indeterminate => write!(f, "indeterminate"),
        }
    }
}

pub(crate) fn product_of<T: Scalar>(
    a: &ModulusValue<T>,
    b: &ModulusValue<T>,
) -> ProductValue<T> {
    match (a.finite(), b.finite()) {
        (Some(x), Some(y)) => ProductValue::Finite(x * y),
        (Some(x), None) | (None, Some(x)) => {
            if x == T::zero() {
                ProductValue::Indeterminate
            } else {
                ProductValue::Infinite
            }
        }
        (None, None) => ProductValue::Infinite,
    }
}

fn upper_flag<T: Scalar>(product: &ProductValue<T>, kappa: T) -> Flag {
    match product {
        ProductValue::Finite(p) => {
            if *p <= kappa {
                Flag::Pass
            } else {
                Flag::Fail
            }
        }
        ProductValue::Infinite => Flag::Fail,
        ProductValue::Indeterminate => Flag::Indeterminate,
    }
}

fn lower_flag<T: Scalar>(product: &ProductValue<T>, kappa: T) -> Flag {
    match product {
        ProductValue::Finite(p) => {
            if *p >= kappa.recip() {
                Flag::Pass
            } else {
                Flag::Fail
            }
        }
        ProductValue::Infinite => Flag::Pass,
        ProductValue::Indeterminate => Flag::Indeterminate,
    }
}

/// Verdict of the upper (`product ≤ κ`) and lower (`product ≥ 1/κ`)
/// product conditions against one κ.
#[derive(Debug, Clone, Copy)]
pub struct KappaVerdict<T> {
    pub kappa: T,
    pub upper: Flag,
    pub lower: Flag,
}

/// The two-step chain behind the product lower bound, recorded for
/// inspection: `1 ≤ (8000/π)·Σ g·ρ·edge_area` (with `g` the conjugate
/// extremal density) followed by Cauchy–Schwarz,
/// `Σ g·ρ·edge_area ≤ √(Mod Γ₁·Mod Γ₂)`.
///
/// On axis-aligned grids the two extremal densities have disjoint edge
/// supports, so the cross term is 0 and the first step fails discretely;
/// the chain is recorded, not asserted.
#[derive(Debug, Clone, Copy)]
pub struct ProductBoundChain<T> {
    pub cross_term: T,
    pub factor: T,
    pub step1_ok: bool,
    pub step2_ok: bool,
}

/// Full reciprocal-bound report for one quadrilateral.
#[derive(Debug, Clone)]
pub struct ReciprocalityReport<T> {
    pub mod_gamma1: ModulusValue<T>,
    pub mod_gamma2: ModulusValue<T>,
    pub product: ProductValue<T>,
    /// Upper/lower verdicts against κ proved, improved, conjectured.
    pub verdicts: [KappaVerdict<T>; 3],
    /// Shrinking-ring verdict: pass when a fourfold shrink of the inner
    /// radius at least halves the ring modulus (see [`RingProbe::flag`]).
    pub ring: Flag,
    /// (inner radius, ring modulus) pairs probed for the ring flag.
    pub ring_values: Vec<(T, T)>,
    /// Recorded product-bound chain; absent when either modulus is infinite.
    pub chain: Option<ProductBoundChain<T>>,
    /// Every solve that fed this report carries a passing certificate.
    pub certified: bool,
}

/// Knobs for [`reciprocality_report`].
#[derive(Debug, Clone)]
pub struct ReportOptions<T> {
    pub solve: SolveOptions<T>,
    /// Center for the ring probe; the deepest interior vertex (maximum
    /// distance to the frame boundary, smallest id on ties) when absent.
    pub ring_center: Option<VertexId>,
    /// Outer radius for the ring probe; `min(diam ζ₁, diam ζ₃)/4` when
    /// absent. Inner radii are its halvings down to a sixteenth.
    pub ring_outer: Option<T>,
    /// Skip the ring probe; its flag comes out indeterminate.
    pub skip_ring: bool,
}

impl<T: Scalar> Default for ReportOptions<T> {
    fn default() -> Self {
        ReportOptions {
            solve: SolveOptions::default(),
            ring_center: None,
            ring_outer: None,
            skip_ring: false,
        }
    }
}

/// Solves both conjugate families, forms the product with explicit
/// ∞/indeterminate handling, evaluates the condition flags against the
/// three stored κ values, probes the shrinking-ring condition, and records
/// the product-bound chain.
pub fn reciprocality_report<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    opts: &ReportOptions<T>,
) -> Result<ReciprocalityReport<T>> {
    let g1 = solve_modulus(mesh, &FamilySpec::gamma1(), Some(frame), &opts.solve)?;
    let g2 = solve_modulus(mesh, &FamilySpec::gamma2(), Some(frame), &opts.solve)?;
    let probe = if opts.skip_ring {
        None
    } else {
        Some(ring_probe(
            mesh,
            frame,
            &opts.solve,
            opts.ring_center,
            opts.ring_outer,
        )?)
    };
    Ok(reciprocality_from(mesh, &g1, &g2, probe.as_ref()))
}

/// Assembles a [`ReciprocalityReport`] from already-solved conjugate
/// moduli and an optional ring probe, without solving anything itself.
pub fn reciprocality_from<T: Scalar>(
    mesh: &MetricMesh<T>,
    g1: &ModulusResult<T>,
    g2: &ModulusResult<T>,
    probe: Option<&RingProbe<T>>,
) -> ReciprocalityReport<T> {
    let product = product_of(&g1.value, &g2.value);
    let kappas = [
        kappa_proved::<T>(),
        kappa_improved::<T>(),
        kappa_conjectured::<T>(),
    ];
    let verdicts = kappas.map(|kappa| KappaVerdict {
        kappa,
        upper: upper_flag(&product, kappa),
        lower: lower_flag(&product, kappa),
    });
    let mut certified = g1.certified && g2.certified;

    let chain = match (g1.value.finite(), g2.value.finite()) {
        (Some(m1), Some(m2)) => {
            let mut cross = T::zero();
            for e in 0..mesh.edge_count() {
                cross += g2.density.value(e) * g1.density.value(e) * mesh.edge_area(e);
            }
            let factor = T::of(8000.0 / PI);
            let slack = T::one() + T::of(1e-10);
            Some(ProductBoundChain {
                cross_term: cross,
                factor,
                step1_ok: T::one() <= factor * cross,
                step2_ok: cross * cross <= m1 * m2 * slack,
            })
        }
        _ => None,
    };

    let (ring, ring_values) = match probe {
        None => (Flag::Indeterminate, Vec::new()),
        Some(p) => {
            certified = certified && p.certified;
            (p.flag, p.values.clone())
        }
    };

    ReciprocalityReport {
        mod_gamma1: g1.value,
        mod_gamma2: g2.value,
        product,
        verdicts,
        ring,
        ring_values,
        chain,
        certified,
    }
}

/// Shrinking-ring probe at one center: ring moduli at inner radii
/// `outer/2`, `/4`, `/8`, `/16`, and the decay flag comparing radii a
/// factor of four apart.
#[derive(Debug, Clone)]
pub struct RingProbe<T> {
    pub center: VertexId,
    pub outer: T,
    /// (inner radius, ring modulus) pairs, largest radius first; infinite
    /// moduli are recorded as `T::infinity()`.
    pub values: Vec<(T, T)>,
    /// Pass when shrinking the inner radius fourfold (from `outer/4` to
    /// `outer/16`) at least halves the ring modulus; indeterminate when any
    /// probed value is infinite. The factor-four baseline sidesteps the
    /// thin-annulus inflation at `outer/2`, which would let a genuinely
    /// non-vanishing limit masquerade as decay.
    pub flag: Flag,
    pub certified: bool,
}

/// Probes the ring modulus at four shrinking inner radii around `center`
/// (the deepest interior vertex when absent) with outer radius `outer`
/// (`min(diam ζ₁, diam ζ₃)/4` when absent).
pub fn ring_probe<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    solve: &SolveOptions<T>,
    center: Option<VertexId>,
    outer: Option<T>,
) -> Result<RingProbe<T>> {
    let center = match center {
        Some(v) => {
            if v >= mesh.vertex_count() {
                return Err(Error::InvalidInput(format!("ring center {v} out of range")));
            }
            v
        }
        None => deepest_vertex(mesh, frame)?,
    };
    let outer = match outer {
        Some(r) => {
            if !(r.is_finite() && r > T::zero()) {
                return Err(Error::InvalidInput(
                    "ring outer radius must be finite and positive".into(),
                ));
            }
            r
        }
        None => {
            arc_diameter(mesh, frame, Arc::Zeta1)
                .min(arc_diameter(mesh, frame, Arc::Zeta3))
                / T::of(4.0)
        }
    };
    let mut values = Vec::with_capacity(4);
    let mut certified = true;
    let mut all_finite = true;
    for k in 1..=4u32 {
        let r = outer / T::of((1u32 << k) as f64);
        let res = ring_modulus(mesh, center, r, outer, solve)?;
        certified = certified && res.certified;
        match res.value.finite() {
            Some(v) => values.push((r, v)),
            None => {
                all_finite = false;
                values.push((r, T::infinity()));
            }
        }
    }
    let flag = if all_finite {
        let fourfold_value = values[1].1;
        let smallest_r_value = values[values.len() - 1].1;
        if smallest_r_value <= fourfold_value * T::of(0.5) {
            Flag::Pass
        } else {
            Flag::Fail
        }
    } else {
        Flag::Indeterminate
    };
    Ok(RingProbe {
        center,
        outer,
        values,
        flag,
        certified,
    })
}

/// The vertex farthest from the frame boundary (smallest id on ties).
pub fn deepest_vertex<T: Scalar>(mesh: &MetricMesh<T>, frame: &QuadFrame) -> Result<VertexId> {
    let mut boundary: Vec<VertexId> = Vec::new();
    for arc in [Arc::Zeta1, Arc::Zeta2, Arc::Zeta3, Arc::Zeta4] {
        boundary.extend_from_slice(frame.arc(arc));
    }
    let dist = mesh.length_distances(&boundary);
    let mut best: Option<(T, VertexId)> = None;
    for (v, d) in dist.iter().enumerate() {
        if let Some(d) = d {
            let replace = match &best {
                None => true,
                Some((bd, _)) => *d > *bd,
            };
            if replace {
                best = Some((*d, v));
            }
        }
    }
    best.map(|(_, v)| v)
        .ok_or_else(|| Error::InvalidInput("no vertex reachable from the frame".into()))
}

/// `Σ g·edge_area` for ad-hoc right-hand sides.
pub fn area_integral<T: Scalar>(mesh: &MetricMesh<T>, g: &dyn Fn(EdgeId) -> T) -> T {
    let mut acc = T::zero();
    for e in 0..mesh.edge_count() {
        acc += g(e) * mesh.edge_area(e);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::Density;
    use crate::potential::build_potential;
    use crate::surface::build_rectangle;

    fn square(n: usize) -> (MetricMesh<f64>, QuadFrame) {
        build_rectangle(1.0_f64, 1.0, n).unwrap()
    }

    fn y_field(mesh: &MetricMesh<f64>) -> Vec<f64> {
        (0..mesh.vertex_count()).map(|v| mesh.position(v)[1]).collect()
    }

    #[test]
    fn kappa_constants_are_consistent() {
        let kc: f64 = kappa_conjectured();
        assert!((kc - (4.0 / PI) * (4.0 / PI)).abs() < 1e-15);
        assert_eq!(kappa_proved::<f64>(), 4.0e6 * kc);
        assert_eq!(kappa_improved::<f64>(), 216.0 * 216.0 * kc);
        assert!(kappa_proved::<f64>() > kappa_improved());
        assert!(kappa_improved::<f64>() > kappa_conjectured());
        assert!(kappa_conjectured::<f64>() > 1.0);
    }

    #[test]
    fn coarea_linear_field_on_square() {
        let (mesh, _) = square(16);
        let m = y_field(&mesh);
        let g = vec![1.0; mesh.edge_count()];
        let rep = coarea_check(&mesh, &m, 1.0, &g, 64, 0.05).unwrap();
        // Every level line carries dual mass exactly 1, so the trapezoid
        // integral over [0, 1] is 1; the base integral is twice the area.
        assert!((rep.lhs - 1.0).abs() < 1e-9, "lhs = {}", rep.lhs);
        assert!((rep.base_integral - 2.0).abs() < 1e-12);
        assert!((rep.rhs - 8.0 / PI).abs() < 1e-12);
        assert!(rep.pass);
        assert_eq!(rep.levels.len(), 64);
        let c = rep.empirical_constant.unwrap();
        assert!((c - 0.5).abs() < 1e-9);
    }

    #[test]
    fn coarea_diagonal_field_stays_within_bound() {
        // m = x + y is 1-Lipschitz edge-wise but its staircase level sets
        // carry the worst-case mass Σ|Δm|·dual/ℓ = Σ edge_area exactly.
        let (mesh, _) = square(16);
        let m: Vec<f64> = (0..mesh.vertex_count())
            .map(|v| mesh.position(v)[0] + mesh.position(v)[1])
            .collect();
        let g = vec![1.0; mesh.edge_count()];
        let rep = coarea_check(&mesh, &m, 1.0, &g, 64, 0.05).unwrap();
        assert!((rep.lhs - 2.0).abs() < 0.1, "lhs = {}", rep.lhs);
        assert!(rep.pass);
        assert!(rep.lhs <= rep.rhs);
    }

    #[test]
    fn coarea_constant_field_trivially_passes() {
        let (mesh, _) = square(4);
        let m = vec![0.0; mesh.vertex_count()];
        let g = vec![1.0; mesh.edge_count()];
        let rep = coarea_check(&mesh, &m, 1.0, &g, 64, 0.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
        assert!(rep.levels.is_empty());
    }

    #[test]
    fn coarea_rejects_super_lipschitz_field() {
        let (mesh, _) = square(4);
        let m: Vec<f64> = (0..mesh.vertex_count())
            .map(|v| 2.0 * mesh.position(v)[1])
            .collect();
        let g = vec![1.0; mesh.edge_count()];
        let err = coarea_check(&mesh, &m, 1.0, &g, 64, 0.05).unwrap_err();
        assert!(err.to_string().contains("Lipschitz"));
    }

    #[test]
    fn coarea_u_square_empirical_constant_near_one() {
        let (mesh, frame) = square(16);
        let opts = SolveOptions::default();
        let res = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &opts).unwrap();
        let field = build_potential(&mesh, &frame, &res.density).unwrap();
        let g = vec![1.0; mesh.edge_count()];
        let rep = coarea_u_check(&mesh, &field, &g, 64, 0.05).unwrap();
        assert!((rep.lhs - 1.0).abs() < 0.02, "lhs = {}", rep.lhs);
        assert!((rep.rhs - 2000.0).abs() < 2.0, "rhs = {}", rep.rhs);
        assert!(rep.pass);
        let c = rep.empirical_constant.unwrap();
        assert!((c - 1.0).abs() < 0.02, "empirical constant = {c}");

        // Restricting g to the right half halves the level-line mass.
        let half: Vec<f64> = (0..mesh.edge_count())
            .map(|e| if mesh.edge_midpoint(e)[0] >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let rep = coarea_u_check(&mesh, &field, &half, 64, 0.05).unwrap();
        assert!((rep.lhs - 0.5).abs() < 0.06, "lhs = {}", rep.lhs);
        assert!(rep.pass);
    }

    #[test]
    fn oscillation_centroid_and_skipped_radius() {
        let (mesh, frame) = square(16);
        let opts = SolveOptions::default();
        let res = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &opts).unwrap();
        let field = build_potential(&mesh, &frame, &res.density).unwrap();
        let center = (0..mesh.vertex_count())
            .find(|&v| mesh.position(v) == [0.5, 0.5])
            .unwrap();
        let rows =
            oscillation_check(&mesh, &frame, &field, &[center], &[0.25, 0.3], 0.05).unwrap();
        assert_eq!(rows.len(), 2);
        let hit = &rows[0];
        assert!(!hit.skipped);
        // u = y on the diamond ball of radius 1/4 spans [1/4, 3/4].
        assert!((hit.osc - 0.5).abs() < 1e-9, "osc = {}", hit.osc);
        assert!((hit.image_mass - 0.5).abs() < 1e-9);
        assert!(hit.rhs > hit.radius * hit.osc);
        assert!(hit.rhs < 0.9);
        assert!(hit.pass);
        let skipped = &rows[1];
        assert!(skipped.skipped && skipped.pass);
    }

    #[test]
    fn ring_modulus_is_monotone() {
        let (mesh, _) = square(32);
        let center = (0..mesh.vertex_count())
            .find(|&v| mesh.position(v) == [0.5, 0.5])
            .unwrap();
        let opts = SolveOptions::default();
        let wide = ring_modulus(&mesh, center, 0.05, 0.2, &opts).unwrap();
        let tight = ring_modulus(&mesh, center, 0.19, 0.2, &opts).unwrap();
        let far = ring_modulus(&mesh, center, 0.05, 0.3, &opts).unwrap();
        let (w, t, f) = (
            wide.value.finite().unwrap(),
            tight.value.finite().unwrap(),
            far.value.finite().unwrap(),
        );
        assert!(t > w, "shrinking the annulus must raise the modulus");
        assert!(f <= w * (1.0 + 1e-9), "growing the annulus must not raise it");
        assert!(wide.certified && tight.certified && far.certified);

        assert!(ring_modulus(&mesh, center, 0.2, 0.2, &opts).is_err());
        assert!(ring_modulus(&mesh, center, 0.1, 10.0, &opts).is_err());
    }

    #[test]
    fn product_arithmetic_handles_zero_and_infinity() {
        let fin = |v: f64| ModulusValue::Finite(v);
        let inf: ModulusValue<f64> = ModulusValue::Infinite;
        assert_eq!(product_of(&fin(2.0), &fin(3.0)), ProductValue::Finite(6.0));
        assert_eq!(product_of(&fin(0.0), &inf), ProductValue::Indeterminate);
        assert_eq!(product_of(&inf, &fin(0.0)), ProductValue::Indeterminate);
        assert_eq!(product_of(&inf, &fin(2.0)), ProductValue::Infinite);
        assert_eq!(product_of(&inf, &inf), ProductValue::Infinite);

        let k = 2.0;
        assert_eq!(upper_flag(&ProductValue::Finite(1.0), k), Flag::Pass);
        assert_eq!(upper_flag(&ProductValue::Finite(3.0), k), Flag::Fail);
        assert_eq!(upper_flag(&ProductValue::<f64>::Infinite, k), Flag::Fail);
        assert_eq!(
            upper_flag(&ProductValue::<f64>::Indeterminate, k),
            Flag::Indeterminate
        );
        assert_eq!(lower_flag(&ProductValue::Finite(1.0), k), Flag::Pass);
        assert_eq!(lower_flag(&ProductValue::Finite(0.1), k), Flag::Fail);
        assert_eq!(lower_flag(&ProductValue::<f64>::Infinite, k), Flag::Pass);
    }

    #[test]
    fn reciprocality_on_square_passes_everything() {
        let (mesh, frame) = square(16);
        let opts = ReportOptions {
            skip_ring: true,
            ..ReportOptions::default()
        };
        let rep = reciprocality_report(&mesh, &frame, &opts).unwrap();
        let p = rep.product.finite().unwrap();
        assert!((p - 1.0).abs() < 1e-6, "product = {p}");
        for v in &rep.verdicts {
            assert_eq!(v.upper, Flag::Pass);
            assert_eq!(v.lower, Flag::Pass);
        }
        assert_eq!(rep.ring, Flag::Indeterminate);
        assert!(rep.certified);
        // On the axis-aligned grid the extremal densities have disjoint
        // supports: the chain's first step fails, Cauchy–Schwarz holds.
        let chain = rep.chain.unwrap();
        assert_eq!(chain.cross_term, 0.0);
        assert!(!chain.step1_ok);
        assert!(chain.step2_ok);
    }

    #[test]
    fn area_integral_of_ones_is_twice_the_area() {
        let (mesh, _) = square(8);
        let total = area_integral(&mesh, &|_| 1.0);
        assert!((total - 2.0).abs() < 1e-12);
    }
}
