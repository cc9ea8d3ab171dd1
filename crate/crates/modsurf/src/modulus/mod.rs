//! The 2-modulus solver: constraint generation with a shortest-path
//! separation oracle and a nonnegative-multiplier dual solver.
//!
//! The modulus of a curve family is the minimum of `Σ_e ρ(e)²·edge_area(e)`
//! over densities satisfying `Σ_{e∈γ} ρ(e)·length(e) ≥ 1` for every family
//! curve γ. The solver keeps a working set of curve constraints; a Dijkstra
//! oracle prices every sink with one shortest-path tree and contributes the
//! violated curves as a batch. The restricted dual — a nonnegative
//! least-squares system in the multipliers — is re-solved by projected
//! coordinate-ascent sweeps, escalating to a block-pivoting nonnegative
//! least-squares polish (matrix-free conjugate gradients on the passive set)
//! when the sweeps stall on tied curves. The stationarity identity
//! `ρ(e) = length(e)·Σ_{γ∋e} λ_γ / (2·edge_area(e))` maps multipliers back
//! to a density. Constraints whose multipliers reach zero are dropped, and
//! two curves differing only across zero-length edges are one constraint.
//!
//! The first round seeds the working set from the harmonic warm start (see
//! [`guide`]): the flow decomposition of the Dirichlet potential supplies
//! near-optimal curves and multipliers, so well-posed problems certify in a
//! couple of oracle calls. The seed enjoys no trust — the oracle audits the
//! resulting density like any other iterate.
//!
//! Degenerate meshes are handled by contract: edges with zero quadrature
//! area get a pinned cap density (their energy cost is zero, so curve
//! constraints through a positive-length one are vacuous), a family whose
//! endpoints are disconnected has modulus 0, and a zero-length source–sink
//! connection makes the modulus `+∞`, reported as a tagged value — never a
//! floating-point infinity inside arithmetic.

mod guide;
mod oracle;

pub use oracle::{shortest_violating_path, OraclePath};

use crate::graph::{best_target, dijkstra};
use crate::scalar::Scalar;
use crate::surface::{EdgeId, FamilySpec, MetricMesh, QuadFrame, ResolvedFamily};
use crate::{Error, Result};

/// Per-edge density (nonnegative, finite).
#[derive(Debug, Clone, PartialEq)]
pub struct Density<T> {
    values: Vec<T>,
}

impl<T: Scalar> Density<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= T::zero())) {
            return Err(Error::InvalidInput(
                "density values must be finite and nonnegative".into(),
            ));
        }
        Ok(Density { values })
    }

    pub fn zeros(edge_count: usize) -> Self {
        Density {
            values: vec![T::zero(); edge_count],
        }
    }

    pub fn constant(edge_count: usize, c: T) -> Self {
        Density {
            values: vec![c; edge_count],
        }
    }

    pub fn value(&self, e: EdgeId) -> T {
        self.values[e]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn set(&mut self, e: EdgeId, v: T) {
        self.values[e] = v;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ρ-length of an edge sequence, accumulated in path order (the same
    /// float operation order the oracle uses).
    pub fn path_length(&self, mesh: &MetricMesh<T>, edges: &[EdgeId]) -> T {
        let mut acc = T::zero();
        for &e in edges {
            acc = acc + self.values[e] * mesh.edge(e).length;
        }
        acc
    }

    /// Quadrature energy `Σ_e ρ(e)²·edge_area(e)`.
    pub fn energy(&self, mesh: &MetricMesh<T>) -> T {
        let mut acc = T::zero();
        for e in 0..self.values.len() {
            let w = mesh.edge_area(e);
            if w > T::zero() {
                acc = acc + self.values[e] * self.values[e] * w;
            }
        }
        acc
    }
}

/// Modulus value: finite, or the tagged degenerate `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> ModulusValue<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, ModulusValue::Finite(_))
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            ModulusValue::Finite(v) => Some(*v),
            ModulusValue::Infinite => None,
        }
    }
}

impl<T: Scalar> std::fmt::Display for ModulusValue<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModulusValue::Finite(v) => write!(f, "{v}"),
            ModulusValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Stopping tolerances and the iteration budget.
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Admissibility slack: stop once the ρ-shortest curve has length at
    /// least `1 − eps` (the reported density is rescaled to be admissible).
    pub eps_admissibility: T,
    /// Required relative primal/dual gap of the certificate.
    pub eps_gap: T,
    /// Cap on separation-oracle calls; `None` means `50·edge_count`.
    pub max_iterations: Option<usize>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            eps_admissibility: T::of(1e-6),
            eps_gap: T::of(1e-6),
            max_iterations: None,
        }
    }
}

/// Solver output: the extremal density with its certificate data.
#[derive(Debug, Clone)]
pub struct ModulusResult<T> {
    pub value: ModulusValue<T>,
    pub density: Density<T>,
    /// Curve constraints active at the optimum (edge sequences in curve
    /// order). For an infinite modulus this holds the zero-length witness.
    pub active_paths: Vec<Vec<EdgeId>>,
    /// Lagrange multipliers aligned with `active_paths`.
    pub multipliers: Vec<T>,
    pub primal_value: T,
    pub dual_value: T,
    /// Number of separation-oracle calls.
    pub iterations: usize,
    /// False when the iteration budget ran out before the tolerances held.
    pub certified: bool,
}

impl<T: Scalar> ModulusResult<T> {
    fn zero(edge_count: usize) -> Self {
        ModulusResult {
            value: ModulusValue::Finite(T::zero()),
            density: Density::zeros(edge_count),
            active_paths: Vec::new(),
            multipliers: Vec::new(),
            primal_value: T::zero(),
            dual_value: T::zero(),
            iterations: 0,
            certified: true,
        }
    }
}

/// One active curve constraint of the restricted dual.
struct ActivePath<T> {
    edges: Vec<EdgeId>,
    key: Vec<EdgeId>,
    lambda: T,
    /// Rounds spent at multiplier zero; constraints are dropped once this
    /// passes the grace period (immediate eviction thrashes: a curve that
    /// just went slack is usually tight again a few rounds later).
    idle: u32,
    /// Edges with positive length and quadrature weight: the support of this
    /// constraint's row in the dual quadratic form.
    free: Vec<EdgeId>,
    /// Constant ρ-length picked up from pinned (zero-area) edges.
    base: T,
    /// Dual diagonal `Σ length(e)²/edge_area(e)` over the free edges.
    diag: T,
}

fn make_active<T: Scalar>(
    mesh: &MetricMesh<T>,
    rho: &Density<T>,
    edges: Vec<EdgeId>,
    key: Vec<EdgeId>,
) -> ActivePath<T> {
    let mut free = Vec::new();
    let mut base = T::zero();
    let mut diag = T::zero();
    for &e in &edges {
        let l = mesh.edge(e).length;
        let w = mesh.edge_area(e);
        if w > T::zero() {
            if l > T::zero() {
                free.push(e);
                diag = diag + l * l / w;
            }
        } else {
            // Pinned cap density never changes, so this term is constant.
            base = base + rho.value(e) * l;
        }
    }
    ActivePath {
        edges,
        key,
        lambda: T::zero(),
        idle: 0,
        free,
        base,
        diag,
    }
}

/// Computes the modulus of the family on the mesh. The frame is required
/// when the family's endpoints are given as frame arcs.
pub fn solve_modulus<T: Scalar>(
    mesh: &MetricMesh<T>,
    family: &FamilySpec,
    frame: Option<&QuadFrame>,
    opts: &SolveOptions<T>,
) -> Result<ModulusResult<T>> {
    if !(opts.eps_admissibility > T::zero() && opts.eps_gap > T::zero()) {
        return Err(Error::InvalidInput(
            "solver tolerances must be positive".into(),
        ));
    }
    let rf = family.resolve(mesh, frame)?;
    let ne = mesh.edge_count();
    if rf.sources.is_empty() || rf.sinks.is_empty() {
        return Ok(ModulusResult::zero(ne));
    }

    // Degenerate connections first: unreachable sinks mean an empty family
    // (modulus 0); a zero-length connection means no admissible density
    // exists (modulus +∞).
    let sp = dijkstra(mesh, &rf.sources, &|e| mesh.edge(e).length, rf.allowed.as_deref());
    let reachable = best_target(&sp, &rf.sinks);
    let nearest = match reachable {
        None => return Ok(ModulusResult::zero(ne)),
        Some(t) => t,
    };
    if sp.dist[nearest] == Some(T::zero()) {
        let witness = sp.path_edges(nearest);
        return Ok(ModulusResult {
            value: ModulusValue::Infinite,
            density: pinned_density(mesh),
            active_paths: vec![witness],
            multipliers: vec![T::zero()],
            primal_value: T::infinity(),
            dual_value: T::infinity(),
            iterations: 0,
            certified: true,
        });
    }

    let max_iter = opts.max_iterations.unwrap_or(50 * ne.max(1));
    let eps_int = (opts.eps_admissibility.min(opts.eps_gap)) * T::of(0.25);
    let inner_tol = (eps_int * T::of(0.125)).max(T::epsilon() * T::of(64.0));
    let threshold = T::one() - eps_int;

    // Per-edge coefficients of the dual quadratic form, computed once.
    let mut len2_over_w = vec![T::zero(); ne];
    let mut l_over_2w = vec![T::zero(); ne];
    for e in 0..ne {
        let w = mesh.edge_area(e);
        if w > T::zero() {
            let l = mesh.edge(e).length;
            len2_over_w[e] = l * l / w;
            l_over_2w[e] = l / (w + w);
        }
    }

    let mut rho = pinned_density(mesh);
    let mut load = vec![T::zero(); ne]; // Σ λ over active curves through e
    let mut scratch = vec![T::zero(); ne];
    let mut active: Vec<ActivePath<T>> = Vec::new();
    let mut active_keys: std::collections::BTreeSet<Vec<EdgeId>> =
        std::collections::BTreeSet::new();

    let mut iterations = 0usize;
    let mut certified = false;
    let mut last_len = T::zero();
    let mut cg_budget = 256usize;
    let mut stall = 0usize;
    let batch_cap = (4 * rf.sinks.len()).clamp(256, 4096);

    // Harmonic warm start: the flow decomposition of the Dirichlet
    // potential supplies curves (all violated at ρ ≡ 0) together with the
    // multipliers that make them tight. They join the working set on the
    // first round and seed the restricted dual, which the oracle then
    // audits like any other iterate.
    let mut seed = Some(guide::harmonic_guide(mesh, &rf));

    while iterations < max_iter {
        iterations += 1;
        // Enumerate a band symmetric about 1: curves already violated plus
        // the near-ties just above 1 that the next re-solve will make tight.
        let enum_bound = (T::of(2.0) - last_len)
            .max(T::one() + T::of(1e-3))
            .min(T::of(1.25));
        let (best_len, batch) =
            oracle::oracle_batch(mesh, &rf, &rho, threshold, enum_bound, batch_cap)
                .expect("family verified nonempty");
        last_len = best_len;
        if best_len >= threshold {
            certified = true;
            break;
        }

        let mut added_violated = false;
        if let Some(paths) = seed.take() {
            let mut agg: std::collections::BTreeMap<Vec<EdgeId>, (Vec<EdgeId>, T)> =
                std::collections::BTreeMap::new();
            for g in paths {
                let key = oracle::canonical_key(mesh, &g.edges);
                let slot = agg.entry(key).or_insert_with(|| (g.edges, T::zero()));
                slot.1 = slot.1 + g.flux;
            }
            for (key, (edges, flux)) in agg {
                if active_keys.contains(&key) {
                    continue;
                }
                active_keys.insert(key.clone());
                let mut ap = make_active(mesh, &rho, edges, key);
                ap.lambda = flux + flux;
                active.push(ap);
                added_violated = true;
            }
            if added_violated {
                rebuild_from_multipliers(mesh, &l_over_2w, &mut active, &mut load, &mut rho);
            }
        }
        for found in batch {
            let violated = found.rho_length < threshold;
            let key = oracle::canonical_key(mesh, &found.edges);
            if active_keys.contains(&key) {
                continue;
            }
            active_keys.insert(key.clone());
            active.push(make_active(mesh, &rho, found.edges, key));
            added_violated |= violated;
        }
        if added_violated {
            stall = 0;
        } else {
            // Every violated curve is already a working constraint: the
            // restricted dual was not solved tightly enough to certify it.
            // Re-solve harder; give up (uncertified) if that stops helping.
            stall += 1;
            cg_budget = (cg_budget * 2).min(65_536);
            if stall > 64 {
                break;
            }
        }

        // A few exact coordinate-ascent sweeps settle easy working sets; a
        // block-pivoting nonnegative least-squares polish finishes the
        // ill-conditioned ones where cyclic ascent zig-zags.
        let worst = ascend(mesh, &l_over_2w, &mut active, &mut load, &mut rho, inner_tol, 8);
        if worst > inner_tol {
            nnls_polish(
                mesh,
                &len2_over_w,
                &l_over_2w,
                &mut active,
                &mut load,
                &mut rho,
                &mut scratch,
                inner_tol,
                cg_budget,
            );
        }

        // Drop constraints whose multipliers reached zero — after a short
        // grace period, since the working set oscillates before it settles.
        let grace: u32 = 3;
        let mut evict = false;
        for p in active.iter_mut() {
            if p.lambda > T::zero() {
                p.idle = 0;
            } else {
                p.idle += 1;
                evict |= p.idle > grace;
            }
        }
        if evict {
            let mut kept = Vec::with_capacity(active.len());
            active_keys.clear();
            for p in active.drain(..) {
                if p.lambda > T::zero() || p.idle <= grace {
                    active_keys.insert(p.key.clone());
                    kept.push(p);
                }
            }
            active = kept;
        }
    }

    // Rescale to an exactly admissible density: divide by the certified
    // minimum curve length, with a small safety factor so every curve
    // (including float re-accumulation in later passes) measures ≥ 1.
    let margin = T::accumulation_margin();
    let scale = if last_len > T::zero() {
        (T::one() + margin) / last_len
    } else {
        T::one()
    };
    for e in 0..ne {
        if mesh.edge_area(e) > T::zero() {
            let v = rho.value(e) * scale;
            rho.set(e, v);
        }
    }
    let primal = rho.energy(mesh);
    // Dual value of the scaled multipliers λ·s: Σλ·s − E·s² where E is the
    // unscaled energy (= ¼·λᵀMλ at an ascent fixpoint).
    let lambda_sum: T = active.iter().map(|p| p.lambda).sum();
    let unscaled_energy = primal / (scale * scale);
    let dual = lambda_sum * scale - unscaled_energy * scale * scale;

    // Only the support of the dual is reported; idle working-set rows that
    // were awaiting eviction carry no information.
    let support: Vec<&ActivePath<T>> = active.iter().filter(|p| p.lambda > T::zero()).collect();
    let active_paths: Vec<Vec<EdgeId>> = support.iter().map(|p| p.edges.clone()).collect();
    let multipliers: Vec<T> = support.iter().map(|p| p.lambda * scale).collect();

    Ok(ModulusResult {
        value: ModulusValue::Finite(primal),
        density: rho,
        active_paths,
        multipliers,
        primal_value: primal,
        dual_value: dual,
        iterations,
        certified,
    })
}

/// Density with the cap value pinned on zero-area edges and zero elsewhere.
/// The cap makes curve constraints through positive-length zero-area edges
/// vacuous at zero energy cost.
fn pinned_density<T: Scalar>(mesh: &MetricMesh<T>) -> Density<T> {
    let cap = density_cap(mesh);
    let mut rho = Density::zeros(mesh.edge_count());
    for e in 0..mesh.edge_count() {
        if mesh.edge_area(e) == T::zero() {
            rho.set(e, cap);
        }
    }
    rho
}

/// Cap value `M = 10⁶ / (min positive edge length)`; 0 when every edge has
/// zero length (then no cap is ever needed).
pub fn density_cap<T: Scalar>(mesh: &MetricMesh<T>) -> T {
    match mesh.min_positive_edge_length() {
        Some(l) => T::of(1e6) / l,
        None => T::zero(),
    }
}

/// Projected coordinate ascent on the restricted dual: cycle over active
/// curves, moving each multiplier to its nonnegative coordinate maximum,
/// until the largest KKT violation is below `tol` or the sweep budget runs
/// out. `load`/`rho` are kept consistent with the multipliers throughout.
/// Returns the worst KKT violation seen on the final sweep.
fn ascend<T: Scalar>(
    mesh: &MetricMesh<T>,
    l_over_2w: &[T],
    active: &mut [ActivePath<T>],
    load: &mut [T],
    rho: &mut Density<T>,
    tol: T,
    sweeps: usize,
) -> T {
    let mut worst = T::zero();
    for _ in 0..sweeps {
        worst = T::zero();
        for p in active.iter_mut() {
            let mut plen = p.base;
            for &e in &p.free {
                plen = plen + rho.value(e) * mesh.edge(e).length;
            }
            let grad = T::one() - plen;
            let viol = if p.lambda > T::zero() {
                grad.abs()
            } else {
                grad.max(T::zero())
            };
            worst = worst.max(viol);
            if p.diag <= T::zero() {
                continue;
            }
            let target = (p.lambda + (grad + grad) / p.diag).max(T::zero());
            let delta = target - p.lambda;
            if delta != T::zero() {
                p.lambda = target;
                for &e in &p.free {
                    load[e] += delta;
                    rho.set(e, l_over_2w[e] * load[e]);
                }
            }
        }
        if worst <= tol {
            break;
        }
    }
    worst
}

/// Applies the restricted dual's quadratic form: `out = (M + ridge·I)·x`
/// with `M[γ,δ] = Σ_{e∈γ∩δ} length(e)²/edge_area(e)` over free edges. The
/// product is matrix-free: scatter the multipliers onto per-edge loads, then
/// gather them back along each curve. With `rows`, only the marked output
/// rows are computed (the others are zeroed), which keeps the conjugate-
/// gradient cost proportional to the passive set. `t` is edge-indexed
/// scratch that must be all zero on entry; it is zeroed again before
/// returning.
fn restricted_matvec<T: Scalar>(
    active: &[ActivePath<T>],
    len2_over_w: &[T],
    ridge: T,
    x: &[T],
    rows: Option<&[bool]>,
    t: &mut [T],
    out: &mut [T],
) {
    for (p, &xi) in active.iter().zip(x) {
        if xi != T::zero() {
            for &e in &p.free {
                t[e] += xi;
            }
        }
    }
    for (i, (p, o)) in active.iter().zip(out.iter_mut()).enumerate() {
        if rows.is_some_and(|r| !r[i]) {
            *o = T::zero();
            continue;
        }
        let mut acc = ridge * x[i];
        for &e in &p.free {
            acc = acc + len2_over_w[e] * t[e];
        }
        *o = acc;
    }
    for (p, &xi) in active.iter().zip(x) {
        if xi != T::zero() {
            for &e in &p.free {
                t[e] = T::zero();
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for `(M + ridge·I)·x = rhs`
/// restricted to the passive coordinates; frozen coordinates are held at
/// zero. Warm-started from the incoming `x`.
#[allow(clippy::too_many_arguments)]
fn cg_passive<T: Scalar>(
    active: &[ActivePath<T>],
    len2_over_w: &[T],
    ridge: T,
    dinv: &[T],
    passive: &[bool],
    rhs: &[T],
    x: &mut [T],
    t: &mut [T],
    work: &mut CgWork<T>,
    tol: T,
    cap: usize,
) {
    let m = active.len();
    for i in 0..m {
        if !passive[i] {
            x[i] = T::zero();
        }
    }
    restricted_matvec(active, len2_over_w, ridge, x, Some(passive), t, &mut work.ax);
    let mut rz = T::zero();
    let mut rr = T::zero();
    let mut bn = T::zero();
    for i in 0..m {
        let ri = if passive[i] {
            bn = bn + rhs[i] * rhs[i];
            rhs[i] - work.ax[i]
        } else {
            T::zero()
        };
        work.r[i] = ri;
        work.dir[i] = ri * dinv[i];
        rz = rz + ri * ri * dinv[i];
        rr = rr + ri * ri;
    }
    let rtol = (tol * T::of(1e-2)).max(T::epsilon() * T::of(64.0));
    let stop = rtol * rtol * bn.max(T::epsilon());
    for _ in 0..cap {
        if rr <= stop || !(rz > T::zero()) {
            break;
        }
        restricted_matvec(active, len2_over_w, ridge, &work.dir, Some(passive), t, &mut work.adir);
        let mut da = T::zero();
        for i in 0..m {
            da = da + work.dir[i] * work.adir[i];
        }
        if !(da > T::zero()) {
            break;
        }
        let alpha = rz / da;
        let mut rz_new = T::zero();
        rr = T::zero();
        for i in 0..m {
            if passive[i] {
                x[i] += alpha * work.dir[i];
                work.r[i] -= alpha * work.adir[i];
                rz_new = rz_new + work.r[i] * work.r[i] * dinv[i];
                rr = rr + work.r[i] * work.r[i];
            }
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            work.dir[i] = if passive[i] {
                work.r[i] * dinv[i] + beta * work.dir[i]
            } else {
                T::zero()
            };
        }
    }
}

struct CgWork<T> {
    ax: Vec<T>,
    r: Vec<T>,
    dir: Vec<T>,
    adir: Vec<T>,
}

/// Exact re-solve of the restricted dual as the nonnegative least-squares
/// system it is: block principal pivoting (with a single-exchange fallback
/// against cycling) over the passive set, each support solve done by
/// matrix-free conjugate gradients with a tiny ridge for exactly tied curve
/// rows. Warm-started from the current multipliers; `load`/`rho` are rebuilt
/// from the result so the stationarity identity keeps holding.
#[allow(clippy::too_many_arguments)]
fn nnls_polish<T: Scalar>(
    mesh: &MetricMesh<T>,
    len2_over_w: &[T],
    l_over_2w: &[T],
    active: &mut [ActivePath<T>],
    load: &mut [T],
    rho: &mut Density<T>,
    scratch: &mut [T],
    tol: T,
    cg_cap: usize,
) {
    let m = active.len();
    if m == 0 {
        return;
    }
    let max_diag = active.iter().fold(T::zero(), |a, p| a.max(p.diag));
    if max_diag <= T::zero() {
        return;
    }
    let ridge = max_diag * T::epsilon() * T::of(256.0);
    let dinv: Vec<T> = active
        .iter()
        .map(|p| T::one() / (p.diag + ridge))
        .collect();
    let rhs: Vec<T> = active
        .iter()
        .map(|p| (T::one() - p.base) * T::of(2.0))
        .collect();
    let mut x: Vec<T> = active.iter().map(|p| p.lambda).collect();
    let mut passive: Vec<bool> = x.iter().map(|&v| v > T::zero()).collect();
    if passive.iter().all(|&b| !b) {
        // Cold start: every positive right-hand side is a violated gradient.
        for (b, r) in passive.iter_mut().zip(&rhs) {
            *b = *r > T::zero();
        }
    }
    let mut work = CgWork {
        ax: vec![T::zero(); m],
        r: vec![T::zero(); m],
        dir: vec![T::zero(); m],
        adir: vec![T::zero(); m],
    };
    let grad_tol = tol + tol; // gradients live in 2·(1 − ρ-length) units

    let mut best_infeas = usize::MAX;
    let mut patience = 3i32;
    for _ in 0..60 {
        if passive.iter().any(|&b| b) {
            cg_passive(
                active,
                len2_over_w,
                ridge,
                &dinv,
                &passive,
                &rhs,
                &mut x,
                scratch,
                &mut work,
                tol,
                cg_cap,
            );
        }
        restricted_matvec(active, len2_over_w, T::zero(), &x, None, scratch, &mut work.ax);
        let mut neg: Vec<usize> = Vec::new();
        let mut pos: Vec<usize> = Vec::new();
        for i in 0..m {
            if passive[i] {
                if x[i] < T::zero() {
                    neg.push(i);
                }
            } else if rhs[i] - work.ax[i] > grad_tol {
                pos.push(i);
            }
        }
        let infeas = neg.len() + pos.len();
        if infeas == 0 {
            break;
        }
        if infeas < best_infeas {
            best_infeas = infeas;
            patience = 3;
        } else {
            patience -= 1;
        }
        if patience >= 0 {
            for &i in &neg {
                passive[i] = false;
                x[i] = T::zero();
            }
            for &i in &pos {
                passive[i] = true;
            }
        } else {
            // Exchange only the highest-index infeasible variable until the
            // infeasibility count starts shrinking again.
            let i = neg.iter().chain(pos.iter()).copied().max().unwrap();
            if passive[i] {
                passive[i] = false;
                x[i] = T::zero();
            } else {
                passive[i] = true;
            }
        }
    }

    for (p, &v) in active.iter_mut().zip(&x) {
        p.lambda = if v > T::zero() { v } else { T::zero() };
    }
    rebuild_from_multipliers(mesh, l_over_2w, active, load, rho);
}

/// Resets `load`/`rho` to match the active multipliers exactly (pinned
/// zero-area edges keep their cap).
fn rebuild_from_multipliers<T: Scalar>(
    mesh: &MetricMesh<T>,
    l_over_2w: &[T],
    active: &[ActivePath<T>],
    load: &mut [T],
    rho: &mut Density<T>,
) {
    for v in load.iter_mut() {
        *v = T::zero();
    }
    for p in active {
        if p.lambda > T::zero() {
            for &e in &p.free {
                load[e] += p.lambda;
            }
        }
    }
    for (e, &c) in l_over_2w.iter().enumerate() {
        if mesh.edge_area(e) > T::zero() {
            rho.set(e, c * load[e]);
        }
    }
}

// ============================================================================
// Certification
// ============================================================================

/// Independent re-check of a solver result against the stored mesh/family.
#[derive(Debug, Clone)]
pub struct Certificate<T> {
    /// `max(0, 1 − min curve ρ-length)` under the stored density.
    pub admissibility_residual: T,
    /// Relative primal/dual gap recomputed from the stored multipliers.
    pub relative_gap: T,
    pub admissible: bool,
    pub gap_ok: bool,
    /// Multipliers are nonnegative and positive only on curves of ρ-length
    /// within tolerance of 1.
    pub complementary_ok: bool,
    pub ok: bool,
}

/// Re-verifies a result: fresh oracle pass for admissibility, energy and
/// dual value recomputed from the stored density and multipliers, and the
/// complementary-slackness pattern of the active curves.
pub fn certify<T: Scalar>(
    mesh: &MetricMesh<T>,
    family: &FamilySpec,
    frame: Option<&QuadFrame>,
    result: &ModulusResult<T>,
    opts: &SolveOptions<T>,
) -> Result<Certificate<T>> {
    let rf = family.resolve(mesh, frame)?;
    match result.value {
        ModulusValue::Infinite => certify_infinite(mesh, &rf, result),
        ModulusValue::Finite(v) => {
            let found = oracle::oracle_resolved(mesh, &rf, &result.density);
            let residual = match &found {
                None => T::zero(), // empty family: value must be zero
                Some(p) => (T::one() - p.rho_length).max(T::zero()),
            };
            let admissible = residual <= opts.eps_admissibility;

            let primal = result.density.energy(mesh);
            let value_consistent = (v - primal).abs()
                <= T::of(1e-10) * (T::one() + primal.abs())
                && (result.primal_value - primal).abs()
                    <= T::of(1e-10) * (T::one() + primal.abs());

            // Dual value from the stored multipliers via stationarity.
            let mut lam_ok = true;
            let mut rho_dual = vec![T::zero(); mesh.edge_count()];
            for (path, &lam) in result.active_paths.iter().zip(&result.multipliers) {
                if lam < T::zero() {
                    lam_ok = false;
                }
                for &e in path {
                    let w = mesh.edge_area(e);
                    if w > T::zero() {
                        rho_dual[e] += lam * mesh.edge(e).length / (w + w);
                    }
                }
            }
            let mut dual_energy = T::zero();
            let mut lambda_sum = T::zero();
            for &lam in &result.multipliers {
                lambda_sum += lam;
            }
            for e in 0..mesh.edge_count() {
                let w = mesh.edge_area(e);
                if w > T::zero() {
                    dual_energy += rho_dual[e] * rho_dual[e] * w;
                }
            }
            let dual = lambda_sum - dual_energy;
            let gap = if primal > T::zero() {
                (primal - dual) / primal
            } else {
                dual.abs()
            };
            let gap_ok = gap >= -T::of(1e-9) && gap <= opts.eps_gap;

            let cs_tol = T::of(10.0) * opts.eps_admissibility.max(opts.eps_gap);
            let complementary_ok = lam_ok
                && result
                    .active_paths
                    .iter()
                    .zip(&result.multipliers)
                    .filter(|(_, &lam)| lam > T::zero())
                    .all(|(path, _)| {
                        let plen = result.density.path_length(mesh, path);
                        (plen - T::one()).abs() <= cs_tol
                    });

            let found_empty = found.is_none();
            let empty_consistent = !found_empty || v == T::zero();
            let ok = admissible
                && gap_ok
                && complementary_ok
                && value_consistent
                && empty_consistent
                && result.certified;
            Ok(Certificate {
                admissibility_residual: residual,
                relative_gap: gap,
                admissible,
                gap_ok,
                complementary_ok,
                ok,
            })
        }
    }
}

fn certify_infinite<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
    result: &ModulusResult<T>,
) -> Result<Certificate<T>> {
    // The witness must be a genuine zero-length source–sink connection.
    let ok = result.active_paths.len() == 1 && {
        let d = dijkstra(
            mesh,
            &rf.sources,
            &|e| mesh.edge(e).length,
            rf.allowed.as_deref(),
        );
        rf.sinks.iter().any(|&t| d.dist[t] == Some(T::zero()))
    };
    Ok(Certificate {
        admissibility_residual: T::zero(),
        relative_gap: T::zero(),
        admissible: ok,
        gap_ok: ok,
        complementary_ok: ok,
        ok,
    })
}
