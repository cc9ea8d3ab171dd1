//! Harmonic warm start for the constraint-generation solver.
//!
//! The extremal density of a connecting family is harmonic: with edge
//! conductance `edge_area/length²` (degenerate zero-length clusters
//! contracted to single nodes), the Dirichlet potential `u` — 0 on the
//! sources, 1 on the sinks — yields the density `ρ(e) = |Δu|/length(e)`.
//! Every family curve then measures `Σ|Δu| ≥ 1`, while the flow `c_e·Δu`
//! decomposes into source→sink curves measuring exactly 1 whose fluxes are
//! half the optimal multipliers. Seeding the working set with that
//! decomposition (all its curves are violated at ρ ≡ 0) lets the outer loop
//! certify in a handful of oracle calls instead of crawling through the
//! near-tied corridor one curve at a time. The guide is only a warm start:
//! its output re-enters the ordinary working-set/certificate machinery, so
//! an inaccurate guide costs extra rounds, never correctness.

use super::oracle::{cluster_connector, zero_length_components};
use crate::scalar::Scalar;
use crate::surface::{EdgeId, MetricMesh, ResolvedFamily, VertexId};
use std::collections::{BTreeMap, VecDeque};

/// One curve of the harmonic flow decomposition.
pub(crate) struct GuidePath<T> {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    /// Flow carried by the curve; the warm-start multiplier is `2·flux`.
    pub flux: T,
}

/// Computes the harmonic flow decomposition for the family, or an empty
/// vector when no usable guide exists (no conductive connection, or the
/// linear solve failed to converge).
pub(crate) fn harmonic_guide<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
) -> Vec<GuidePath<T>> {
    let nv = mesh.vertex_count();
    let ok = |v: VertexId| rf.allowed.as_deref().map_or(true, |a| a[v]);
    let rep = zero_length_components(mesh, rf.allowed.as_deref());
    let mut memb: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for v in 0..nv {
        if ok(v) {
            memb.entry(rep[v]).or_default().push(v);
        }
    }

    let mut is_source = vec![false; nv];
    let mut is_sink = vec![false; nv];
    for &s in &rf.sources {
        if ok(s) {
            is_source[rep[s]] = true;
        }
    }
    let mut sink_vertex: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for &t in &rf.sinks {
        if ok(t) {
            is_sink[rep[t]] = true;
            sink_vertex.entry(rep[t]).or_insert(t);
        }
    }
    if (0..nv).any(|v| is_source[v] && is_sink[v]) {
        return Vec::new(); // zero-length connection: infinite modulus
    }

    // Conductive edges couple distinct cluster nodes; everything else
    // (degenerate, pinned, or masked edges) drops out of the Dirichlet
    // problem.
    let conductance = |e: EdgeId| -> T {
        let ed = mesh.edge(e);
        if ed.length > T::zero() && ok(ed.a) && ok(ed.b) && rep[ed.a] != rep[ed.b] {
            let w = mesh.edge_area(e);
            if w > T::zero() {
                return w / (ed.length * ed.length);
            }
        }
        T::zero()
    };

    // Live node set: reachable from a terminal through conductive edges.
    let mut live = vec![false; nv];
    let mut queue: VecDeque<VertexId> = VecDeque::new();
    for (&r, _) in memb.iter() {
        if is_source[r] || is_sink[r] {
            live[r] = true;
            queue.push_back(r);
        }
    }
    while let Some(r) = queue.pop_front() {
        for &m in &memb[&r] {
            for &(e, u) in mesh.neighbors(m) {
                if conductance(e) > T::zero() && !live[rep[u]] {
                    live[rep[u]] = true;
                    queue.push_back(rep[u]);
                }
            }
        }
    }

    // Dense indexing of the free (interior) nodes.
    let mut idx = vec![usize::MAX; nv];
    let mut free: Vec<VertexId> = Vec::new();
    for (&r, _) in memb.iter() {
        if live[r] && !is_source[r] && !is_sink[r] {
            idx[r] = free.len();
            free.push(r);
        }
    }

    // Laplacian rows over free nodes: A·u = b with the Dirichlet data folded
    // into b (sources contribute 0, sinks contribute c·1).
    let n = free.len();
    let mut diag = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (i, &r) in free.iter().enumerate() {
        for &m in &memb[&r] {
            for &(e, u) in mesh.neighbors(m) {
                let c = conductance(e);
                if c > T::zero() {
                    let ru = rep[u];
                    diag[i] = diag[i] + c;
                    if is_sink[ru] {
                        b[i] = b[i] + c;
                    } else if !is_source[ru] {
                        cols[i].push((idx[ru], c));
                    }
                }
            }
        }
    }

    let mut u_free = vec![T::of(0.5); n];
    if n > 0 && !laplace_cg(&diag, &cols, &b, &mut u_free) {
        return Vec::new();
    }
    let mut pot = vec![T::zero(); nv];
    for v in 0..nv {
        let r = rep[v];
        pot[v] = if is_sink[r] {
            T::one()
        } else if idx[r] != usize::MAX {
            u_free[idx[r]]
        } else {
            T::zero()
        };
    }

    decompose_flow(
        mesh,
        rf,
        &rep,
        &memb,
        &pot,
        &is_sink,
        &sink_vertex,
        conductance,
    )
}

/// Jacobi-preconditioned conjugate gradients for the free-node Laplacian.
/// Returns false when the residual failed to fall eight orders of magnitude
/// below the right-hand side within the iteration cap.
fn laplace_cg<T: Scalar>(diag: &[T], cols: &[Vec<(usize, T)>], b: &[T], u: &mut [T]) -> bool {
    let n = b.len();
    let matvec = |x: &[T], out: &mut [T]| {
        for i in 0..n {
            let mut acc = diag[i] * x[i];
            for &(j, c) in &cols[i] {
                acc = acc - c * x[j];
            }
            out[i] = acc;
        }
    };
    let mut ax = vec![T::zero(); n];
    matvec(u, &mut ax);
    let mut r: Vec<T> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut z: Vec<T> = (0..n).map(|i| r[i] / diag[i]).collect();
    let mut p = z.clone();
    let mut rz = T::zero();
    let mut bn = T::zero();
    for i in 0..n {
        rz = rz + r[i] * z[i];
        bn = bn + b[i] * b[i];
    }
    let tol = T::epsilon() * T::of(64.0);
    let stop = (tol * tol * bn).max(T::min_positive_value());
    let cap = 200 + 20 * (n as f64).sqrt() as usize;
    let mut rr = r.iter().fold(T::zero(), |a, &v| a + v * v);
    for _ in 0..cap {
        if rr <= stop {
            break;
        }
        matvec(&p, &mut ax);
        let mut pap = T::zero();
        for i in 0..n {
            pap = pap + p[i] * ax[i];
        }
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let mut rz_new = T::zero();
        rr = T::zero();
        for i in 0..n {
            z[i] = r[i] / diag[i];
            rz_new = rz_new + r[i] * z[i];
            rr = rr + r[i] * r[i];
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    rr <= stop
}

/// Greedy path decomposition of the harmonic flow: repeatedly walk from a
/// source along the largest remaining up-potential flux to a sink,
/// subtracting the path's bottleneck. Deterministic (largest flux, ties by
/// edge id) and loop-free because each step strictly increases the
/// potential.
#[allow(clippy::too_many_arguments)]
fn decompose_flow<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
    rep: &[VertexId],
    memb: &BTreeMap<VertexId, Vec<VertexId>>,
    pot: &[T],
    is_sink: &[bool],
    sink_vertex: &BTreeMap<VertexId, VertexId>,
    conductance: impl Fn(EdgeId) -> T,
) -> Vec<GuidePath<T>> {
    let nv = mesh.vertex_count();
    let ne = mesh.edge_count();
    // Remaining flux per edge; the direction is always toward the
    // higher-potential endpoint.
    let mut flux = vec![T::zero(); ne];
    let mut max_flux = T::zero();
    for e in 0..ne {
        let c = conductance(e);
        if c > T::zero() {
            let ed = mesh.edge(e);
            let f = (c * (pot[ed.b] - pot[ed.a])).abs();
            flux[e] = f;
            max_flux = max_flux.max(f);
        }
    }
    if !(max_flux > T::zero()) {
        return Vec::new();
    }
    let cut = max_flux * T::epsilon() * T::of(1e4);

    let mut out = Vec::new();
    let mut bfs_prev: Vec<Option<(VertexId, EdgeId)>> = vec![None; nv];
    let ok = |v: VertexId| rf.allowed.as_deref().map_or(true, |a| a[v]);
    let mut roots: Vec<VertexId> = rf.sources.iter().copied().filter(|&s| ok(s)).collect();
    roots.sort_unstable();
    roots.dedup_by_key(|s| rep[*s]);

    for s in roots {
        'walks: loop {
            if out.len() >= 4 * ne {
                return out; // safety valve; unreachable for conserved flows
            }
            let mut entry = s;
            let mut vertices: Vec<VertexId> = Vec::new();
            let mut edges: Vec<EdgeId> = Vec::new();
            let mut steps: Vec<EdgeId> = Vec::new();
            let mut path_flux = T::infinity();
            loop {
                let r = rep[entry];
                if is_sink[r] {
                    let t = sink_vertex[&r];
                    cluster_connector(mesh, rep, entry, t, &mut bfs_prev, &mut vertices, &mut edges);
                    break;
                }
                // Largest remaining up-flux out of this cluster node.
                let mut best: Option<(T, VertexId, EdgeId, VertexId)> = None;
                for &m in &memb[&r] {
                    for &(e, u) in mesh.neighbors(m) {
                        if flux[e] > cut && pot[u] > pot[m] {
                            let better = match &best {
                                None => true,
                                Some((bf, _, be, _)) => {
                                    flux[e] > *bf || (flux[e] == *bf && e < *be)
                                }
                            };
                            if better {
                                best = Some((flux[e], m, e, u));
                            }
                        }
                    }
                }
                let Some((f, exit, e, next)) = best else {
                    // Numerical dead end: the leftover flux here is on the
                    // order of the linear-solve residual. Abandon the walk.
                    break 'walks;
                };
                cluster_connector(mesh, rep, entry, exit, &mut bfs_prev, &mut vertices, &mut edges);
                edges.push(e);
                steps.push(e);
                path_flux = path_flux.min(f);
                entry = next;
            }
            if steps.is_empty() || !(path_flux > T::zero()) {
                break;
            }
            for &e in &steps {
                flux[e] = flux[e] - path_flux;
            }
            let p = GuidePath {
                vertices,
                edges,
                flux: path_flux,
            };
            debug_assert_eq!(p.vertices.len(), p.edges.len() + 1);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_collapsed_disk, build_rectangle, FamilySpec};

    fn check_curves(
        mesh: &MetricMesh<f64>,
        rf: &ResolvedFamily,
        paths: &[GuidePath<f64>],
    ) {
        assert!(!paths.is_empty());
        for p in paths {
            assert_eq!(p.vertices.len(), p.edges.len() + 1);
            assert!(rf.sources.contains(&p.vertices[0]));
            assert!(rf.sinks.contains(p.vertices.last().unwrap()));
            assert!(p.flux > 0.0);
            for (i, &e) in p.edges.iter().enumerate() {
                let ed = mesh.edge(e);
                let (a, b) = (p.vertices[i], p.vertices[i + 1]);
                assert!(
                    (ed.a, ed.b) == (a, b) || (ed.a, ed.b) == (b, a),
                    "edge {e} does not join consecutive curve vertices"
                );
            }
        }
    }

    #[test]
    fn rectangle_decomposition_carries_the_modulus() {
        let (mesh, frame) = build_rectangle(2.0_f64, 1.0, 4).unwrap();
        let rf = FamilySpec::gamma1().resolve(&mesh, Some(&frame)).unwrap();
        let paths = harmonic_guide(&mesh, &rf);
        check_curves(&mesh, &rf, &paths);
        // Total flux is the effective conductance, which for the harmonic
        // problem equals the modulus: width/height = 2.
        let total: f64 = paths.iter().map(|p| p.flux).sum();
        assert!((total - 2.0).abs() < 1e-9, "total flux {total}");
    }

    #[test]
    fn collapsed_disk_decomposition_matches_solver() {
        let (mesh, frame) = build_collapsed_disk(1.5_f64, 4, 0.5).unwrap();
        let rf = FamilySpec::gamma1().resolve(&mesh, Some(&frame)).unwrap();
        let paths = harmonic_guide(&mesh, &rf);
        check_curves(&mesh, &rf, &paths);
        // At least one curve must thread the degenerate cluster.
        assert!(paths
            .iter()
            .any(|p| p.edges.iter().any(|&e| mesh.edge(e).length == 0.0)));
        let total: f64 = paths.iter().map(|p| p.flux).sum();
        let solved = crate::modulus::solve_modulus(
            &mesh,
            &FamilySpec::gamma1(),
            Some(&frame),
            &crate::modulus::SolveOptions::default(),
        )
        .unwrap();
        let value = solved.value.finite().unwrap();
        assert!(
            (total - value).abs() <= 1e-6 * value,
            "flux {total} vs modulus {value}"
        );
    }
}
