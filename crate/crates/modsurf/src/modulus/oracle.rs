//! Separation oracle for the modulus QP: the ρ-shortest family curve.

use super::Density;
use crate::graph::{best_target, dijkstra};
use crate::scalar::Scalar;
use crate::surface::{EdgeId, FamilySpec, MetricMesh, QuadFrame, ResolvedFamily, VertexId};
use crate::Result;

/// A family curve found by the oracle, with its ρ-length.
#[derive(Debug, Clone)]
pub struct OraclePath<T> {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub rho_length: T,
}

/// Returns the family curve minimizing `Σ ρ(e)·length(e)`, or `None` when
/// the family is empty (no sink reachable inside the ambient set). Ties are
/// broken by fewer edges, then by lexicographically smallest vertex
/// sequence, so the result is deterministic.
pub fn shortest_violating_path<T: Scalar>(
    mesh: &MetricMesh<T>,
    family: &FamilySpec,
    frame: Option<&QuadFrame>,
    density: &Density<T>,
) -> Result<Option<OraclePath<T>>> {
    let rf = family.resolve(mesh, frame)?;
    Ok(oracle_resolved(mesh, &rf, density))
}

pub(crate) fn oracle_resolved<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
    density: &Density<T>,
) -> Option<OraclePath<T>> {
    let weight = |e: EdgeId| density.value(e) * mesh.edge(e).length;
    let sp = dijkstra(mesh, &rf.sources, &weight, rf.allowed.as_deref());
    let t = best_target(&sp, &rf.sinks)?;
    Some(OraclePath {
        vertices: sp.path_vertices(t),
        edges: sp.path_edges(t),
        rho_length: sp.dist[t].expect("target was reached"),
    })
}

/// Canonical working-set key of a curve: its positive-length edges, sorted.
/// Curves that differ only across zero-length edges impose the same
/// admissibility constraint.
pub(crate) fn canonical_key<T: Scalar>(mesh: &MetricMesh<T>, edges: &[EdgeId]) -> Vec<EdgeId> {
    let mut key: Vec<EdgeId> = edges
        .iter()
        .copied()
        .filter(|&e| mesh.edge(e).length > T::zero())
        .collect();
    key.sort_unstable();
    key
}

/// Batched oracle: returns the minimum ρ-length over the family together
/// with up to `cap` distinct curves of ρ-length below `enum_bound`, sorted
/// by ascending ρ-length. One shortest-path tree prices every sink, so each
/// sink contributes its tree curve; a second tree from the sinks then bounds
/// a corridor `dist_from_source + dist_to_sink < enum_bound` whose near-tied
/// alternates are enumerated directly — without this the outer loop would
/// discover the corridor one curve per call. `enum_bound` may sit above 1 to
/// pick up curves that are about to become tight. Returns an empty batch
/// when the family curve of minimum length is already ≥ `certify_at`; `None`
/// when the family is empty.
pub(crate) fn oracle_batch<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
    density: &Density<T>,
    certify_at: T,
    enum_bound: T,
    cap: usize,
) -> Option<(T, Vec<OraclePath<T>>)> {
    let weight = |e: EdgeId| density.value(e) * mesh.edge(e).length;
    let sp = dijkstra(mesh, &rf.sources, &weight, rf.allowed.as_deref());
    let best = best_target(&sp, &rf.sinks)?;
    let best_len = sp.dist[best].expect("target was reached");
    if best_len >= certify_at {
        return Some((best_len, Vec::new()));
    }

    let mut seen: std::collections::BTreeSet<Vec<EdgeId>> = std::collections::BTreeSet::new();
    let mut out: Vec<OraclePath<T>> = Vec::new();
    for &t in &rf.sinks {
        if let Some(d) = sp.dist[t] {
            if d < enum_bound {
                let edges = sp.path_edges(t);
                if seen.insert(canonical_key(mesh, &edges)) {
                    out.push(OraclePath {
                        vertices: sp.path_vertices(t),
                        edges,
                        rho_length: d,
                    });
                }
            }
        }
    }
    if out.len() < cap {
        enumerate_corridor(mesh, rf, density, enum_bound, cap, &mut seen, &mut out);
    }
    out.sort_by(|a, b| {
        a.rho_length
            .partial_cmp(&b.rho_length)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.edges.len().cmp(&b.edges.len()))
            .then(a.vertices.cmp(&b.vertices))
    });
    out.truncate(cap);
    Some((best_len, out))
}

/// Union-find over zero-length edges: every vertex is mapped to the smallest
/// member of its degenerate cluster (vertices outside `allowed` stay solo).
pub(crate) fn zero_length_components<T: Scalar>(
    mesh: &MetricMesh<T>,
    allowed: Option<&[bool]>,
) -> Vec<VertexId> {
    fn find(rep: &mut [VertexId], mut v: VertexId) -> VertexId {
        while rep[v] != v {
            rep[v] = rep[rep[v]];
            v = rep[v];
        }
        v
    }
    let nv = mesh.vertex_count();
    let mut rep: Vec<VertexId> = (0..nv).collect();
    let ok = |v: VertexId| allowed.map_or(true, |a| a[v]);
    for e in 0..mesh.edge_count() {
        let ed = mesh.edge(e);
        if ed.length == T::zero() && ok(ed.a) && ok(ed.b) {
            let ra = find(&mut rep, ed.a);
            let rb = find(&mut rep, ed.b);
            if ra != rb {
                // Union by minimum so the representative is canonical.
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                rep[hi] = lo;
            }
        }
    }
    for v in 0..nv {
        let r = find(&mut rep, v);
        rep[v] = r;
    }
    rep
}

struct Frame<T> {
    rep: VertexId,
    entry: VertexId,
    /// Positive-length edge that led here and its tail vertex in the parent
    /// cluster (`None` for a root).
    via: Option<(VertexId, EdgeId)>,
    /// Outgoing candidates `(exit vertex, edge, next entry)`.
    exp: Vec<(VertexId, EdgeId, VertexId)>,
    idx: usize,
    /// ρ-length accumulated on arrival.
    len: T,
}

/// Depth-first enumeration of violated curves over the corridor
/// `len_so_far + weight(e) + dist_to_sink < bound`, with zero-length
/// clusters contracted to single nodes (a connector through the cluster is
/// patched in at emission, so braided reroutes inside a cluster cannot
/// multiply the search). Deterministic: clusters keyed by smallest member,
/// candidates in (member, adjacency) order, bounded per sink and by a global
/// expansion budget.
fn enumerate_corridor<T: Scalar>(
    mesh: &MetricMesh<T>,
    rf: &ResolvedFamily,
    density: &Density<T>,
    bound: T,
    cap: usize,
    seen: &mut std::collections::BTreeSet<Vec<EdgeId>>,
    out: &mut Vec<OraclePath<T>>,
) {
    use std::collections::BTreeMap;
    let nv = mesh.vertex_count();
    let ok = |v: VertexId| rf.allowed.as_deref().map_or(true, |a| a[v]);
    let weight = |e: EdgeId| density.value(e) * mesh.edge(e).length;
    let back = dijkstra(mesh, &rf.sinks, &weight, rf.allowed.as_deref());

    let rep = zero_length_components(mesh, rf.allowed.as_deref());
    let mut members: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for v in 0..nv {
        if ok(v) {
            members.entry(rep[v]).or_default().push(v);
        }
    }
    let mut sink_of: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for &t in &rf.sinks {
        sink_of.entry(rep[t]).or_insert(t);
    }

    // Candidates sorted cheapest-first (edge weight plus remaining distance)
    // steer the search toward the sinks, so the budget is spent emitting
    // curves rather than wandering zero-weight regions.
    let expansions = |r: VertexId| -> Vec<(VertexId, EdgeId, VertexId)> {
        let mut exp = Vec::new();
        if let Some(ms) = members.get(&r) {
            for &v in ms {
                for &(e, u) in mesh.neighbors(v) {
                    if mesh.edge(e).length > T::zero() && ok(u) {
                        exp.push((v, e, u));
                    }
                }
            }
        }
        exp.sort_by(|a, b| {
            let ka = weight(a.1) + back.dist[rep[a.2]].unwrap_or_else(T::infinity);
            let kb = weight(b.1) + back.dist[rep[b.2]].unwrap_or_else(T::infinity);
            ka.partial_cmp(&kb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(b))
        });
        exp
    };

    let per_sink_cap = (cap / rf.sinks.len().max(1)).max(4);
    let mut emitted: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut visited = vec![false; nv];
    let mut bfs_prev: Vec<Option<(VertexId, EdgeId)>> = vec![None; nv];

    let mut roots: Vec<VertexId> = rf.sources.iter().copied().filter(|&s| ok(s)).collect();
    roots.sort_unstable();
    roots.dedup_by_key(|s| rep[*s]);
    let per_root_budget = cap.saturating_mul(256) / roots.len().max(1);

    'roots: for s in roots {
        let r = rep[s];
        if visited[r] || back.dist[r].is_none() {
            continue;
        }
        if sink_of.contains_key(&r) {
            continue; // zero-length connection; handled as infinite modulus
        }
        let mut budget = per_root_budget;
        visited[r] = true;
        let mut stack = vec![Frame {
            rep: r,
            entry: s,
            via: None,
            exp: expansions(r),
            idx: 0,
            len: T::zero(),
        }];
        while let Some(top) = stack.last_mut() {
            if out.len() >= cap {
                for f in &stack {
                    visited[f.rep] = false;
                }
                break 'roots;
            }
            if budget == 0 || top.idx >= top.exp.len() {
                visited[top.rep] = false;
                stack.pop();
                continue;
            }
            let (v, e, u) = top.exp[top.idx];
            top.idx += 1;
            budget -= 1;
            let ru = rep[u];
            if visited[ru] {
                continue;
            }
            let len = top.len + weight(e);
            let to_sink = match back.dist[ru] {
                Some(d) => d,
                None => continue,
            };
            if !(len + to_sink < bound) {
                continue;
            }
            if let Some(&t) = sink_of.get(&ru) {
                let count = emitted.entry(t).or_insert(0);
                if *count < per_sink_cap {
                    let mut vertices = Vec::new();
                    let mut edges = Vec::new();
                    for i in 0..stack.len() {
                        let exit = if i + 1 < stack.len() {
                            stack[i + 1].via.expect("non-root frame has via").0
                        } else {
                            v
                        };
                        cluster_connector(
                            mesh,
                            &rep,
                            stack[i].entry,
                            exit,
                            &mut bfs_prev,
                            &mut vertices,
                            &mut edges,
                        );
                        edges.push(if i + 1 < stack.len() {
                            stack[i + 1].via.expect("non-root frame has via").1
                        } else {
                            e
                        });
                    }
                    cluster_connector(mesh, &rep, u, t, &mut bfs_prev, &mut vertices, &mut edges);
                    if seen.insert(canonical_key(mesh, &edges)) {
                        *count += 1;
                        out.push(OraclePath {
                            vertices,
                            edges,
                            rho_length: len,
                        });
                    }
                }
                continue; // curves stop at the first sink
            }
            visited[ru] = true;
            stack.push(Frame {
                rep: ru,
                entry: u,
                via: Some((v, e)),
                exp: expansions(ru),
                idx: 0,
                len,
            });
        }
    }
}

/// Appends the vertices (`from` through `to`, inclusive) and zero-length
/// edges of a route between two vertices of one degenerate cluster, found by
/// breadth-first search over zero-length edges. `prev` is vertex-indexed
/// scratch, cleared again before returning.
pub(crate) fn cluster_connector<T: Scalar>(
    mesh: &MetricMesh<T>,
    rep: &[VertexId],
    from: VertexId,
    to: VertexId,
    prev: &mut [Option<(VertexId, EdgeId)>],
    vertices: &mut Vec<VertexId>,
    edges: &mut Vec<EdgeId>,
) {
    if from == to {
        vertices.push(from);
        return;
    }
    debug_assert_eq!(rep[from], rep[to], "connector endpoints share a cluster");
    let mut touched = vec![from];
    let mut queue = std::collections::VecDeque::from([from]);
    'search: while let Some(v) = queue.pop_front() {
        for &(e, u) in mesh.neighbors(v) {
            if mesh.edge(e).length == T::zero()
                && rep[u] == rep[from]
                && prev[u].is_none()
                && u != from
            {
                prev[u] = Some((v, e));
                touched.push(u);
                if u == to {
                    break 'search;
                }
                queue.push_back(u);
            }
        }
    }
    let mut chain_v = vec![to];
    let mut chain_e = Vec::new();
    let mut cur = to;
    while cur != from {
        let (pv, pe) = prev[cur].expect("cluster is connected by zero-length edges");
        chain_v.push(pv);
        chain_e.push(pe);
        cur = pv;
    }
    chain_v.reverse();
    chain_e.reverse();
    vertices.extend(chain_v);
    edges.extend(chain_e);
    for v in touched {
        prev[v] = None;
    }
}
