//! Shared graph primitives: deterministic Dijkstra and a union-find.
//!
//! Every shortest-path computation in the crate funnels through
//! [`dijkstra`], so the tie-breaking policy (shorter weight, then fewer
//! edges, then lexicographically smallest vertex sequence) is uniform and
//! runs are reproducible bit-for-bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;
use crate::surface::{EdgeId, MetricMesh, VertexId};

/// Heap entry ordered so that `BinaryHeap` pops the smallest
/// (distance, hops, vertex) triple first.
struct HeapEntry<T> {
    dist: T,
    hops: usize,
    vertex: VertexId,
}

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for HeapEntry<T> {}
impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Weights are validated finite and nonnegative, so partial_cmp is total.
        let d = other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances");
        d.then(other.hops.cmp(&self.hops))
            .then(other.vertex.cmp(&self.vertex))
    }
}

/// Single-source-set shortest-path tree with deterministic tie-breaking.
pub(crate) struct ShortestPaths<T> {
    pub dist: Vec<Option<T>>,
    pub hops: Vec<usize>,
    /// Parent vertex and connecting edge on the chosen shortest path.
    pub parent: Vec<Option<(VertexId, EdgeId)>>,
}

impl<T: Scalar> ShortestPaths<T> {
    /// Vertex sequence of the chosen path from the source set to `v`
    /// (source first). Empty if `v` is unreachable.
    pub fn path_vertices(&self, v: VertexId) -> Vec<VertexId> {
        if self.dist[v].is_none() {
            return Vec::new();
        }
        let mut seq = vec![v];
        let mut cur = v;
        while let Some((p, _)) = self.parent[cur] {
            seq.push(p);
            cur = p;
        }
        seq.reverse();
        seq
    }

    /// Edge sequence of the chosen path from the source set to `v`.
    pub fn path_edges(&self, v: VertexId) -> Vec<EdgeId> {
        let mut seq = Vec::new();
        let mut cur = v;
        while let Some((p, e)) = self.parent[cur] {
            seq.push(e);
            cur = p;
        }
        seq.reverse();
        seq
    }
}

/// Multi-source Dijkstra over a mesh with per-edge weights `weight(e) >= 0`.
///
/// `allowed` restricts the search to a vertex subset when present (sources
/// outside it are ignored). Ties are resolved by fewer hops and then by the
/// lexicographically smallest vertex sequence, which makes the chosen tree
/// independent of heap internals.
pub(crate) fn dijkstra<T: Scalar>(
    mesh: &MetricMesh<T>,
    sources: &[VertexId],
    weight: &dyn Fn(EdgeId) -> T,
    allowed: Option<&[bool]>,
) -> ShortestPaths<T> {
    dijkstra_capped(mesh, sources, weight, allowed, None)
}

/// [`dijkstra`] with distance accumulation saturated at `cap`: candidate
/// distances are `min(cap, dist + w)`. With weights and cap on a common
/// dyadic grid every stored distance stays on the grid, which the potential
/// construction uses to keep all arithmetic exact.
pub(crate) fn dijkstra_capped<T: Scalar>(
    mesh: &MetricMesh<T>,
    sources: &[VertexId],
    weight: &dyn Fn(EdgeId) -> T,
    allowed: Option<&[bool]>,
    cap: Option<T>,
) -> ShortestPaths<T> {
    dijkstra_core(mesh, sources, weight, allowed, None, cap)
}

/// [`dijkstra`] restricted to the edges flagged in `edge_mask`; vertices are
/// reachable only through flagged edges.
pub(crate) fn dijkstra_filtered<T: Scalar>(
    mesh: &MetricMesh<T>,
    sources: &[VertexId],
    weight: &dyn Fn(EdgeId) -> T,
    cap: Option<T>,
    edge_mask: Option<&[bool]>,
) -> ShortestPaths<T> {
    dijkstra_core(mesh, sources, weight, None, edge_mask, cap)
}

fn dijkstra_core<T: Scalar>(
    mesh: &MetricMesh<T>,
    sources: &[VertexId],
    weight: &dyn Fn(EdgeId) -> T,
    allowed: Option<&[bool]>,
    edge_mask: Option<&[bool]>,
    cap: Option<T>,
) -> ShortestPaths<T> {
    let n = mesh.vertex_count();
    let mut sp = ShortestPaths {
        dist: vec![None; n],
        hops: vec![0; n],
        parent: vec![None; n],
    };
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<HeapEntry<T>> = BinaryHeap::new();

    let mut srcs: Vec<VertexId> = sources.to_vec();
    srcs.sort_unstable();
    srcs.dedup();
    for &s in &srcs {
        if allowed.map_or(true, |a| a[s]) {
            sp.dist[s] = Some(T::zero());
            heap.push(HeapEntry {
                dist: T::zero(),
                hops: 0,
                vertex: s,
            });
        }
    }

    while let Some(HeapEntry { dist, hops, vertex }) = heap.pop() {
        if done[vertex] {
            continue;
        }
        if sp.dist[vertex] != Some(dist) || sp.hops[vertex] != hops {
            continue; // stale entry
        }
        done[vertex] = true;
        for &(e, to) in mesh.neighbors(vertex) {
            if done[to] || allowed.map_or(false, |a| !a[to]) {
                continue;
            }
            if edge_mask.map_or(false, |m| !m[e]) {
                continue;
            }
            let w = weight(e);
            let cand = match cap {
                Some(c) => (dist + w).min(c),
                None => dist + w,
            };
            let cand_hops = hops + 1;
            let better = match sp.dist[to] {
                None => true,
                Some(cur) => match cand.partial_cmp(&cur).expect("finite distances") {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        if cand_hops != sp.hops[to] {
                            cand_hops < sp.hops[to]
                        } else {
                            lex_smaller(&sp, vertex, sp.parent[to].map(|(p, _)| p))
                        }
                    }
                },
            };
            if better {
                sp.dist[to] = Some(cand);
                sp.hops[to] = cand_hops;
                sp.parent[to] = Some((vertex, e));
                heap.push(HeapEntry {
                    dist: cand,
                    hops: cand_hops,
                    vertex: to,
                });
            }
        }
    }
    sp
}

/// True when the finalized path ending at `candidate` is lexicographically
/// smaller than the one ending at `incumbent` (both have equal hop counts).
fn lex_smaller<T: Scalar>(
    sp: &ShortestPaths<T>,
    candidate: VertexId,
    incumbent: Option<VertexId>,
) -> bool {
    let inc = match incumbent {
        Some(v) => v,
        None => return false,
    };
    sp.path_vertices(candidate) < sp.path_vertices(inc)
}

/// Among `targets`, the one reached first under (distance, hops, id) order.
pub(crate) fn best_target<T: Scalar>(
    sp: &ShortestPaths<T>,
    targets: &[VertexId],
) -> Option<VertexId> {
    let mut best: Option<(T, usize, VertexId)> = None;
    for &t in targets {
        if let Some(d) = sp.dist[t] {
            let key = (d, sp.hops[t], t);
            let better = match best {
                None => true,
                Some((bd, bh, bv)) => match d.partial_cmp(&bd).expect("finite distances") {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => (key.1, key.2) < (bh, bv),
                },
            };
            if better {
                best = Some(key);
            }
        }
    }
    best.map(|(_, _, v)| v)
}

/// Plain union-find over `0..n`, used for component labeling.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: smaller root wins.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}
