//! Minimal separating edge cuts.
//!
//! Given two vertex sides and a predicate marking cuttable edges, finds a
//! minimum-cardinality subset of cuttable edges whose removal disconnects
//! the sides, via max-flow with unit capacity on cuttable edges and an
//! effectively infinite capacity elsewhere. The cut is returned together
//! with its organization in the planar dual, where a separating cut appears
//! as a chain or cycle.

use super::{dual_chain, DualChain, EdgeId, MetricMesh, VertexId};
use crate::graph::UnionFind;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// A minimal separating edge cut plus its dual-graph organization.
#[derive(Debug, Clone)]
pub struct Cut {
    /// Cut edges, ascending by id.
    pub edges: Vec<EdgeId>,
    pub dual: DualChain,
}

struct FlowArc {
    to: usize,
    cap: i64,
    rev: usize,
}

struct FlowNet {
    arcs: Vec<Vec<FlowArc>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            arcs: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_undirected(&mut self, a: usize, b: usize, cap: i64) {
        let ra = self.arcs[b].len();
        let rb = self.arcs[a].len();
        self.arcs[a].push(FlowArc { to: b, cap, rev: ra });
        self.arcs[b].push(FlowArc { to: a, cap, rev: rb });
    }

    fn add_directed(&mut self, a: usize, b: usize, cap: i64) {
        let ra = self.arcs[b].len();
        let rb = self.arcs[a].len();
        self.arcs[a].push(FlowArc { to: b, cap, rev: ra });
        self.arcs[b].push(FlowArc {
            to: a,
            cap: 0,
            rev: rb,
        });
    }

    /// Edmonds–Karp, stopping early once the flow reaches `limit`.
    fn max_flow(&mut self, s: usize, t: usize, limit: i64) -> i64 {
        let n = self.arcs.len();
        let mut flow = 0i64;
        while flow < limit {
            // BFS in arc order: deterministic augmenting paths.
            let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut seen = vec![false; n];
            let mut queue = std::collections::VecDeque::new();
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (k, arc) in self.arcs[u].iter().enumerate() {
                    if arc.cap > 0 && !seen[arc.to] {
                        seen[arc.to] = true;
                        pred[arc.to] = Some((u, k));
                        queue.push_back(arc.to);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut bottleneck = limit - flow;
            let mut v = t;
            while let Some((u, k)) = pred[v] {
                bottleneck = bottleneck.min(self.arcs[u][k].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, k)) = pred[v] {
                let rev = self.arcs[u][k].rev;
                self.arcs[u][k].cap -= bottleneck;
                self.arcs[v][rev].cap += bottleneck;
                v = u;
            }
            flow += bottleneck;
        }
        flow
    }

    /// Vertices reachable from `s` along positive-residual arcs.
    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.arcs.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for arc in &self.arcs[u] {
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }
}

/// Finds a minimum-cardinality cut among the edges satisfying `forbidden`
/// that separates `side_a` from `side_b`. Errors when no subset of those
/// edges disconnects the sides.
pub fn separating_cut<T: Scalar>(
    mesh: &MetricMesh<T>,
    side_a: &[VertexId],
    side_b: &[VertexId],
    forbidden: &dyn Fn(EdgeId) -> bool,
) -> Result<Cut> {
    let nv = mesh.vertex_count();
    if side_a.is_empty() || side_b.is_empty() {
        return Err(Error::InvalidInput("cut sides must be nonempty".into()));
    }
    for &v in side_a.iter().chain(side_b) {
        if v >= nv {
            return Err(Error::InvalidInput(
                "cut side references vertex out of range".into(),
            ));
        }
    }
    if side_a.iter().any(|v| side_b.contains(v)) {
        return Err(Error::NoSeparatingCut(
            "sides share a vertex; no edge cut can separate them".into(),
        ));
    }

    let ne = mesh.edge_count();
    let inf = (ne as i64) + 2;
    let (s, t) = (nv, nv + 1);
    let mut net = FlowNet::new(nv + 2);
    for e in 0..ne {
        let ed = mesh.edge(e);
        let cap = if forbidden(e) { 1 } else { inf };
        net.add_undirected(ed.a, ed.b, cap);
    }
    for &v in side_a {
        net.add_directed(s, v, inf);
    }
    for &v in side_b {
        net.add_directed(v, t, inf);
    }

    let flow = net.max_flow(s, t, inf);
    if flow >= inf {
        return Err(Error::NoSeparatingCut(
            "removing all marked edges leaves the sides connected".into(),
        ));
    }

    let reach = net.residual_reachable(s);
    let mut cut: Vec<EdgeId> = (0..ne)
        .filter(|&e| {
            let ed = mesh.edge(e);
            reach[ed.a] != reach[ed.b]
        })
        .collect();
    cut.sort_unstable();
    debug_assert!(cut.iter().all(|&e| forbidden(e)));
    debug_assert_eq!(cut.len() as i64, flow);

    // Re-verify separation by component labeling without the cut edges.
    let mut uf = UnionFind::new(nv);
    let cut_set: std::collections::BTreeSet<EdgeId> = cut.iter().copied().collect();
    for e in 0..ne {
        if !cut_set.contains(&e) {
            let ed = mesh.edge(e);
            uf.union(ed.a, ed.b);
        }
    }
    for &a in side_a {
        for &b in side_b {
            assert!(
                !uf.same(a, b),
                "max-flow produced a non-separating cut (internal invariant)"
            );
        }
    }

    let dual = dual_chain(mesh, &cut);
    Ok(Cut { edges: cut, dual })
}
