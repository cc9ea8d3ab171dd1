//! Path machinery on edge subgraphs: injective shortest paths and the
//! multiplicity-≤2 covering walk.
//!
//! Both operations see a subgraph as a set of edge ids; vertices are those
//! incident to the set. [`extract_path`] returns the deterministic shortest
//! injective path between two vertices inside the subgraph — its length
//! never exceeds the subgraph's total length. [`double_traversal`] produces
//! a walk from `x` to `y` covering *every* subgraph edge: it starts from
//! the geodesic x→y and repeatedly splices in a doubled detour (out and
//! back along a shortest connector) to the unvisited edge farthest from
//! the already-visited vertex set. Connector edges are necessarily fresh,
//! so every edge is traversed at most twice and the total length is at
//! most `2·ℋ¹(subgraph) − d(x,y)`.

use std::collections::BTreeSet;

use crate::graph::{best_target, dijkstra_filtered};
use crate::scalar::Scalar;
use crate::surface::{EdgeId, MetricMesh, VertexId};
use crate::{Error, Result};

/// A walk on the mesh: consecutive vertices joined by the listed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePath<T> {
    /// `edges.len() + 1` vertices, walk order.
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    /// Σ edge lengths in walk order.
    pub length: T,
    /// True when no vertex repeats.
    pub injective: bool,
}

impl<T: Scalar> CurvePath<T> {
    fn from_walk(mesh: &MetricMesh<T>, vertices: Vec<VertexId>, edges: Vec<EdgeId>) -> Self {
        debug_assert_eq!(vertices.len(), edges.len() + 1);
        let mut length = T::zero();
        for &e in &edges {
            length += mesh.edge(e).length;
        }
        let distinct: BTreeSet<_> = vertices.iter().collect();
        CurvePath {
            injective: distinct.len() == vertices.len(),
            vertices,
            edges,
            length,
        }
    }

    /// How many times each mesh edge occurs in the walk.
    pub fn multiplicities(&self, mesh: &MetricMesh<T>) -> Vec<usize> {
        let mut m = vec![0usize; mesh.edge_count()];
        for &e in &self.edges {
            m[e] += 1;
        }
        m
    }
}

fn subgraph_mask<T: Scalar>(mesh: &MetricMesh<T>, subgraph: &[EdgeId]) -> Result<Vec<bool>> {
    let mut mask = vec![false; mesh.edge_count()];
    for &e in subgraph {
        if e >= mesh.edge_count() {
            return Err(Error::InvalidInput(format!("edge {e} out of range")));
        }
        mask[e] = true;
    }
    Ok(mask)
}

fn in_subgraph<T: Scalar>(mesh: &MetricMesh<T>, mask: &[bool], v: VertexId) -> bool {
    v < mesh.vertex_count() && mesh.neighbors(v).iter().any(|&(e, _)| mask[e])
}

/// Deterministic shortest injective path from `x` to `y` using only
/// subgraph edges. `x == y` yields the empty path.
pub fn extract_path<T: Scalar>(
    mesh: &MetricMesh<T>,
    subgraph: &[EdgeId],
    x: VertexId,
    y: VertexId,
) -> Result<CurvePath<T>> {
    let mask = subgraph_mask(mesh, subgraph)?;
    if x == y {
        if !in_subgraph(mesh, &mask, x) && !subgraph.is_empty() {
            return Err(Error::InvalidInput(format!(
                "vertex {x} not incident to the subgraph"
            )));
        }
        return Ok(CurvePath::from_walk(mesh, vec![x], Vec::new()));
    }
    for v in [x, y] {
        if !in_subgraph(mesh, &mask, v) {
            return Err(Error::InvalidInput(format!(
                "vertex {v} not incident to the subgraph"
            )));
        }
    }
    let sp = dijkstra_filtered(mesh, &[x], &|e| mesh.edge(e).length, None, Some(&mask));
    if sp.dist[y].is_none() {
        return Err(Error::InvalidInput(format!(
            "vertices {x} and {y} lie in different subgraph components"
        )));
    }
    let path = CurvePath::from_walk(mesh, sp.path_vertices(y), sp.path_edges(y));
    debug_assert!(path.injective);
    Ok(path)
}

/// Walk from `x` to `y` covering every edge of the connected subgraph, with
/// per-edge multiplicity ≤ 2 and length ≤ 2·ℋ¹(subgraph).
pub fn double_traversal<T: Scalar>(
    mesh: &MetricMesh<T>,
    subgraph: &[EdgeId],
    x: VertexId,
    y: VertexId,
) -> Result<CurvePath<T>> {
    let mask = subgraph_mask(mesh, subgraph)?;
    let todo: Vec<EdgeId> = {
        let mut s: Vec<EdgeId> = subgraph.to_vec();
        s.sort_unstable();
        s.dedup();
        s
    };
    if todo.is_empty() {
        return Err(Error::InvalidInput("empty subgraph".into()));
    }

    // Walk state: vertex sequence + edge sequence, spliced in place.
    let base = extract_path(mesh, subgraph, x, y)?;
    let mut verts = base.vertices;
    let mut edges = base.edges;
    let mut edge_visited = vec![false; mesh.edge_count()];
    let mut vertex_visited = vec![false; mesh.vertex_count()];
    for &e in &edges {
        edge_visited[e] = true;
    }
    for &v in &verts {
        vertex_visited[v] = true;
    }

    loop {
        let visited: Vec<VertexId> = (0..mesh.vertex_count())
            .filter(|&v| vertex_visited[v])
            .collect();
        // Distances from the visited set through subgraph edges; the
        // farthest unvisited edge (by distance to its nearer endpoint,
        // then by id) is the next detour target.
        let sp = dijkstra_filtered(
            mesh,
            &visited,
            &|e| mesh.edge(e).length,
            None,
            Some(&mask),
        );
        let mut target: Option<(T, EdgeId, VertexId)> = None;
        for &e in &todo {
            if edge_visited[e] {
                continue;
            }
            let ed = mesh.edge(e);
            let near = match best_target(&sp, &[ed.a, ed.b]) {
                Some(v) => v,
                None => {
                    return Err(Error::InvalidInput(
                        "subgraph is not connected".into(),
                    ))
                }
            };
            let d = sp.dist[near].expect("best_target is reached");
            let better = match &target {
                None => true,
                Some((bd, be, _)) => d > *bd || (d == *bd && e < *be),
            };
            if better {
                target = Some((d, e, near));
            }
        }
        let (_, e_far, near) = match target {
            Some(t) => t,
            None => break, // everything covered
        };

        // Detour: connector from the visited set to `near`, across the far
        // edge, and back the same way. Connector interiors are unvisited
        // vertices, so every detour edge is fresh.
        let conn_v = sp.path_vertices(near);
        let conn_e = sp.path_edges(near);
        let anchor = conn_v[0];
        let far_end = mesh.other_end(e_far, near);
        let mut det_v: Vec<VertexId> = conn_v[1..].to_vec();
        det_v.push(far_end);
        let mut det_e = conn_e.clone();
        det_e.push(e_far);
        // Mirror back (skip the turning point itself).
        let mut back_v: Vec<VertexId> = det_v.iter().rev().skip(1).cloned().collect();
        back_v.push(anchor);
        let back_e: Vec<EdgeId> = det_e.iter().rev().cloned().collect();

        for &e in &det_e {
            debug_assert!(!edge_visited[e], "detour reuses a visited edge");
            edge_visited[e] = true;
        }
        for &v in &det_v {
            vertex_visited[v] = true;
        }

        // Splice at the first occurrence of the anchor vertex.
        let at = verts
            .iter()
            .position(|&v| v == anchor)
            .expect("anchor lies on the walk");
        let mut ins_v = det_v;
        ins_v.extend(back_v);
        let mut ins_e = det_e;
        ins_e.extend(back_e);
        verts.splice(at + 1..at + 1, ins_v);
        edges.splice(at..at, ins_e);
    }

    let walk = CurvePath::from_walk(mesh, verts, edges);
    debug_assert!(walk.vertices.first() == Some(&x) && walk.vertices.last() == Some(&y));
    Ok(walk)
}
