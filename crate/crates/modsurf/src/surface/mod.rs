//! Metric meshes, quadrilateral frames, and curve-family specifications.
//!
//! A [`MetricMesh`] is a 2-complex with per-edge lengths and per-face areas
//! that may be zero (degenerate regions collapsed at mesh scale). Reference
//! coordinates are carried for construction and reporting only — all
//! computations use the stored lengths and areas, never the coordinates.
//!
//! The quadrature weight of an edge is `edge_area(e) = ½·Σ area(F)` over the
//! faces adjacent to `e`. On a quad grid this makes each orientation class of
//! edges carry exactly the total surface area, which is the normalization
//! under which the discrete modulus of a `w×h` rectangle converges to `w/h`.

mod build;
mod cut;

pub use build::{build_collapsed_disk, build_conformal, build_rectangle, disk_rect_area};
pub use cut::{separating_cut, Cut};

use crate::graph::{self};
use crate::scalar::Scalar;
use crate::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

/// Undirected mesh edge with an intrinsic length (zero allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub a: VertexId,
    pub b: VertexId,
    pub length: T,
}

/// Mesh face: a simple vertex cycle with an intrinsic area (zero allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct Face<T> {
    pub vertices: Vec<VertexId>,
    pub area: T,
}

/// Metric mesh with derived adjacency, edge/face incidence, and quadrature
/// weights.
#[derive(Debug, Clone)]
pub struct MetricMesh<T> {
    vertices: Vec<[T; 2]>,
    edges: Vec<Edge<T>>,
    faces: Vec<Face<T>>,
    edge_area: Vec<T>,
    adjacency: Vec<Vec<(EdgeId, VertexId)>>,
    edge_faces: Vec<[Option<FaceId>; 2]>,
}

impl<T: Scalar> MetricMesh<T> {
    /// Validates and assembles a mesh from raw vertex/edge/face data.
    pub fn new(
        vertices: Vec<[T; 2]>,
        edges: Vec<(VertexId, VertexId, T)>,
        faces: Vec<(Vec<VertexId>, T)>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if nv == 0 {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }

        let mut edge_structs = Vec::with_capacity(edges.len());
        let mut pair_to_edge = std::collections::BTreeMap::new();
        for (idx, &(a, b, length)) in edges.iter().enumerate() {
            if a >= nv || b >= nv {
                return Err(Error::InvalidMesh(format!(
                    "edge {idx} references vertex out of range"
                )));
            }
            if a == b {
                return Err(Error::InvalidMesh(format!("edge {idx} is a self-loop")));
            }
            if !(length.is_finite() && length >= T::zero()) {
                return Err(Error::InvalidMesh(format!(
                    "edge {idx} has negative or non-finite length"
                )));
            }
            let key = (a.min(b), a.max(b));
            if pair_to_edge.insert(key, idx).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "duplicate edge between vertices {} and {}",
                    key.0, key.1
                )));
            }
            edge_structs.push(Edge { a, b, length });
        }

        let mut edge_faces: Vec<[Option<FaceId>; 2]> = vec![[None, None]; edge_structs.len()];
        let mut face_structs = Vec::with_capacity(faces.len());
        for (fidx, (cycle, area)) in faces.into_iter().enumerate() {
            if cycle.len() < 3 {
                return Err(Error::InvalidMesh(format!(
                    "face {fidx} has fewer than 3 vertices"
                )));
            }
            if !(area.is_finite() && area >= T::zero()) {
                return Err(Error::InvalidMesh(format!(
                    "face {fidx} has negative or non-finite area"
                )));
            }
            let mut seen = cycle.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != cycle.len() {
                return Err(Error::InvalidMesh(format!(
                    "face {fidx} repeats a vertex in its cycle"
                )));
            }
            for k in 0..cycle.len() {
                let a = cycle[k];
                let b = cycle[(k + 1) % cycle.len()];
                if a >= nv || b >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "face {fidx} references vertex out of range"
                    )));
                }
                let e = *pair_to_edge.get(&(a.min(b), a.max(b))).ok_or_else(|| {
                    Error::InvalidMesh(format!(
                        "face {fidx} side ({a},{b}) is not a mesh edge"
                    ))
                })?;
                let slots = &mut edge_faces[e];
                if slots[0].is_none() {
                    slots[0] = Some(fidx);
                } else if slots[1].is_none() {
                    slots[1] = Some(fidx);
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge {e} belongs to more than two faces"
                    )));
                }
            }
            face_structs.push(Face {
                vertices: cycle,
                area,
            });
        }

        // Quadrature weight: half of each adjacent face's area.
        let half = T::of(0.5);
        let mut edge_area = vec![T::zero(); edge_structs.len()];
        for (e, slots) in edge_faces.iter().enumerate() {
            for f in slots.iter().flatten() {
                edge_area[e] += half * face_structs[*f].area;
            }
        }

        let mut adjacency: Vec<Vec<(EdgeId, VertexId)>> = vec![Vec::new(); nv];
        for (e, ed) in edge_structs.iter().enumerate() {
            adjacency[ed.a].push((e, ed.b));
            adjacency[ed.b].push((e, ed.a));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(e, v)| (v, e));
        }

        Ok(MetricMesh {
            vertices,
            edges: edge_structs,
            faces: face_structs,
            edge_area,
            adjacency,
            edge_faces,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
    pub fn position(&self, v: VertexId) -> [T; 2] {
        self.vertices[v]
    }
    pub fn edge(&self, e: EdgeId) -> &Edge<T> {
        &self.edges[e]
    }
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }
    pub fn face(&self, f: FaceId) -> &Face<T> {
        &self.faces[f]
    }
    pub fn faces(&self) -> &[Face<T>] {
        &self.faces
    }
    pub fn edge_area(&self, e: EdgeId) -> T {
        self.edge_area[e]
    }
    pub fn edge_areas(&self) -> &[T] {
        &self.edge_area
    }
    pub fn neighbors(&self, v: VertexId) -> &[(EdgeId, VertexId)] {
        &self.adjacency[v]
    }
    pub fn edge_faces(&self, e: EdgeId) -> [Option<FaceId>; 2] {
        self.edge_faces[e]
    }
    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.edge_faces[e][0].is_some() && self.edge_faces[e][1].is_none()
    }
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let ed = &self.edges[e];
        if ed.a == v {
            ed.b
        } else {
            ed.a
        }
    }
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.adjacency[a]
            .iter()
            .find(|&&(_, v)| v == b)
            .map(|&(e, _)| e)
    }

    pub fn total_face_area(&self) -> T {
        self.faces.iter().map(|f| f.area).sum()
    }

    pub fn total_edge_length(&self) -> T {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Smallest strictly positive edge length, if any edge has one.
    pub fn min_positive_edge_length(&self) -> Option<T> {
        self.edges
            .iter()
            .map(|e| e.length)
            .filter(|&l| l > T::zero())
            .fold(None, |acc, l| match acc {
                None => Some(l),
                Some(m) => Some(if l < m { l } else { m }),
            })
    }

    /// Midpoint of an edge in reference coordinates.
    pub fn edge_midpoint(&self, e: EdgeId) -> [T; 2] {
        let ed = &self.edges[e];
        let (p, q) = (self.vertices[ed.a], self.vertices[ed.b]);
        let half = T::of(0.5);
        [(p[0] + q[0]) * half, (p[1] + q[1]) * half]
    }

    /// Centroid of a face in reference coordinates.
    pub fn face_centroid(&self, f: FaceId) -> [T; 2] {
        let face = &self.faces[f];
        let mut c = [T::zero(); 2];
        for &v in &face.vertices {
            c[0] += self.vertices[v][0];
            c[1] += self.vertices[v][1];
        }
        let n = T::of(face.vertices.len() as f64);
        [c[0] / n, c[1] / n]
    }

    /// Length of the edge in the planar dual: `edge_area / length`, i.e.
    /// half the adjacent face areas per unit of edge length. Boundary faces
    /// are counted once; zero-length edges contribute zero.
    pub fn dual_edge_length(&self, e: EdgeId) -> T {
        let l = self.edges[e].length;
        if l > T::zero() {
            self.edge_area[e] / l
        } else {
            T::zero()
        }
    }

    /// Graph distances (edge lengths as weights) from a source set.
    pub fn length_distances(&self, sources: &[VertexId]) -> Vec<Option<T>> {
        graph::dijkstra(self, sources, &|e| self.edges[e].length, None).dist
    }

    /// Metric ball: all vertices within graph distance `r` of `center`,
    /// sorted by id. Always contains the center.
    pub fn ball(&self, center: VertexId, r: T) -> Vec<VertexId> {
        assert!(r >= T::zero(), "ball radius must be nonnegative");
        self.length_distances(&[center])
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(d) if *d <= r))
            .map(|(v, _)| v)
            .collect()
    }

    /// Ids of all boundary edges (exactly one adjacent face).
    pub fn boundary_edges(&self) -> Vec<EdgeId> {
        (0..self.edge_count())
            .filter(|&e| self.is_boundary_edge(e))
            .collect()
    }
}

// ============================================================================
// Dual-graph organization of edge sets
// ============================================================================

/// A set of mesh edges organized in the planar dual: two edges are adjacent
/// when they lie on a common face (the outer region does not connect edges).
#[derive(Debug, Clone)]
pub struct DualChain {
    /// Dual components; each is walked into order when it is a simple chain
    /// or cycle, otherwise listed by ascending edge id.
    pub components: Vec<Vec<EdgeId>>,
    /// True when no face carries more than two of the edges, so every
    /// component is a simple open chain or a simple cycle.
    pub simple: bool,
}

impl DualChain {
    pub fn is_single_chain(&self) -> bool {
        self.components.len() == 1 && self.simple
    }

    pub fn edge_count(&self) -> usize {
        self.components.iter().map(|c| c.len()).sum()
    }
}

/// Groups `edges` into dual components and orders each component by walking
/// the dual adjacency. Deterministic: walks start at the smallest edge id
/// with an open end (or the smallest id on a cycle).
pub fn dual_chain<T: Scalar>(mesh: &MetricMesh<T>, edges: &[EdgeId]) -> DualChain {
    use std::collections::BTreeMap;

    let mut ids: Vec<EdgeId> = edges.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return DualChain {
            components: Vec::new(),
            simple: true,
        };
    }

    let mut face_bag: BTreeMap<FaceId, Vec<usize>> = BTreeMap::new();
    for (k, &e) in ids.iter().enumerate() {
        for f in mesh.edge_faces(e).iter().flatten() {
            face_bag.entry(*f).or_default().push(k);
        }
    }
    let simple = face_bag.values().all(|bag| bag.len() <= 2);

    let mut uf = graph::UnionFind::new(ids.len());
    for bag in face_bag.values() {
        for w in bag.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..ids.len() {
        let root = uf.find(k);
        groups.entry(root).or_default().push(k);
    }

    let components = groups
        .into_values()
        .map(|members| {
            if !simple {
                return members.iter().map(|&k| ids[k]).collect();
            }
            // Open end: a face slot holding only this edge, or a missing
            // (outer) face on a boundary edge.
            let partner = |k: usize, f: Option<FaceId>| -> Option<usize> {
                let f = f?;
                face_bag
                    .get(&f)
                    .and_then(|bag| bag.iter().copied().find(|&m| m != k))
            };
            let has_open_end = |k: usize| -> bool {
                let fs = mesh.edge_faces(ids[k]);
                fs.iter().any(|f| partner(k, *f).is_none())
            };
            let start = members
                .iter()
                .copied()
                .find(|&k| has_open_end(k))
                .unwrap_or(members[0]);
            let mut order = vec![start];
            let mut visited = vec![false; ids.len()];
            visited[start] = true;
            // Leave through the open end's opposite port first.
            let fs = mesh.edge_faces(ids[start]);
            let mut next = fs
                .iter()
                .filter_map(|f| partner(start, *f))
                .find(|&m| !visited[m]);
            while let Some(k) = next {
                visited[k] = true;
                order.push(k);
                let fs = mesh.edge_faces(ids[k]);
                next = fs
                    .iter()
                    .filter_map(|f| partner(k, *f))
                    .find(|&m| !visited[m]);
            }
            debug_assert_eq!(order.len(), members.len());
            order.into_iter().map(|k| ids[k]).collect()
        })
        .collect();

    DualChain { components, simple }
}

// ============================================================================
// Quadrilateral frame
// ============================================================================

/// One of the four boundary arcs of a quadrilateral, in cyclic order.
/// `Zeta1`/`Zeta3` are the opposite pair joined by the first curve family,
/// `Zeta2`/`Zeta4` the pair joined by the conjugate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arc {
    Zeta1 = 0,
    Zeta2 = 1,
    Zeta3 = 2,
    Zeta4 = 3,
}

impl Arc {
    pub const ALL: [Arc; 4] = [Arc::Zeta1, Arc::Zeta2, Arc::Zeta3, Arc::Zeta4];
    pub fn index(self) -> usize {
        self as usize
    }
    pub fn name(self) -> &'static str {
        ["zeta1", "zeta2", "zeta3", "zeta4"][self.index()]
    }
}

/// Four boundary arcs marking a quadrilateral on a mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadFrame {
    arcs: [Vec<VertexId>; 4],
}

impl QuadFrame {
    /// Validates the four arcs against a mesh: each arc is a simple vertex
    /// path of boundary edges with at least two vertices, consecutive arcs
    /// share exactly one endpoint (in cyclic order), and together the arcs
    /// cover every boundary edge exactly once.
    pub fn new<T: Scalar>(mesh: &MetricMesh<T>, arcs: [Vec<VertexId>; 4]) -> Result<Self> {
        let mut used_edges = std::collections::BTreeSet::new();
        for (k, arc) in arcs.iter().enumerate() {
            if arc.len() < 2 {
                return Err(Error::InvalidFrame(format!(
                    "arc zeta{} has fewer than two vertices",
                    k + 1
                )));
            }
            let mut sorted = arc.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != arc.len() {
                return Err(Error::InvalidFrame(format!(
                    "arc zeta{} repeats a vertex",
                    k + 1
                )));
            }
            for w in arc.windows(2) {
                let e = mesh.edge_between(w[0], w[1]).ok_or_else(|| {
                    Error::InvalidFrame(format!(
                        "arc zeta{} step ({},{}) is not a mesh edge",
                        k + 1,
                        w[0],
                        w[1]
                    ))
                })?;
                if !mesh.is_boundary_edge(e) {
                    return Err(Error::InvalidFrame(format!(
                        "arc zeta{} uses interior edge {}",
                        k + 1,
                        e
                    )));
                }
                if !used_edges.insert(e) {
                    return Err(Error::InvalidFrame(format!(
                        "boundary edge {e} appears in two arcs"
                    )));
                }
            }
        }
        for k in 0..4 {
            let cur = &arcs[k];
            let next = &arcs[(k + 1) % 4];
            if cur[cur.len() - 1] != next[0] {
                return Err(Error::InvalidFrame(format!(
                    "arcs zeta{} and zeta{} do not meet at a shared corner",
                    k + 1,
                    (k + 1) % 4 + 1
                )));
            }
            let shared = cur.iter().filter(|v| next.contains(v)).count();
            if shared != 1 {
                return Err(Error::InvalidFrame(format!(
                    "arcs zeta{} and zeta{} share {} vertices (want exactly 1)",
                    k + 1,
                    (k + 1) % 4 + 1,
                    shared
                )));
            }
            let opposite = &arcs[(k + 2) % 4];
            if cur.iter().any(|v| opposite.contains(v)) {
                return Err(Error::InvalidFrame(format!(
                    "opposite arcs zeta{} and zeta{} intersect",
                    k + 1,
                    (k + 2) % 4 + 1
                )));
            }
        }
        let boundary = mesh.boundary_edges();
        if used_edges.len() != boundary.len() {
            return Err(Error::InvalidFrame(format!(
                "arcs cover {} of {} boundary edges",
                used_edges.len(),
                boundary.len()
            )));
        }
        Ok(QuadFrame { arcs })
    }

    pub fn arc(&self, a: Arc) -> &[VertexId] {
        &self.arcs[a.index()]
    }

    pub fn arcs(&self) -> &[Vec<VertexId>; 4] {
        &self.arcs
    }

    /// Membership mask for one arc's vertices.
    pub fn arc_mask(&self, a: Arc, vertex_count: usize) -> Vec<bool> {
        let mut mask = vec![false; vertex_count];
        for &v in self.arc(a) {
            mask[v] = true;
        }
        mask
    }
}

// ============================================================================
// Curve families
// ============================================================================

/// Endpoint set of a curve family: a frame arc or an explicit vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexSel {
    Arc(Arc),
    Set(Vec<VertexId>),
}

/// A family of curves joining `source` to `sink` while staying inside
/// `ambient` (the whole mesh when absent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub source: VertexSel,
    pub sink: VertexSel,
    pub ambient: Option<Vec<VertexId>>,
}

/// Family resolved against a mesh and frame: concrete endpoint sets plus an
/// optional ambient mask.
#[derive(Debug, Clone)]
pub struct ResolvedFamily {
    pub sources: Vec<VertexId>,
    pub sinks: Vec<VertexId>,
    pub allowed: Option<Vec<bool>>,
}

impl FamilySpec {
    /// The family joining `zeta1` to `zeta3` across the quadrilateral.
    pub fn gamma1() -> Self {
        FamilySpec {
            source: VertexSel::Arc(Arc::Zeta1),
            sink: VertexSel::Arc(Arc::Zeta3),
            ambient: None,
        }
    }

    /// The conjugate family joining `zeta2` to `zeta4`.
    pub fn gamma2() -> Self {
        FamilySpec {
            source: VertexSel::Arc(Arc::Zeta2),
            sink: VertexSel::Arc(Arc::Zeta4),
            ambient: None,
        }
    }

    /// A family with explicit endpoint sets (used for ring families).
    pub fn connecting(
        source: Vec<VertexId>,
        sink: Vec<VertexId>,
        ambient: Option<Vec<VertexId>>,
    ) -> Self {
        FamilySpec {
            source: VertexSel::Set(source),
            sink: VertexSel::Set(sink),
            ambient,
        }
    }

    /// Resolves arcs through the frame and intersects endpoints with the
    /// ambient set. Source and sink must be disjoint and nonempty before
    /// ambient restriction.
    pub fn resolve<T: Scalar>(
        &self,
        mesh: &MetricMesh<T>,
        frame: Option<&QuadFrame>,
    ) -> Result<ResolvedFamily> {
        let nv = mesh.vertex_count();
        let pick = |sel: &VertexSel| -> Result<Vec<VertexId>> {
            let mut set = match sel {
                VertexSel::Arc(a) => frame
                    .ok_or_else(|| {
                        Error::InvalidFamily("arc endpoint requires a frame".into())
                    })?
                    .arc(*a)
                    .to_vec(),
                VertexSel::Set(vs) => vs.clone(),
            };
            set.sort_unstable();
            set.dedup();
            if set.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidFamily(
                    "endpoint set references vertex out of range".into(),
                ));
            }
            if set.is_empty() {
                return Err(Error::InvalidFamily("empty endpoint set".into()));
            }
            Ok(set)
        };
        let mut sources = pick(&self.source)?;
        let mut sinks = pick(&self.sink)?;
        if sources.iter().any(|v| sinks.binary_search(v).is_ok()) {
            return Err(Error::InvalidFamily(
                "source and sink sets intersect".into(),
            ));
        }
        let allowed = match &self.ambient {
            None => None,
            Some(set) => {
                let mut mask = vec![false; nv];
                for &v in set {
                    if v >= nv {
                        return Err(Error::InvalidFamily(
                            "ambient set references vertex out of range".into(),
                        ));
                    }
                    mask[v] = true;
                }
                sources.retain(|&v| mask[v]);
                sinks.retain(|&v| mask[v]);
                Some(mask)
            }
        };
        Ok(ResolvedFamily {
            sources,
            sinks,
            allowed,
        })
    }
}
