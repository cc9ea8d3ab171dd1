//! Level curves of a potential, realized as chains in the planar dual.
//!
//! A level value `t` selects the edges whose endpoint values straddle it
//! (`u(a) < t ≤ u(b)`). Those edges form an edge cut between `{u < t}` and
//! `{u ≥ t}`; organized by shared faces they become one or more dual
//! chains, the discrete stand-in for the level curve `u⁻¹(t)`. Its length
//! estimate is the sum of dual-edge lengths of the crossed edges, and a
//! weighted variant [`level_mass`] feeds the coarea checks.
//!
//! Levels colliding with a vertex value are nudged up by `10⁻¹²` (or a few
//! ulps if the scalar is coarser) until generic; the paper-side statements
//! hold for a.e. `t`, and the nudge picks the representative just above
//! deterministically.

use crate::potential::PotentialField;
use crate::scalar::Scalar;
use crate::surface::{dual_chain, Arc, DualChain, EdgeId, MetricMesh, QuadFrame};
use crate::{Error, Result};

/// One extracted level curve.
#[derive(Debug, Clone)]
pub struct LevelCurve<T> {
    /// Level actually used (after any collision nudge).
    pub level: T,
    /// Crossed edges, ascending by id.
    pub edges: Vec<EdgeId>,
    /// Dual organization of the crossed edges.
    pub chain: DualChain,
    /// `Σ` dual-edge length over the crossed edges.
    pub h1_estimate: T,
    /// Arc k is true when some crossed edge has both endpoints on ζ_{k+1}.
    pub meets: [bool; 4],
    /// True when no edge straddles the level (e.g. a constant field).
    pub degenerate: bool,
}

impl<T: Scalar> LevelCurve<T> {
    /// True when the crossed edges form exactly one dual chain.
    pub fn connected(&self) -> bool {
        self.chain.is_single_chain()
    }

    pub fn meets_arc(&self, arc: Arc) -> bool {
        self.meets[arc.index()]
    }
}

/// Extracts the level curve of `field` at `t ∈ (0, 1)`.
pub fn level_set<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    field: &PotentialField<T>,
    t: T,
) -> Result<LevelCurve<T>> {
    if !(t > T::zero() && t < T::one()) {
        return Err(Error::InvalidInput(format!(
            "level {t} outside the open interval (0, 1)"
        )));
    }
    let u = field.values();
    let nudge = T::of(1e-12).max(T::epsilon() * T::of(8.0));
    let mut level = t;
    for _ in 0..=mesh.vertex_count() {
        if u.iter().all(|&v| v != level) {
            break;
        }
        level += nudge;
    }

    let mut edges = Vec::new();
    for e in 0..mesh.edge_count() {
        let ed = mesh.edge(e);
        let (lo, hi) = if u[ed.a] <= u[ed.b] {
            (u[ed.a], u[ed.b])
        } else {
            (u[ed.b], u[ed.a])
        };
        if lo < level && level <= hi {
            edges.push(e);
        }
    }

    let chain = dual_chain(mesh, &edges);
    let mut h1 = T::zero();
    for &e in &edges {
        h1 += mesh.dual_edge_length(e);
    }

    let mut meets = [false; 4];
    for arc in Arc::ALL {
        let on = frame.arc_mask(arc, mesh.vertex_count());
        meets[arc.index()] = edges.iter().any(|&e| {
            let ed = mesh.edge(e);
            on[ed.a] && on[ed.b]
        });
    }

    Ok(LevelCurve {
        level,
        degenerate: edges.is_empty(),
        edges,
        chain,
        h1_estimate: h1,
        meets,
    })
}

/// `Σ g(e)·dual_edge_length(e)` over the crossed edges (ascending order).
pub fn level_mass<T: Scalar>(
    mesh: &MetricMesh<T>,
    curve: &LevelCurve<T>,
    g: &dyn Fn(EdgeId) -> T,
) -> T {
    let mut acc = T::zero();
    for &e in &curve.edges {
        acc += g(e) * mesh.dual_edge_length(e);
    }
    acc
}

/// Midpoints of the crossed edges in chain order, one polyline per dual
/// component — coordinates for plotting the level curve.
pub fn level_polylines<T: Scalar>(
    mesh: &MetricMesh<T>,
    curve: &LevelCurve<T>,
) -> Vec<Vec<[T; 2]>> {
    curve
        .chain
        .components
        .iter()
        .map(|comp| comp.iter().map(|&e| mesh.edge_midpoint(e)).collect())
        .collect()
}
