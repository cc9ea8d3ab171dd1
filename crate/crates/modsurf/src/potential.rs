//! Potential functions associated with an extremal density.
//!
//! Given a density ρ on the mesh, the potential of the first family is
//! `u(x) = min(1, dist_ρ(ζ₁, x))` where `dist_ρ` is shortest-path distance
//! in the edge weights `ρ(e)·length(e)`. For an admissible ρ the clip makes
//! `u = 1` on ζ₃ while `u = 0` on ζ₁, and by construction ρ is an upper
//! gradient of u: `|u(a) − u(b)| ≤ ρ(e)·length(e)` for every edge `e = ab`.
//!
//! The upper-gradient inequality here is exact in floating point, not up to
//! rounding. The construction quantizes each edge weight *down* to a dyadic
//! grid (multiples of [`Scalar::quantum`]) and caps it — and the distance
//! accumulation — at 2. Every distance the search stores is then a grid
//! multiple no larger than 4, so each addition, comparison, min, and the
//! final value difference is computed without rounding, and
//! `|u(a) − u(b)| ≤ quantized weight ≤ ρ(e)·length(e)` holds edge by edge
//! exactly as evaluated in the working precision. Capping at 2 changes no
//! value below the clip at 1.

use crate::graph::dijkstra_capped;
use crate::modulus::Density;
use crate::scalar::Scalar;
use crate::surface::{Arc, EdgeId, MetricMesh, QuadFrame, VertexId};
use crate::{Error, Result};

/// A vertex potential together with the density it was built from.
#[derive(Debug, Clone)]
pub struct PotentialField<T> {
    values: Vec<T>,
    density: Density<T>,
}

impl<T: Scalar> PotentialField<T> {
    /// Wraps externally supplied values (e.g. perturbed fields under test).
    /// Values must lie in `[0, 1]` and match the mesh the density came from.
    pub fn from_values(values: Vec<T>, density: Density<T>) -> Result<Self> {
        if values
            .iter()
            .any(|v| !(v.is_finite() && *v >= T::zero() && *v <= T::one()))
        {
            return Err(Error::InvalidInput(
                "potential values must lie in [0, 1]".into(),
            ));
        }
        Ok(PotentialField { values, density })
    }

    pub fn value(&self, v: VertexId) -> T {
        self.values[v]
    }

    pub fn values(&self) -> &[T] {
        self.values.as_slice()
    }

    pub fn density(&self) -> &Density<T> {
        &self.density
    }

    /// `ρ(e)·length(e)`, the edge weight the potential was built over.
    pub fn edge_weight(&self, mesh: &MetricMesh<T>, e: EdgeId) -> T {
        self.density.value(e) * mesh.edge(e).length
    }

    /// Edges where `|u(a) − u(b)| > ρ(e)·length(e)` holds in the working
    /// precision. Empty by construction.
    pub fn upper_gradient_violations(&self, mesh: &MetricMesh<T>) -> Vec<EdgeId> {
        let mut bad = Vec::new();
        for e in 0..mesh.edge_count() {
            let ed = mesh.edge(e);
            let jump = (self.values[ed.a] - self.values[ed.b]).abs();
            if jump > self.edge_weight(mesh, e) {
                bad.push(e);
            }
        }
        bad
    }

    /// Oscillation `max − min` of the potential over a vertex set.
    pub fn oscillation(&self, region: &[VertexId]) -> T {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in region {
            lo = lo.min(self.values[v]);
            hi = hi.max(self.values[v]);
        }
        if hi >= lo {
            hi - lo
        } else {
            T::zero()
        }
    }
}

/// Builds the clipped distance potential of the ζ₁→ζ₃ family from a
/// density: `u = min(1, dist_ρ(ζ₁, ·))`, with vertices unreachable from ζ₁
/// set to 1.
pub fn build_potential<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    density: &Density<T>,
) -> Result<PotentialField<T>> {
    if density.len() != mesh.edge_count() {
        return Err(Error::InvalidInput(format!(
            "density has {} entries for a mesh with {} edges",
            density.len(),
            mesh.edge_count()
        )));
    }
    let sources = frame.arc(Arc::Zeta1).to_vec();
    let q = T::quantum();
    let two = T::of(2.0);
    let weight = |e: EdgeId| {
        let w = density.value(e) * mesh.edge(e).length;
        (w.min(two) / q).floor() * q
    };
    let sp = dijkstra_capped(mesh, &sources, &weight, None, Some(two));
    let one = T::one();
    let values: Vec<T> = sp
        .dist
        .iter()
        .map(|d| match d {
            Some(v) => v.min(one),
            None => one,
        })
        .collect();

    Ok(PotentialField {
        values,
        density: density.clone(),
    })
}

/// Result of the discrete maximum-principle check on a subregion.
#[derive(Debug, Clone)]
pub struct MaxPrincipleReport<T> {
    pub region_max: T,
    pub region_min: T,
    pub boundary_max: T,
    pub boundary_min: T,
    /// `region_max ≤ boundary_max` (up to float guard).
    pub max_ok: bool,
    /// `region_min ≥ boundary_min` (up to float guard).
    pub min_ok: bool,
    pub holds: bool,
}

/// Checks that the potential attains its extremes over a vertex region Ω on
/// the effective boundary `∂*Ω`: vertices outside Ω adjacent to it, plus
/// vertices of Ω lying on ζ₁ or ζ₃ (where the potential is prescribed). A
/// `10⁻¹²`-scale guard absorbs float noise.
pub fn max_principle_check<T: Scalar>(
    mesh: &MetricMesh<T>,
    frame: &QuadFrame,
    potential: &PotentialField<T>,
    region: &[VertexId],
) -> Result<MaxPrincipleReport<T>> {
    if region.is_empty() {
        return Err(Error::InvalidInput("empty region".into()));
    }
    let mut inside = vec![false; mesh.vertex_count()];
    for &v in region {
        if v >= mesh.vertex_count() {
            return Err(Error::InvalidInput(format!("vertex {v} out of range")));
        }
        inside[v] = true;
    }
    let mut pinned = vec![false; mesh.vertex_count()];
    for arc in [Arc::Zeta1, Arc::Zeta3] {
        for &v in frame.arc(arc) {
            pinned[v] = true;
        }
    }

    let mut reg_lo = T::infinity();
    let mut reg_hi = T::neg_infinity();
    let mut bd_lo = T::infinity();
    let mut bd_hi = T::neg_infinity();
    let mut has_boundary = false;
    for &v in region {
        let u = potential.value(v);
        reg_lo = reg_lo.min(u);
        reg_hi = reg_hi.max(u);
        if pinned[v] {
            has_boundary = true;
            bd_lo = bd_lo.min(u);
            bd_hi = bd_hi.max(u);
        }
        for &(_, n) in mesh.neighbors(v) {
            if !inside[n] {
                has_boundary = true;
                bd_lo = bd_lo.min(potential.value(n));
                bd_hi = bd_hi.max(potential.value(n));
            }
        }
    }
    if !has_boundary {
        return Err(Error::InvalidInput(
            "region has empty effective boundary (covers the mesh but misses the marked arcs)"
                .into(),
        ));
    }

    let tol = T::of(1e-12).max(T::epsilon() * T::of(8.0));
    let max_ok = reg_hi <= bd_hi + tol;
    let min_ok = reg_lo >= bd_lo - tol;
    Ok(MaxPrincipleReport {
        region_max: reg_hi,
        region_min: reg_lo,
        boundary_max: bd_hi,
        boundary_min: bd_lo,
        max_ok,
        min_ok,
        holds: max_ok && min_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{solve_modulus, SolveOptions};
    use crate::surface::{build_rectangle, FamilySpec};

    fn extremal_potential(n: usize) -> (MetricMesh<f64>, QuadFrame, PotentialField<f64>) {
        let (mesh, frame) = build_rectangle(1.0_f64, 1.0, n).unwrap();
        let r = solve_modulus(
            &mesh,
            &FamilySpec::gamma1(),
            Some(&frame),
            &SolveOptions::default(),
        )
        .unwrap();
        let u = build_potential(&mesh, &frame, &r.density).unwrap();
        (mesh, frame, u)
    }

    #[test]
    fn boundary_values_and_linearity_on_square() {
        let (mesh, frame, u) = extremal_potential(4);
        for &v in frame.arc(Arc::Zeta1) {
            assert_eq!(u.value(v), 0.0);
        }
        for &v in frame.arc(Arc::Zeta3) {
            assert_eq!(u.value(v), 1.0);
        }
        // Extremal potential of the unit square is ≈ y.
        for v in 0..mesh.vertex_count() {
            let y = mesh.position(v)[1];
            assert!((u.value(v) - y).abs() < 1e-7, "u({v}) = {}", u.value(v));
        }
    }

    #[test]
    fn no_upper_gradient_violations() {
        let (mesh, _, u) = extremal_potential(5);
        assert!(u.upper_gradient_violations(&mesh).is_empty());
    }

    #[test]
    fn clip_keeps_unreachable_vertices_at_one() {
        let (mesh, frame) = build_rectangle(1.0_f64, 1.0, 2).unwrap();
        // Zero density: unreachable never happens, but distances are all 0.
        let rho = Density::zeros(mesh.edge_count());
        let u = build_potential(&mesh, &frame, &rho).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn max_principle_on_interior_regions() {
        let (mesh, frame, u) = extremal_potential(5);
        // Hand-picked block region in the interior.
        let region: Vec<_> = (0..mesh.vertex_count())
            .filter(|&v| {
                let p = mesh.position(v);
                p[0] > 0.1 && p[0] < 0.9 && p[1] > 0.1 && p[1] < 0.9
            })
            .collect();
        let rep = max_principle_check(&mesh, &frame, &u, &region).unwrap();
        assert!(rep.holds, "{rep:?}");
        // The whole mesh: every extreme is on ζ₁ ∪ ζ₃, which counts as
        // effective boundary.
        let all: Vec<_> = (0..mesh.vertex_count()).collect();
        let rep = max_principle_check(&mesh, &frame, &u, &all).unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn single_vertex_region_and_constructed_violation() {
        let (mesh, frame, u) = extremal_potential(5);
        // One interior vertex: its effective boundary is its neighbor set.
        let center = (0..mesh.vertex_count())
            .find(|&v| {
                let p = mesh.position(v);
                p[0] == 0.4 && p[1] == 0.4
            })
            .unwrap();
        let rep = max_principle_check(&mesh, &frame, &u, &[center]).unwrap();
        assert!(rep.holds, "{rep:?}");

        // Bump that vertex above all its neighbors: the check must fail.
        let mut vals = u.values().to_vec();
        vals[center] = (vals[center] + 0.3).min(1.0);
        let bumped = PotentialField::from_values(vals, u.density().clone()).unwrap();
        let rep = max_principle_check(&mesh, &frame, &bumped, &[center]).unwrap();
        assert!(!rep.max_ok);
        assert!(!rep.holds);
    }

    #[test]
    fn oscillation_of_linear_potential_matches_height() {
        let (mesh, _, u) = extremal_potential(4);
        let band: Vec<_> = (0..mesh.vertex_count())
            .filter(|&v| {
                let y = mesh.position(v)[1];
                (0.25..=0.75).contains(&y)
            })
            .collect();
        let osc = u.oscillation(&band);
        assert!((osc - 0.5).abs() < 1e-7, "osc = {osc}");
    }
}
