//! Mesh builders for the experiment zoo: Euclidean rectangles, smooth
//! conformal reweightings of rectangles, and the collapsed-disk surface.
//!
//! All builders produce axis-aligned quad grids with `n` cells per unit of
//! reference length, deterministic vertex/edge/face enumeration, and a
//! quadrilateral frame whose arcs are bottom, right, top, left in cyclic
//! order.

use super::{MetricMesh, QuadFrame, VertexId};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Grid index helpers shared by the builders.
struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    fn new(width: f64, height: f64, n: usize) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::InvalidInput(
                "rectangle sides must be positive and finite".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidInput("resolution must be at least 1".into()));
        }
        let nx = (width * n as f64).round().max(1.0) as usize;
        let ny = (height * n as f64).round().max(1.0) as usize;
        Ok(Grid { nx, ny })
    }

    fn vertex(&self, i: usize, j: usize) -> VertexId {
        j * (self.nx + 1) + i
    }

    fn frame_arcs(&self) -> [Vec<VertexId>; 4] {
        let (nx, ny) = (self.nx, self.ny);
        let bottom: Vec<_> = (0..=nx).map(|i| self.vertex(i, 0)).collect();
        let right: Vec<_> = (0..=ny).map(|j| self.vertex(nx, j)).collect();
        let top: Vec<_> = (0..=nx).rev().map(|i| self.vertex(i, ny)).collect();
        let left: Vec<_> = (0..=ny).rev().map(|j| self.vertex(0, j)).collect();
        [bottom, right, top, left]
    }
}

/// Builds a grid mesh over `[0,width]×[0,height]` where each edge length and
/// face area is produced by the supplied closures from reference geometry.
fn build_grid<T: Scalar>(
    grid: &Grid,
    width: T,
    height: T,
    mut edge_metric: impl FnMut([T; 2], [T; 2], T) -> T,
    mut face_metric: impl FnMut([T; 2], T) -> T,
) -> Result<(MetricMesh<T>, QuadFrame)> {
    let (nx, ny) = (grid.nx, grid.ny);
    let dx = width / T::of(nx as f64);
    let dy = height / T::of(ny as f64);

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([dx * T::of(i as f64), dy * T::of(j as f64)]);
        }
    }

    let mut edges = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = vertices[grid.vertex(i, j)];
            if i < nx {
                let q = vertices[grid.vertex(i + 1, j)];
                edges.push((grid.vertex(i, j), grid.vertex(i + 1, j), edge_metric(p, q, dx)));
            }
            if j < ny {
                let q = vertices[grid.vertex(i, j + 1)];
                edges.push((grid.vertex(i, j), grid.vertex(i, j + 1), edge_metric(p, q, dy)));
            }
        }
    }

    let half = T::of(0.5);
    let cell = dx * dy;
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cycle = vec![
                grid.vertex(i, j),
                grid.vertex(i + 1, j),
                grid.vertex(i + 1, j + 1),
                grid.vertex(i, j + 1),
            ];
            let c = [
                dx * (T::of(i as f64) + half),
                dy * (T::of(j as f64) + half),
            ];
            faces.push((cycle, face_metric(c, cell)));
        }
    }

    let mesh = MetricMesh::new(vertices, edges, faces)?;
    let frame = QuadFrame::new(&mesh, grid.frame_arcs())?;
    Ok((mesh, frame))
}

/// Euclidean `width × height` rectangle sampled with `n` grid cells per unit
/// length. The first curve family of the frame joins the two `width` sides.
pub fn build_rectangle<T: Scalar>(
    width: T,
    height: T,
    n: usize,
) -> Result<(MetricMesh<T>, QuadFrame)> {
    let grid = Grid::new(width.to_f64().unwrap(), height.to_f64().unwrap(), n)?;
    build_grid(
        &grid,
        width,
        height,
        |_, _, base| base,
        |_, base| base,
    )
}

/// Rectangle reweighted by a smooth positive conformal factor: edge lengths
/// are scaled by the weight at the edge midpoint, face areas by the squared
/// weight at the face centroid.
pub fn build_conformal<T: Scalar>(
    width: T,
    height: T,
    n: usize,
    weight: impl Fn(T, T) -> T,
) -> Result<(MetricMesh<T>, QuadFrame)> {
    let grid = Grid::new(width.to_f64().unwrap(), height.to_f64().unwrap(), n)?;
    let half = T::of(0.5);
    let bad = std::cell::Cell::new(false);
    let sample = |x: T, y: T| -> T {
        let w = weight(x, y);
        if !(w.is_finite() && w > T::zero()) {
            bad.set(true);
        }
        w
    };
    let result = build_grid(
        &grid,
        width,
        height,
        |p, q, base| {
            let w = sample((p[0] + q[0]) * half, (p[1] + q[1]) * half);
            base * w
        },
        |c, base| {
            let w = sample(c[0], c[1]);
            base * w * w
        },
    )?;
    if bad.get() {
        return Err(Error::InvalidInput(
            "conformal weight must be positive and finite on the rectangle".into(),
        ));
    }
    Ok(result)
}

/// Square `[-s, s]²` with the concentric disk of radius `collapse_radius`
/// collapsed to a point at mesh scale: edges keep only the length of their
/// portion outside the disk, faces keep only the area outside the disk.
/// The disk must sit strictly inside the square.
pub fn build_collapsed_disk<T: Scalar>(
    outer_half_width: T,
    n: usize,
    collapse_radius: T,
) -> Result<(MetricMesh<T>, QuadFrame)> {
    let s = outer_half_width;
    let r = collapse_radius;
    if !(r > T::zero() && r < s) {
        return Err(Error::InvalidInput(
            "collapse radius must be positive and strictly inside the square".into(),
        ));
    }
    let side = s + s;
    let grid = Grid::new(side.to_f64().unwrap(), side.to_f64().unwrap(), n)?;
    let (mesh, frame) = build_grid(
        &grid,
        side,
        side,
        |p, q, _| segment_length_outside_disk([p[0] - s, p[1] - s], [q[0] - s, q[1] - s], r),
        |c, base| {
            let h = base.sqrt(); // square cells: base = h·h
            let half = T::of(0.5);
            let (x0, x1) = (c[0] - s - half * h, c[0] - s + half * h);
            let (y0, y1) = (c[1] - s - half * h, c[1] - s + half * h);
            let inside = disk_rect_area(r, x0, x1, y0, y1);
            (base - inside).max(T::zero())
        },
    )?;
    Ok((mesh, frame))
}

// ============================================================================
// Exact disk clipping
// ============================================================================

/// Length of the part of segment `p→q` lying outside the open disk of radius
/// `r` centered at the origin.
pub(crate) fn segment_length_outside_disk<T: Scalar>(p: [T; 2], q: [T; 2], r: T) -> T {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let len = len2.sqrt();
    if len == T::zero() {
        return T::zero();
    }
    // |p + t·d|² = r²  ⇒  len²·t² + 2(p·d)t + |p|² − r² = 0
    let b = p[0] * d[0] + p[1] * d[1];
    let c = p[0] * p[0] + p[1] * p[1] - r * r;
    let disc = b * b - len2 * c;
    if disc <= T::zero() {
        return len; // no chord: entirely outside (tangent counts as outside)
    }
    let sq = disc.sqrt();
    let t0 = ((-b - sq) / len2).max(T::zero());
    let t1 = ((-b + sq) / len2).min(T::one());
    let inside_frac = (t1 - t0).max(T::zero());
    len * (T::one() - inside_frac)
}

/// Exact area of the intersection of the disk of radius `r` centered at the
/// origin with the axis-aligned rectangle `[x0,x1]×[y0,y1]`.
pub fn disk_rect_area<T: Scalar>(r: T, x0: T, x1: T, y0: T, y1: T) -> T {
    assert!(x0 <= x1 && y0 <= y1, "rectangle bounds must be ordered");
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b {
        return T::zero();
    }
    // Antiderivative of the circle's upper half: ∫√(r²−u²) du.
    let upper = |u: T| -> T {
        let uu = (r * r - u * u).max(T::zero());
        (u * uu.sqrt() + r * r * (u / r).max(-T::one()).min(T::one()).asin()) * T::of(0.5)
    };
    // Breakpoints where the clamped top/bottom profiles change formula.
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let u = (r * r - y * y).sqrt();
            for c in [-u, u] {
                if c > a && c < b {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).expect("finite breakpoints"));
    cuts.dedup();

    let mut area = T::zero();
    let half = T::of(0.5);
    for w in cuts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 <= u0 {
            continue;
        }
        let um = (u0 + u1) * half;
        let top_circle = (r * r - um * um).max(T::zero()).sqrt();
        let top_is_rect = y1 < top_circle;
        let bot_is_rect = y0 > -top_circle;
        let top = if top_is_rect { y1 } else { top_circle };
        let bot = if bot_is_rect { y0 } else { -top_circle };
        if top <= bot {
            continue;
        }
        let width = u1 - u0;
        let top_int = if top_is_rect {
            y1 * width
        } else {
            upper(u1) - upper(u0)
        };
        let bot_int = if bot_is_rect {
            y0 * width
        } else {
            -(upper(u1) - upper(u0))
        };
        area += top_int - bot_int;
    }
    area.max(T::zero())
}
