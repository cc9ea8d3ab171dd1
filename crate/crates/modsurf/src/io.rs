//! Mesh documents and deterministic report formatting.
//!
//! A mesh document is JSON with three required arrays and an optional
//! frame:
//!
//! ```json
//! {
//!   "vertices": [[x, y], ...],
//!   "edges": [[a, b, length], ...],
//!   "faces": [[[v0, v1, ...], area], ...],
//!   "frame": {"zeta1": [...], "zeta2": [...], "zeta3": [...], "zeta4": [...]}
//! }
//! ```
//!
//! Writing is hand-rolled so the byte layout is deterministic; floats carry
//! 17 significant digits, which round-trips `f64` exactly. Reading reports
//! syntax errors with line/column (from the JSON parser) and semantic
//! errors with the offending field, then runs the mesh and frame
//! validators.

use std::path::Path;

use serde_json::Value;

use crate::modulus::ModulusValue;
use crate::surface::{MetricMesh, QuadFrame, VertexId};
use crate::{Error, Result};

/// 17 significant digits: parses back to the identical `f64`.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// 12 significant digits, the precision of every report float.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Report form of a modulus value: 12 significant digits or `inf`.
pub fn fmt_modulus(v: &ModulusValue<f64>) -> String {
    match v.finite() {
        Some(x) => fmt_sig12(x),
        None => "inf".into(),
    }
}

/// Writes `mesh` (and the frame, when given) as a mesh document.
pub fn write_mesh(
    path: impl AsRef<Path>,
    mesh: &MetricMesh<f64>,
    frame: Option<&QuadFrame>,
) -> Result<()> {
    std::fs::write(path, mesh_document(mesh, frame))?;
    Ok(())
}

/// The serialized document itself; [`write_mesh`] dumps this to disk.
pub fn mesh_document(mesh: &MetricMesh<f64>, frame: Option<&QuadFrame>) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"vertices\": [\n");
    for v in 0..mesh.vertex_count() {
        let p = mesh.position(v);
        let sep = if v + 1 < mesh.vertex_count() { "," } else { "" };
        s.push_str(&format!(
            "    [{}, {}]{sep}\n",
            fmt_exact(p[0]),
            fmt_exact(p[1])
        ));
    }
    s.push_str("  ],\n  \"edges\": [\n");
    for e in 0..mesh.edge_count() {
        let ed = mesh.edge(e);
        let sep = if e + 1 < mesh.edge_count() { "," } else { "" };
        s.push_str(&format!(
            "    [{}, {}, {}]{sep}\n",
            ed.a,
            ed.b,
            fmt_exact(ed.length)
        ));
    }
    s.push_str("  ],\n  \"faces\": [\n");
    for f in 0..mesh.face_count() {
        let fc = mesh.face(f);
        let cycle: Vec<String> = fc.vertices.iter().map(ToString::to_string).collect();
        let sep = if f + 1 < mesh.face_count() { "," } else { "" };
        s.push_str(&format!(
            "    [[{}], {}]{sep}\n",
            cycle.join(", "),
            fmt_exact(fc.area)
        ));
    }
    s.push_str("  ]");
    if let Some(fr) = frame {
        s.push_str(",\n  \"frame\": {\n");
        for (i, arc) in fr.arcs().iter().enumerate() {
            let ids: Vec<String> = arc.iter().map(ToString::to_string).collect();
            let sep = if i + 1 < 4 { "," } else { "" };
            s.push_str(&format!("    \"zeta{}\": [{}]{sep}\n", i + 1, ids.join(", ")));
        }
        s.push_str("  }");
    }
    s.push_str("\n}\n");
    s
}

/// Reads a mesh document; errors name the file plus line/column or field.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<(MetricMesh<f64>, Option<QuadFrame>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MeshFile(format!("{}: {e}", path.display())))?;
    parse_mesh(&text).map_err(|e| match e {
        Error::MeshFile(msg) => Error::MeshFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a mesh document from text.
pub fn parse_mesh(text: &str) -> Result<(MetricMesh<f64>, Option<QuadFrame>)> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::MeshFile(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::MeshFile("document is not a JSON object".into()))?;

    let vertices = array_field(obj, "vertices")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                Error::MeshFile(format!("vertices[{i}]: expected [x, y]"))
            })?;
            Ok([
                number(&pair[0], &format!("vertices[{i}][0]"))?,
                number(&pair[1], &format!("vertices[{i}][1]"))?,
            ])
        })
        .collect::<Result<Vec<[f64; 2]>>>()?;

    let edges = array_field(obj, "edges")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let triple = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                Error::MeshFile(format!("edges[{i}]: expected [a, b, length]"))
            })?;
            Ok((
                index(&triple[0], &format!("edges[{i}][0]"))?,
                index(&triple[1], &format!("edges[{i}][1]"))?,
                number(&triple[2], &format!("edges[{i}][2]"))?,
            ))
        })
        .collect::<Result<Vec<(VertexId, VertexId, f64)>>>()?;

    let faces = array_field(obj, "faces")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                Error::MeshFile(format!("faces[{i}]: expected [[cycle], area]"))
            })?;
            let cycle = pair[0]
                .as_array()
                .ok_or_else(|| Error::MeshFile(format!("faces[{i}][0]: expected a vertex cycle")))?
                .iter()
                .enumerate()
                .map(|(k, x)| index(x, &format!("faces[{i}][0][{k}]")))
                .collect::<Result<Vec<VertexId>>>()?;
            Ok((cycle, number(&pair[1], &format!("faces[{i}][1]"))?))
        })
        .collect::<Result<Vec<(Vec<VertexId>, f64)>>>()?;

    let mesh = MetricMesh::new(vertices, edges, faces)
        .map_err(|e| Error::MeshFile(e.to_string()))?;

    let frame = match obj.get("frame") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let fobj = v
                .as_object()
                .ok_or_else(|| Error::MeshFile("frame: expected an object".into()))?;
            let mut arcs: [Vec<VertexId>; 4] = Default::default();
            for (i, arc) in arcs.iter_mut().enumerate() {
                let key = format!("zeta{}", i + 1);
                *arc = fobj
                    .get(&key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| {
                        Error::MeshFile(format!("frame.{key}: expected a vertex array"))
                    })?
                    .iter()
                    .enumerate()
                    .map(|(k, x)| index(x, &format!("frame.{key}[{k}]")))
                    .collect::<Result<Vec<VertexId>>>()?;
            }
            Some(QuadFrame::new(&mesh, arcs).map_err(|e| Error::MeshFile(e.to_string()))?)
        }
    };
    Ok((mesh, frame))
}

fn array_field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
) -> Result<&'a Vec<Value>> {
    obj.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::MeshFile(format!("{key}: expected an array field")))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::MeshFile(format!("{what}: expected a number")))
}

fn index(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::MeshFile(format!("{what}: expected a vertex index")))
}
