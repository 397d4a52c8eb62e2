//! ASCII mesh loaders for the OBJ subset (v/vn/f with triangular faces) and
//! OFF.

use std::path::Path;

use nalgebra::Vector3;

use super::mesh::TriangleMesh;
use crate::{Error, Result};

/// Load a mesh by file extension (`.obj` or `.off`).
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MeshLoad(format!("{}: {e}", path.display())))?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("obj") => parse_obj(&text),
        Some("off") => parse_off(&text),
        other => Err(Error::MeshLoad(format!(
            "unsupported mesh extension {other:?} (expected obj or off)"
        ))),
    }
}

fn parse_f64(tok: &str, line_no: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::MeshLoad(format!("line {line_no}: bad number {tok:?}")))
}

/// Parse the ASCII OBJ subset: `v`, `vn` and triangular `f` records. Face
/// vertices may be `i`, `i/t`, `i//n` or `i/t/n`; when normal indices are
/// present the referenced normal is attached to the face vertex, otherwise
/// vertex normals are computed from the faces.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut normals_pool: Vec<Vector3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut vertex_normal: Vec<Option<Vector3<f64>>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next().unwrap() {
            "v" => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = parse_f64(
                        toks.next().ok_or_else(|| {
                            Error::MeshLoad(format!("line {line_no}: short vertex record"))
                        })?,
                        line_no,
                    )?;
                }
                vertices.push(Vector3::from(c));
                vertex_normal.push(None);
            }
            "vn" => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = parse_f64(
                        toks.next().ok_or_else(|| {
                            Error::MeshLoad(format!("line {line_no}: short normal record"))
                        })?,
                        line_no,
                    )?;
                }
                normals_pool.push(Vector3::from(c));
            }
            "f" => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(Error::MeshLoad(format!(
                        "line {line_no}: face with {} vertices (only triangles are supported)",
                        corners.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let vi: i64 = parts
                        .next()
                        .unwrap()
                        .parse()
                        .map_err(|_| Error::MeshLoad(format!("line {line_no}: bad face index")))?;
                    let vi = resolve_index(vi, vertices.len(), line_no)?;
                    tri[k] = vi;
                    let _texture = parts.next();
                    if let Some(ni_tok) = parts.next() {
                        if !ni_tok.is_empty() {
                            let ni: i64 = ni_tok.parse().map_err(|_| {
                                Error::MeshLoad(format!("line {line_no}: bad normal index"))
                            })?;
                            let ni = resolve_index(ni, normals_pool.len(), line_no)?;
                            vertex_normal[vi] = Some(normals_pool[ni]);
                        }
                    }
                }
                triangles.push(tri);
            }
            // vt, o, g, s, usemtl, mtllib: ignored.
            _ => {}
        }
    }

    if vertex_normal.iter().all(|n| n.is_some()) && !vertices.is_empty() {
        let normals = vertex_normal.into_iter().map(|n| n.unwrap()).collect();
        TriangleMesh::with_normals(vertices, triangles, normals)
    } else {
        TriangleMesh::new(vertices, triangles)
    }
}

fn resolve_index(raw: i64, len: usize, line_no: usize) -> Result<usize> {
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        len as i64 + raw
    } else {
        return Err(Error::MeshLoad(format!("line {line_no}: zero index")));
    };
    if idx < 0 || idx as usize >= len {
        return Err(Error::MeshLoad(format!(
            "line {line_no}: index {raw} out of range ({len} entries)"
        )));
    }
    Ok(idx as usize)
}

/// Parse ASCII OFF with triangular faces.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::MeshLoad("empty OFF file".into()))?;
    if header != "OFF" {
        return Err(Error::MeshLoad(format!("bad OFF header {header:?}")));
    }
    let counts = lines
        .next()
        .ok_or_else(|| Error::MeshLoad("missing OFF count line".into()))?;
    let mut count_toks = counts.split_whitespace();
    let nv: usize = count_toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MeshLoad("bad OFF vertex count".into()))?;
    let nf: usize = count_toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MeshLoad("bad OFF face count".into()))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| Error::MeshLoad("truncated OFF vertex list".into()))?;
        let mut toks = line.split_whitespace();
        let mut c = [0.0; 3];
        for slot in &mut c {
            *slot = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MeshLoad("bad OFF vertex".into()))?;
        }
        vertices.push(Vector3::from(c));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines
            .next()
            .ok_or_else(|| Error::MeshLoad("truncated OFF face list".into()))?;
        let toks: Vec<usize> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::MeshLoad(format!("bad OFF face token {t:?}")))
            })
            .collect::<Result<_>>()?;
        if toks.first() != Some(&3) || toks.len() < 4 {
            return Err(Error::MeshLoad(
                "OFF face is not a triangle (only triangles are supported)".into(),
            ));
        }
        triangles.push([toks[1], toks[2], toks[3]]);
    }
    TriangleMesh::new(vertices, triangles)
}
