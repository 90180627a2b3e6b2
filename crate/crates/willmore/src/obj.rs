//! Wavefront OBJ reading and writing (`v` and `f` records only).

use std::fmt::Write as _;

use crate::mesh::TriangleMesh;
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum ObjError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no faces in input")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh, ObjError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| ObjError::Parse { line, msg };
        let mut tok = raw.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(err("vertex needs 3 coordinates".into()));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        match head.parse::<i64>() {
                            Ok(k) if k > 0 && (k as usize) <= vertices.len() => Ok(k as usize - 1),
                            Ok(k) if k < 0 && ((-k) as usize) <= vertices.len() => {
                                Ok(vertices.len() - (-k) as usize)
                            }
                            _ => Err(err(format!("bad face index {t:?}"))),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least 3 indices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(ObjError::Empty);
    }
    Ok(TriangleMesh::new(vertices, faces))
}

pub fn read_obj(path: &std::path::Path) -> Result<TriangleMesh, ObjError> {
    parse_obj(&std::fs::read_to_string(path)?)
}

pub fn to_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 60 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_obj(mesh: &TriangleMesh, path: &std::path::Path) -> Result<(), ObjError> {
    std::fs::write(path, to_obj(mesh))?;
    Ok(())
}
