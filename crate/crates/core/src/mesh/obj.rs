use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriMesh};

/// Loads a triangulated ASCII OBJ file. Only `v` and `f` records are used;
/// normals, texture coordinates, groups and materials are ignored.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    parse_obj(&text)
}

pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| MeshError::Obj { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad coordinate {f:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let corners: Vec<&str> = fields.collect();
                if corners.len() != 3 {
                    return Err(err(format!(
                        "only triangles are supported, face has {} corners",
                        corners.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (slot, corner) in tri.iter_mut().zip(&corners) {
                    let index_text = corner.split('/').next().unwrap_or("");
                    let index: i64 = index_text
                        .parse()
                        .map_err(|e| err(format!("bad index {corner:?}: {e}")))?;
                    // OBJ indices are 1-based; negative values count back
                    // from the most recent vertex.
                    let resolved = match index {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(err("index 0 is invalid".into())),
                    };
                    if resolved < 0 {
                        return Err(err(format!("index {index} out of range")));
                    }
                    *slot = resolved as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    if vertices.is_empty() || triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_volume, ConvexShape};

    const TETRA: &str = "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2/1/1 3/2/1 4/3/1\n";

    #[test]
    fn parses_tetrahedron() {
        let mesh = parse_obj(TETRA).unwrap();
        assert_eq!(mesh.vertices().len(), 4);
        assert_eq!(mesh.triangles().len(), 4);
        ConvexShape::new(mesh.clone()).unwrap();
        assert!((mesh_volume(&mesh).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn negative_indices_resolve() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(parse_obj(text).unwrap().triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn rejects_quads_and_garbage() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(parse_obj(quad), Err(MeshError::Obj { line: 5, .. })));
        assert!(matches!(parse_obj("v 0 x 0\n"), Err(MeshError::Obj { line: 1, .. })));
        assert_eq!(parse_obj("# nothing\n"), Err(MeshError::Empty));
    }
}
