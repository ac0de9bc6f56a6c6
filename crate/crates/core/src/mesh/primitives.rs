use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::{MeshError, TriMesh};

/// Axis-aligned box centered at the origin with full side lengths `extents`.
pub fn cuboid(extents: Vector3<f64>) -> Result<TriMesh, MeshError> {
    if extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(MeshError::InvalidArgument(format!(
            "cuboid extents must be positive, got {extents:?}"
        )));
    }
    let h = extents / 2.0;
    // Vertex index bit k set means +h on axis k.
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 != 0 { h.x } else { -h.x },
                if i & 2 != 0 { h.y } else { -h.y },
                if i & 4 != 0 { h.z } else { -h.z },
            )
        })
        .collect();
    let triangles = vec![
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
    ];
    TriMesh::new(vertices, triangles)
}

/// Geodesic sphere obtained by subdividing an icosahedron. Vertices lie
/// on the sphere of the given radius; `subdivisions = 3` gives 1280 faces.
pub fn icosphere(radius: f64, subdivisions: u32) -> Result<TriMesh, MeshError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(MeshError::InvalidArgument(format!(
            "icosphere radius must be positive, got {radius}"
        )));
    }
    if subdivisions > 6 {
        return Err(MeshError::InvalidArgument(format!(
            "at most 6 subdivisions supported, got {subdivisions}"
        )));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) / 2.0).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let points = vertices.into_iter().map(|v| Point3::from(v * radius)).collect();
    TriMesh::new(points, faces)
}
