//! Intersection of two convex polyhedra.
//!
//! Body A's surface is clipped successively against every supporting plane
//! of body B. The vertex set of the resulting polytope is then re-triangulated
//! plane by plane: each face is the convex polygon of the polytope corners
//! lying on one supporting plane, fanned around its vertex mean. Faces on
//! A's planes are tagged [`Provenance::FromA`], faces on B's planes
//! [`Provenance::FromB`]. Building faces from corners only (points lying on
//! at least three distinct planes) makes the surface independent of the
//! input triangulations and of which body is clipped, and guarantees that
//! neighbouring faces share their edge vertices exactly.

use nalgebra::{Point3, Unit, Vector3};

use super::{
    ConvexShape, MeshError, Plane, Pose, Provenance, TriMesh, MIN_OVERLAP_VOLUME, PLANE_EPSILON,
};

/// Closed intersection mesh of two convex meshes in world coordinates, or
/// `None` when the interiors are disjoint or the overlap is below
/// [`MIN_OVERLAP_VOLUME`].
///
/// Both inputs are validated as closed and convex; use [`intersect_shapes`]
/// with pre-validated shapes in hot loops.
pub fn boolean_intersect(
    mesh_a: &TriMesh,
    pose_a: &Pose,
    mesh_b: &TriMesh,
    pose_b: &Pose,
) -> Result<Option<TriMesh>, MeshError> {
    let a = ConvexShape::new(mesh_a.clone())?;
    let b = ConvexShape::new(mesh_b.clone())?;
    Ok(intersect_shapes(&a, pose_a, &b, pose_b))
}

pub fn intersect_shapes(
    a: &ConvexShape,
    pose_a: &Pose,
    b: &ConvexShape,
    pose_b: &Pose,
) -> Option<TriMesh> {
    if !a.aabb(pose_a).overlaps(&b.aabb(pose_b)) {
        return None;
    }
    let planes_a: Vec<Plane> = a.planes().iter().map(|p| p.transformed(pose_a)).collect();
    let planes_b: Vec<Plane> = b.planes().iter().map(|p| p.transformed(pose_b)).collect();

    let mut polytope = Polytope::from_mesh(&a.mesh().transformed(pose_a));
    for plane in &planes_b {
        if !polytope.clip(plane) {
            return None;
        }
    }

    // A wins ties between coincident planes.
    let mut planes: Vec<(Plane, Provenance)> =
        planes_a.iter().map(|p| (*p, Provenance::FromA)).collect();
    for p in &planes_b {
        if !planes_a.iter().any(|q| q.coincides_with(p)) {
            planes.push((*p, Provenance::FromB));
        }
    }

    let mesh = polytope.rebuild(&planes)?;
    let volume = super::overlap::volume_and_centroid(&mesh).0;
    (volume >= MIN_OVERLAP_VOLUME).then_some(mesh)
}

/// Convex polytope as an indexed polygon soup. Vertices are never removed,
/// only dereferenced.
struct Polytope {
    vertices: Vec<Point3<f64>>,
    faces: Vec<Vec<usize>>,
}

impl Polytope {
    fn from_mesh(mesh: &TriMesh) -> Self {
        Self {
            vertices: mesh.vertices().to_vec(),
            faces: mesh.triangles().iter().map(|t| t.to_vec()).collect(),
        }
    }

    /// Keeps the part behind `plane`. Returns false when nothing of positive
    /// thickness remains.
    fn clip(&mut self, plane: &Plane) -> bool {
        let distances: Vec<f64> = self.vertices.iter().map(|p| plane.signed_distance(p)).collect();
        let used = self.used_vertices();
        let any_outside = used.iter().any(|&i| distances[i] > PLANE_EPSILON);
        let any_inside = used.iter().any(|&i| distances[i] < -PLANE_EPSILON);
        if !any_outside {
            return true;
        }
        if !any_inside {
            self.faces.clear();
            return false;
        }

        // Split edges seen so far; faces are few, so a linear scan beats hashing.
        let mut split: Vec<((usize, usize), usize)> = Vec::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        for face in &self.faces {
            let mut clipped = Vec::with_capacity(face.len() + 2);
            for k in 0..face.len() {
                let (cur, next) = (face[k], face[(k + 1) % face.len()]);
                let (dc, dn) = (distances[cur], distances[next]);
                if dc <= PLANE_EPSILON {
                    clipped.push(cur);
                }
                let crosses = (dc < -PLANE_EPSILON && dn > PLANE_EPSILON)
                    || (dc > PLANE_EPSILON && dn < -PLANE_EPSILON);
                if crosses {
                    let key = (cur.min(next), cur.max(next));
                    let index = match split.iter().find(|(k, _)| *k == key) {
                        Some(&(_, index)) => index,
                        None => {
                            // Interpolate from the lower index so both faces
                            // sharing the edge would agree bit for bit.
                            let (i, j) = key;
                            let t = distances[i] / (distances[i] - distances[j]);
                            let p = self.vertices[i] + (self.vertices[j] - self.vertices[i]) * t;
                            self.vertices.push(p);
                            split.push((key, self.vertices.len() - 1));
                            self.vertices.len() - 1
                        }
                    };
                    clipped.push(index);
                }
            }
            if clipped.len() >= 3 {
                faces.push(clipped);
            }
        }

        let mut cap: Vec<usize> = Vec::new();
        for face in &faces {
            for &v in face {
                let on_plane = v >= distances.len() || distances[v].abs() <= PLANE_EPSILON;
                if on_plane && !cap.contains(&v) {
                    cap.push(v);
                }
            }
        }
        if cap.len() >= 3 {
            sort_ccw(&mut cap, &self.vertices, &plane.normal);
            faces.push(cap);
        }
        self.faces = faces;
        !self.faces.is_empty()
    }

    /// Referenced vertex indices in ascending order.
    fn used_vertices(&self) -> Vec<usize> {
        let mut mask = vec![false; self.vertices.len()];
        for &v in self.faces.iter().flatten() {
            mask[v] = true;
        }
        (0..mask.len()).filter(|&v| mask[v]).collect()
    }

    /// Re-triangulates the polytope with one centroid fan per supporting
    /// plane.
    fn rebuild(&self, planes: &[(Plane, Provenance)]) -> Option<TriMesh> {
        let used = self.used_vertices();
        if used.len() < 4 {
            return None;
        }
        // Incidence of corners on planes.
        let incidence: Vec<Vec<usize>> = planes
            .iter()
            .map(|(plane, _)| {
                used.iter()
                    .copied()
                    .filter(|&v| plane.signed_distance(&self.vertices[v]).abs() <= PLANE_EPSILON)
                    .collect()
            })
            .collect();
        let mut plane_count = vec![0usize; self.vertices.len()];
        for members in &incidence {
            for &v in members {
                plane_count[v] += 1;
            }
        }

        let mut remap: Vec<Option<usize>> = vec![None; self.vertices.len()];
        let mut vertices: Vec<Point3<f64>> = Vec::new();
        let mut triangles: Vec<[usize; 3]> = Vec::new();
        let mut tags: Vec<Provenance> = Vec::new();
        for ((plane, tag), members) in planes.iter().zip(&incidence) {
            let mut corners: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&v| plane_count[v] >= 3)
                .collect();
            if corners.len() < 3 {
                continue;
            }
            sort_ccw(&mut corners, &self.vertices, &plane.normal);
            let points: Vec<Point3<f64>> = corners.iter().map(|&v| self.vertices[v]).collect();
            if polygon_area(&points, &plane.normal) <= 1e-18 {
                continue;
            }
            let center = Point3::from(
                points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / points.len() as f64,
            );
            vertices.push(center);
            let hub = vertices.len() - 1;
            let ids: Vec<usize> = corners
                .iter()
                .map(|&v| {
                    *remap[v].get_or_insert_with(|| {
                        vertices.push(self.vertices[v]);
                        vertices.len() - 1
                    })
                })
                .collect();
            for k in 0..ids.len() {
                triangles.push([hub, ids[k], ids[(k + 1) % ids.len()]]);
                tags.push(*tag);
            }
        }
        if triangles.len() < 4 {
            return None;
        }
        TriMesh::with_provenance(vertices, triangles, tags).ok()
    }
}

/// Sorts coplanar vertex indices counter-clockwise about `normal`.
fn sort_ccw(indices: &mut [usize], vertices: &[Point3<f64>], normal: &Unit<Vector3<f64>>) {
    let center = indices.iter().fold(Vector3::zeros(), |acc, &i| acc + vertices[i].coords)
        / indices.len() as f64;
    let u = normal.cross(&any_orthogonal(normal)).normalize();
    let v = normal.cross(&u);
    let mut keyed: Vec<(f64, usize)> = indices
        .iter()
        .map(|&i| {
            let d = vertices[i].coords - center;
            (d.dot(&v).atan2(d.dot(&u)), i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (slot, (_, i)) in indices.iter_mut().zip(keyed) {
        *slot = i;
    }
}

fn any_orthogonal(n: &Vector3<f64>) -> Vector3<f64> {
    if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    }
}

fn polygon_area(points: &[Point3<f64>], normal: &Vector3<f64>) -> f64 {
    let mut twice = Vector3::zeros();
    for k in 0..points.len() {
        twice += points[k].coords.cross(&points[(k + 1) % points.len()].coords);
    }
    0.5 * twice.dot(normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cuboid, icosphere, mesh_volume};
    use nalgebra::{Translation3, UnitQuaternion};

    fn cube() -> TriMesh {
        cuboid(Vector3::new(1.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn offset_cubes_give_half_volume_slab() {
        let mesh = boolean_intersect(
            &cube(),
            &Pose::identity(),
            &cube(),
            &Pose::translation(0.5, 0.0, 0.0),
        )
        .unwrap()
        .unwrap();
        assert_eq!(mesh.boundary_edge_count(), 0);
        assert!((mesh_volume(&mesh).unwrap() - 0.5).abs() < 1e-12);
        let tags = mesh.provenance().unwrap();
        for (t, tag) in tags.iter().enumerate() {
            let pts = mesh.triangle_points(t);
            if pts.iter().all(|p| (p.x - 0.5).abs() < 1e-12) {
                assert_eq!(*tag, Provenance::FromA);
            }
            if pts.iter().all(|p| p.x.abs() < 1e-12) {
                assert_eq!(*tag, Provenance::FromB);
            }
        }
    }

    #[test]
    fn disjoint_and_touching_give_none() {
        let far = boolean_intersect(&cube(), &Pose::identity(), &cube(), &Pose::translation(2.0, 0.0, 0.0));
        assert_eq!(far.unwrap(), None);
        let touching =
            boolean_intersect(&cube(), &Pose::identity(), &cube(), &Pose::translation(1.0, 0.0, 0.0));
        assert_eq!(touching.unwrap(), None);
    }

    #[test]
    fn coincident_cubes_give_unit_volume() {
        let mesh = boolean_intersect(&cube(), &Pose::identity(), &cube(), &Pose::identity())
            .unwrap()
            .unwrap();
        assert!((mesh_volume(&mesh).unwrap() - 1.0).abs() < 1e-12);
        assert!(mesh.provenance().unwrap().iter().all(|t| *t == Provenance::FromA));
    }

    #[test]
    fn contained_body_is_returned_whole() {
        let small = cuboid(Vector3::new(0.2, 0.2, 0.2)).unwrap();
        let pose = Pose::from_parts(
            Translation3::new(0.1, -0.1, 0.05),
            UnitQuaternion::from_euler_angles(0.3, 0.2, 0.1),
        );
        let mesh = boolean_intersect(&small, &pose, &cube(), &Pose::identity()).unwrap().unwrap();
        assert!((mesh_volume(&mesh).unwrap() - 0.008).abs() < 1e-12);
        // B's surface never touches the overlap, so every face is A's.
        assert!(mesh.provenance().unwrap().iter().all(|t| *t == Provenance::FromA));
    }

    #[test]
    fn non_convex_input_is_rejected() {
        let c = cube();
        let mut vertices = c.vertices().to_vec();
        vertices[7] = Point3::new(0.1, 0.1, 0.1);
        let dented = TriMesh::new(vertices, c.triangles().to_vec()).unwrap();
        let result = boolean_intersect(&dented, &Pose::identity(), &c, &Pose::identity());
        assert!(matches!(result, Err(MeshError::NonConvex { .. })));
    }

    #[test]
    fn sphere_in_cube_is_watertight() {
        let sphere = ConvexShape::new(icosphere(0.05, 3).unwrap()).unwrap();
        let block = ConvexShape::new(cuboid(Vector3::new(0.4, 0.4, 0.2)).unwrap()).unwrap();
        let mesh = intersect_shapes(
            &sphere,
            &Pose::translation(0.01, 0.02, 0.1),
            &block,
            &Pose::identity(),
        )
        .unwrap();
        assert_eq!(mesh.boundary_edge_count(), 0);
    }
}
