//! Contact quantities extracted from an intersection mesh: application
//! point, overlap volume and separation direction.

use nalgebra::{Point3, Unit, Vector3};

use super::{
    boolean::intersect_shapes, ConvexShape, MeshError, Pose, Provenance, TriMesh,
};

/// How the per-triangle direction vectors entering `s_d` are built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NormalMode {
    /// Unit vector from the triangle centroid towards the contact point.
    #[default]
    CentroidToContact,
    /// Inward unit normal of the triangle (points into the overlap).
    InwardFaceNormal,
    /// Inward unit normal weighted by triangle area alone. The resulting
    /// `s_d` is the direction in which moving A shrinks the overlap fastest,
    /// and thin overlap slabs get no spurious sideways component.
    VolumeGradient,
}

/// Geometric description of one overlapping pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapResult {
    pub intersection: TriMesh,
    /// Application point: volume centroid of the intersection (m).
    pub c: Point3<f64>,
    /// Overlap volume (m³).
    pub v: f64,
    /// Unnormalized weighted direction (m⁴ for the default mode).
    pub s_d: Vector3<f64>,
    /// Unit direction of the force on body A.
    pub s_n: Unit<Vector3<f64>>,
}

/// Signed volume and volume centroid by signed-tetrahedron decomposition,
/// taken about the vertex mean for conditioning.
pub(crate) fn volume_and_centroid(mesh: &TriMesh) -> (f64, Point3<f64>) {
    let vertices = mesh.vertices();
    let reference = vertices.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / vertices.len().max(1) as f64;
    let mut volume = 0.0;
    let mut moment = Vector3::zeros();
    for tri in mesh.triangles() {
        let a = vertices[tri[0]].coords - reference;
        let b = vertices[tri[1]].coords - reference;
        let c = vertices[tri[2]].coords - reference;
        let tet = a.cross(&b).dot(&c) / 6.0;
        volume += tet;
        moment += (a + b + c) * (tet / 4.0);
    }
    let centroid = if volume != 0.0 {
        Point3::from(reference + moment / volume)
    } else {
        Point3::from(reference)
    };
    (volume, centroid)
}

/// Enclosed volume of a closed, outward-oriented mesh (m³).
pub fn mesh_volume(mesh: &TriMesh) -> Result<f64, MeshError> {
    mesh.check_closed()?;
    Ok(volume_and_centroid(mesh).0)
}

/// Volume centroid of a closed mesh.
pub fn mesh_centroid(mesh: &TriMesh) -> Result<Point3<f64>, MeshError> {
    mesh.check_closed()?;
    let (volume, centroid) = volume_and_centroid(mesh);
    if volume.abs() < super::MIN_OVERLAP_VOLUME {
        return Err(MeshError::ZeroVolume);
    }
    Ok(centroid)
}

/// Triangles of `intersection` carrying `tag`, as vertex triples.
pub fn extract_submesh(
    intersection: &TriMesh,
    tag: Provenance,
) -> Result<Vec<[Point3<f64>; 3]>, MeshError> {
    let tags = intersection.provenance().ok_or(MeshError::Untagged(0))?;
    Ok(tags
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == tag)
        .map(|(i, _)| intersection.triangle_points(i))
        .collect())
}

/// Pyramid weight of one surface triangle and its direction vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleWeight {
    /// One third of the triangle area times its centroid's distance to the
    /// contact point (m³).
    pub weight: f64,
    pub direction: Vector3<f64>,
}

pub fn triangle_weight(tri: &[Point3<f64>; 3], c: &Point3<f64>) -> TriangleWeight {
    weight_with_mode(tri, c, NormalMode::CentroidToContact)
}

fn weight_with_mode(tri: &[Point3<f64>; 3], c: &Point3<f64>, mode: NormalMode) -> TriangleWeight {
    if mode == NormalMode::VolumeGradient {
        let cross = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let area = 0.5 * cross.norm();
        if !(area > 0.0) {
            return TriangleWeight {
                weight: 0.0,
                direction: Vector3::zeros(),
            };
        }
        return TriangleWeight {
            weight: area,
            direction: -cross / (2.0 * area),
        };
    }
    let centroid = Point3::from((tri[0].coords + tri[1].coords + tri[2].coords) / 3.0);
    let to_contact = c - centroid;
    let depth = to_contact.norm();
    if depth < 1e-12 {
        return TriangleWeight {
            weight: 0.0,
            direction: Vector3::zeros(),
        };
    }
    let cross = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let area = 0.5 * cross.norm();
    let direction = match mode {
        NormalMode::CentroidToContact => to_contact / depth,
        NormalMode::InwardFaceNormal if area > 0.0 => -cross / (2.0 * area),
        NormalMode::InwardFaceNormal | NormalMode::VolumeGradient => Vector3::zeros(),
    };
    TriangleWeight {
        weight: area * depth / 3.0,
        direction,
    }
}

/// Weighted direction `s_d = Σ_A ω n − Σ_B ω n`. A force along `s_d` on
/// body A pushes it out of B.
pub fn direction_vector(
    intersection: &TriMesh,
    c: &Point3<f64>,
    mode: NormalMode,
) -> Result<Vector3<f64>, MeshError> {
    let tags = intersection.provenance().ok_or(MeshError::Untagged(0))?;
    let mut s_d = Vector3::zeros();
    let mut total = 0.0;
    for (i, tag) in tags.iter().enumerate() {
        let w = weight_with_mode(&intersection.triangle_points(i), c, mode);
        let contribution = w.direction * w.weight;
        total += w.weight;
        match tag {
            Provenance::FromA => s_d += contribution,
            Provenance::FromB => s_d -= contribution,
        }
    }
    let norm = s_d.norm();
    if !(norm > 1e-12 * total) {
        return Err(MeshError::IndeterminateDirection(norm));
    }
    Ok(s_d)
}

/// Boolean intersection followed by volume, centroid and direction.
pub fn characterize_overlap(
    mesh_a: &TriMesh,
    pose_a: &Pose,
    mesh_b: &TriMesh,
    pose_b: &Pose,
) -> Result<Option<OverlapResult>, MeshError> {
    let a = ConvexShape::new(mesh_a.clone())?;
    let b = ConvexShape::new(mesh_b.clone())?;
    characterize_shapes(&a, pose_a, &b, pose_b, NormalMode::default())
}

pub fn characterize_shapes(
    a: &ConvexShape,
    pose_a: &Pose,
    b: &ConvexShape,
    pose_b: &Pose,
    mode: NormalMode,
) -> Result<Option<OverlapResult>, MeshError> {
    let Some(intersection) = intersect_shapes(a, pose_a, b, pose_b) else {
        return Ok(None);
    };
    let (v, c) = volume_and_centroid(&intersection);
    let s_d = direction_vector(&intersection, &c, mode)?;
    let s_n = Unit::new_normalize(s_d);
    Ok(Some(OverlapResult {
        intersection,
        c,
        v,
        s_d,
        s_n,
    }))
}
