//! Triangle meshes and the geometric half of the contact pipeline.

mod boolean;
mod obj;
mod overlap;
mod primitives;

use std::collections::HashMap;

use nalgebra::{Isometry3, Point3, Unit, Vector3};
use thiserror::Error;

pub use boolean::{boolean_intersect, intersect_shapes};
pub use obj::{load_obj, parse_obj};
pub(crate) use overlap::volume_and_centroid;
pub use overlap::{
    characterize_overlap, characterize_shapes, direction_vector, extract_submesh,
    mesh_centroid, mesh_volume, triangle_weight, NormalMode, OverlapResult, TriangleWeight,
};
pub use primitives::{cuboid, icosphere};

/// Rigid placement of a mesh in the world.
pub type Pose = Isometry3<f64>;

/// Minimum area for an input triangle (m²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;
/// Tolerance used for plane-side classification (m).
pub const PLANE_EPSILON: f64 = 1e-9;
/// Intersections smaller than this volume are reported as no contact (m³).
pub const MIN_OVERLAP_VOLUME: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no vertices or triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {triangle} is degenerate (area {area:e} m²)")]
    Degenerate { triangle: usize, area: f64 },
    #[error("mesh is not closed: {boundary_edges} boundary or non-manifold edges")]
    Open { boundary_edges: usize },
    #[error("mesh is not convex: vertex {vertex} lies {distance:e} m in front of face {face}")]
    NonConvex {
        vertex: usize,
        face: usize,
        distance: f64,
    },
    #[error("provenance has {tags} tags for {triangles} triangles")]
    ProvenanceLength { tags: usize, triangles: usize },
    #[error("triangle {0} carries no provenance tag")]
    Untagged(usize),
    #[error("mesh encloses zero volume")]
    ZeroVolume,
    #[error("indeterminate contact direction (|s_d| = {0:e})")]
    IndeterminateDirection(f64),
    #[error("invalid generator argument: {0}")]
    InvalidArgument(String),
    #[error("OBJ parse error at line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

/// Which body an intersection-surface triangle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    FromA,
    FromB,
}

/// Indexed triangle surface mesh. Triangles are counter-clockwise seen from
/// outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    provenance: Option<Vec<Provenance>>,
}

impl TriMesh {
    /// Builds a mesh, checking index ranges and rejecting degenerate
    /// triangles.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self {
            vertices,
            triangles,
            provenance: None,
        };
        mesh.check_indices()?;
        for (i, _) in mesh.triangles.iter().enumerate() {
            let area = mesh.triangle_area(i);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(MeshError::Degenerate { triangle: i, area });
            }
        }
        Ok(mesh)
    }

    /// Builds a mesh carrying one provenance tag per triangle. Degenerate
    /// triangles are allowed here since clipped surfaces may contain slivers.
    pub fn with_provenance(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[usize; 3]>,
        provenance: Vec<Provenance>,
    ) -> Result<Self, MeshError> {
        if provenance.len() != triangles.len() {
            return Err(MeshError::ProvenanceLength {
                tags: provenance.len(),
                triangles: triangles.len(),
            });
        }
        let mesh = Self {
            vertices,
            triangles,
            provenance: Some(provenance),
        };
        mesh.check_indices()?;
        Ok(mesh)
    }

    fn check_indices(&self) -> Result<(), MeshError> {
        let count = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn provenance(&self) -> Option<&[Provenance]> {
        self.provenance.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.triangles.is_empty()
    }

    pub fn triangle_points(&self, index: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[index];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let [a, b, c] = self.triangle_points(index);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Returns a copy with every vertex mapped through `pose`.
    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| pose * p).collect(),
            triangles: self.triangles.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Returns a copy with every vertex shifted by `offset`.
    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p + offset).collect(),
            triangles: self.triangles.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Number of edges not shared by exactly two triangles with opposite
    /// orientation.
    pub fn boundary_edge_count(&self) -> usize {
        let mut directed: HashMap<(usize, usize), i32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        let mut bad = 0;
        for (&(a, b), &count) in &directed {
            let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
            if count != 1 || reverse != 1 {
                bad += 1;
            }
        }
        bad
    }

    pub fn check_closed(&self) -> Result<(), MeshError> {
        if self.is_empty() {
            return Err(MeshError::Empty);
        }
        match self.boundary_edge_count() {
            0 => Ok(()),
            n => Err(MeshError::Open { boundary_edges: n }),
        }
    }

    /// Checks that every vertex is on or behind every face's supporting
    /// plane.
    pub fn check_convex(&self) -> Result<(), MeshError> {
        for (f, _) in self.triangles.iter().enumerate() {
            let plane = Plane::from_triangle(&self.triangle_points(f));
            for (v, p) in self.vertices.iter().enumerate() {
                let distance = plane.signed_distance(p);
                if distance > PLANE_EPSILON {
                    return Err(MeshError::NonConvex {
                        vertex: v,
                        face: f,
                        distance,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Oriented plane `normal · x = offset`; the normal points out of the solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Unit<Vector3<f64>>,
    pub offset: f64,
}

impl Plane {
    pub fn from_triangle(points: &[Point3<f64>; 3]) -> Self {
        let normal = Unit::new_normalize((points[1] - points[0]).cross(&(points[2] - points[0])));
        let offset = normal.dot(&points[0].coords);
        Self { normal, offset }
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn transformed(&self, pose: &Pose) -> Self {
        let normal = pose.rotation * self.normal;
        let offset = self.offset + normal.dot(&pose.translation.vector);
        Self { normal, offset }
    }

    /// Same orientation and the same offset within tolerance.
    pub fn coincides_with(&self, other: &Plane) -> bool {
        self.normal.dot(&other.normal) > 1.0 - 1e-9 && (self.offset - other.offset).abs() <= PLANE_EPSILON
    }
}

/// A closed convex mesh with its deduplicated face planes (mesh frame).
#[derive(Debug, Clone)]
pub struct ConvexShape {
    mesh: TriMesh,
    planes: Vec<Plane>,
}

impl ConvexShape {
    pub fn new(mesh: TriMesh) -> Result<Self, MeshError> {
        mesh.check_closed()?;
        mesh.check_convex()?;
        let mut planes: Vec<Plane> = Vec::new();
        for f in 0..mesh.triangles.len() {
            let plane = Plane::from_triangle(&mesh.triangle_points(f));
            if !planes.iter().any(|p| p.coincides_with(&plane)) {
                planes.push(plane);
            }
        }
        Ok(Self { mesh, planes })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn aabb(&self, pose: &Pose) -> Aabb {
        Aabb::from_points(self.mesh.vertices.iter().map(|p| pose * p))
            .expect("convex shapes are never empty")
    }

    /// True when `p` (world frame) is inside or on the posed solid.
    pub fn contains(&self, pose: &Pose, p: &Point3<f64>) -> bool {
        let local = pose.inverse_transform_point(p);
        self.planes.iter().all(|plane| plane.signed_distance(&local) <= 0.0)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        debug_assert!(min.iter().zip(max.iter()).all(|(a, b)| a <= b));
        Self { min, max }
    }

    pub fn from_points(points: impl IntoIterator<Item = Point3<f64>>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let (mut min, mut max) = (first, first);
        for p in iter {
            min = min.inf(&p);
            max = max.sup(&p);
        }
        Some(Self { min, max })
    }

    /// Inclusive test: boxes sharing a face, edge or corner overlap.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn contains_point(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }
}

/// Bounding box of the posed mesh vertices, without margin.
pub fn compute_aabb(mesh: &TriMesh, pose: &Pose) -> Result<Aabb, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    Aabb::from_points(mesh.vertices.iter().map(|p| pose * p)).ok_or(MeshError::Empty)
}

pub fn aabb_overlap(a: &Aabb, b: &Aabb) -> bool {
    a.overlaps(b)
}
