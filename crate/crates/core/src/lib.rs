//! Rigid-body dynamics with penalty contacts computed from mesh overlap volumes.
//!
//! Bodies are convex triangle meshes. When two bodies interpenetrate, the
//! intersection volume is treated as a virtual compliant deformation: its
//! volume drives a stiffness term, a low-pass filtered estimate of its rate
//! drives a damping term, and a Gaussian gain emphasises the first moments
//! of each contact. The direction of the reaction comes from a weighted sum
//! over the triangles of the intersection surface.
//!
//! The crate is split into:
//! - [`mesh`]: triangle meshes, bounding boxes, convex boolean intersection
//!   and the overlap characterization (volume, centroid, direction).
//! - [`contact`]: derivative filter, transient gain, reaction wrench,
//!   regularized friction and per-pair episode bookkeeping.
//! - [`dynamics`]: rigid bodies, Newton-Euler equations and a Dormand-Prince
//!   integrator.
//! - [`scene`]: the world, effort assembly and the stepping loop.

pub mod contact;
pub mod dynamics;
pub mod mesh;
pub mod scene;

pub use contact::{ContactEpisode, ContactParams, FilterState, FrictionParams, Wrench};
pub use dynamics::{BodyKind, RigidBody, Sinusoid};
pub use mesh::{Aabb, ConvexShape, OverlapResult, Pose, Provenance, TriMesh};
pub use scene::{MetricsSample, World};
