use std::sync::Arc;

use nalgebra::{Matrix3, Point3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};

use super::DynamicsError;
use crate::contact::Wrench;
use crate::mesh::{ConvexShape, Pose};

/// Prescribed motion `origin + axis · A sin(Ω t + φ)` with fixed orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub origin: Vector3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub fn position(&self, t: f64) -> Vector3<f64> {
        self.origin + self.axis.into_inner() * (self.amplitude * (self.omega * t + self.phase).sin())
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        self.axis.into_inner() * (self.amplitude * self.omega * (self.omega * t + self.phase).cos())
    }
}

/// How a body's motion is determined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyKind {
    /// Free 6-DoF body.
    Dynamic,
    /// Translates along a fixed world axis only; no rotation.
    PrismaticAlong(Unit<Vector3<f64>>),
    /// Never moves.
    Static,
    /// Follows a prescribed trajectory regardless of forces.
    Kinematic(Sinusoid),
}

#[derive(Debug, Clone)]
pub struct RigidBody {
    pub mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    /// Center of mass in world coordinates (m).
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub lin_vel: Vector3<f64>,
    /// Angular velocity in the body frame (rad/s).
    pub ang_vel_body: Vector3<f64>,
    pub kind: BodyKind,
    /// Collision shape in the body frame; its origin is the center of mass.
    pub shape: Arc<ConvexShape>,
}

impl RigidBody {
    pub fn new(
        shape: Arc<ConvexShape>,
        mass: f64,
        inertia: Matrix3<f64>,
        kind: BodyKind,
    ) -> Result<Self, DynamicsError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(DynamicsError::Mass(mass));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max() {
            return Err(DynamicsError::Inertia);
        }
        let eig = inertia.symmetric_eigenvalues();
        if eig.iter().any(|e| !(*e > 0.0)) {
            return Err(DynamicsError::Inertia);
        }
        let inertia_inv = inertia.try_inverse().ok_or(DynamicsError::Inertia)?;
        let mut body = Self {
            mass,
            inertia,
            inertia_inv,
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            lin_vel: Vector3::zeros(),
            ang_vel_body: Vector3::zeros(),
            kind,
            shape,
        };
        if let BodyKind::Kinematic(path) = kind {
            if !(path.amplitude.is_finite() && path.omega.is_finite() && path.phase.is_finite()) {
                return Err(DynamicsError::Trajectory);
            }
            body.set_time(0.0);
        }
        Ok(body)
    }

    pub fn with_pose(mut self, position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        self.position = position;
        self.orientation = orientation;
        if let BodyKind::Kinematic(path) = &mut self.kind {
            path.origin = position;
            let p = path.position(0.0);
            self.position = p;
        }
        self
    }

    /// Sets initial velocities. Prismatic bodies keep only the axial
    /// component; static and kinematic bodies reject or ignore them.
    pub fn with_velocity(
        mut self,
        lin_vel: Vector3<f64>,
        ang_vel_body: Vector3<f64>,
    ) -> Result<Self, DynamicsError> {
        match self.kind {
            BodyKind::Dynamic => {
                self.lin_vel = lin_vel;
                self.ang_vel_body = ang_vel_body;
            }
            BodyKind::PrismaticAlong(axis) => {
                self.lin_vel = axis.into_inner() * axis.dot(&lin_vel);
            }
            BodyKind::Static => {
                if lin_vel != Vector3::zeros() || ang_vel_body != Vector3::zeros() {
                    return Err(DynamicsError::MovingStatic);
                }
            }
            BodyKind::Kinematic(_) => {}
        }
        Ok(self)
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }

    /// True for bodies whose state is integrated (dynamic and prismatic).
    pub fn is_integrated(&self) -> bool {
        matches!(self.kind, BodyKind::Dynamic | BodyKind::PrismaticAlong(_))
    }

    pub fn is_static(&self) -> bool {
        matches!(self.kind, BodyKind::Static)
    }

    pub fn pose(&self) -> Pose {
        Pose::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.position)
    }

    pub fn ang_vel_world(&self) -> Vector3<f64> {
        self.orientation * self.ang_vel_body
    }

    /// Velocity of the material point currently at `p`.
    pub fn velocity_at(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.lin_vel + self.ang_vel_world().cross(&(p.coords - self.position))
    }

    /// Moves a kinematic body to its prescribed state at time `t`.
    pub fn set_time(&mut self, t: f64) {
        if let BodyKind::Kinematic(path) = self.kind {
            self.position = path.position(t);
            self.lin_vel = path.velocity(t);
            self.ang_vel_body = Vector3::zeros();
        }
    }
}

/// Linear and body-frame angular acceleration under `wrench`, whose force is
/// in world coordinates and whose torque is in body coordinates.
pub fn equations_of_motion(body: &RigidBody, wrench: &Wrench) -> (Vector3<f64>, Vector3<f64>) {
    match body.kind {
        BodyKind::Dynamic => {
            let acc = wrench.force / body.mass;
            let w = body.ang_vel_body;
            let gyro = w.cross(&(body.inertia * w));
            (acc, body.inertia_inv * (wrench.torque - gyro))
        }
        BodyKind::PrismaticAlong(axis) => {
            let acc = axis.into_inner() * (axis.dot(&wrench.force) / body.mass);
            (acc, Vector3::zeros())
        }
        BodyKind::Static | BodyKind::Kinematic(_) => (Vector3::zeros(), Vector3::zeros()),
    }
}

/// `q̇ = ½ q ⊗ (0, ω)` with ω in the body frame.
pub fn quaternion_rate(q: &Quaternion<f64>, ang_vel_body: &Vector3<f64>) -> Quaternion<f64> {
    let omega = Quaternion::from_parts(0.0, *ang_vel_body);
    (q * omega) * 0.5
}

pub fn renormalize(q: Quaternion<f64>) -> Result<UnitQuaternion<f64>, DynamicsError> {
    let norm = q.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(DynamicsError::ZeroQuaternion);
    }
    Ok(UnitQuaternion::new_unchecked(q / norm))
}

/// Translational plus rotational kinetic energy (J).
pub fn kinetic_energy(body: &RigidBody) -> f64 {
    let w = body.ang_vel_body;
    0.5 * body.mass * body.lin_vel.norm_squared() + 0.5 * w.dot(&(body.inertia * w))
}
