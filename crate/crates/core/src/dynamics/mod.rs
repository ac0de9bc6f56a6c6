//! Rigid bodies, Newton-Euler equations of motion and time integration.

mod body;
mod integrator;

pub use body::{
    equations_of_motion, kinetic_energy, quaternion_rate, renormalize, BodyKind, RigidBody,
    Sinusoid,
};
pub use integrator::{rk45_integrate, Dopri5, IntegrationError, IntegratorStats, Rk45Options};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("mass must be positive and finite, got {0}")]
    Mass(f64),
    #[error("inertia tensor must be symmetric positive definite")]
    Inertia,
    #[error("cannot normalize a zero quaternion")]
    ZeroQuaternion,
    #[error("static bodies must have zero velocity")]
    MovingStatic,
    #[error("trajectory parameters must be finite")]
    Trajectory,
}
