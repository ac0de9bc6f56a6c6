//! Turning a configuration into a [`World`].

use std::sync::Arc;

use compliant_core::mesh::{cuboid, icosphere, load_obj, NormalMode};
use compliant_core::scene::{EnergyReference, GeometryMode, SimSettings};
use compliant_core::{BodyKind, ConvexShape, RigidBody, Sinusoid, TriMesh, World};
use nalgebra::{Matrix3, Point3, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BodyConfig, GeometryConfig, KindConfig, NormalModeConfig, ScenarioConfig, ShapeConfig};
use crate::HarnessError;

/// Volume, centroid and inertia tensor about the centroid of a closed mesh
/// of unit density, by signed tetrahedra against the origin.
pub fn mass_properties(mesh: &TriMesh) -> (f64, Point3<f64>, Matrix3<f64>) {
    let mut volume = 0.0;
    let mut first = Vector3::zeros();
    // Second moment integral of x xᵀ.
    let mut second = Matrix3::zeros();
    for k in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle_points(k).map(|p| p.coords);
        let v = a.dot(&b.cross(&c)) / 6.0;
        volume += v;
        first += v * (a + b + c) / 4.0;
        let s = a + b + c;
        second += v / 20.0 * (a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose());
    }
    let centroid = first / volume;
    let about_centroid = second - volume * centroid * centroid.transpose();
    let inertia = Matrix3::identity() * about_centroid.trace() - about_centroid;
    (volume, Point3::from(centroid), inertia)
}

fn body_error(body: &BodyConfig, message: impl ToString) -> HarnessError {
    HarnessError::Body {
        name: body.name.clone(),
        message: message.to_string(),
    }
}

fn shape_mesh(config: &ScenarioConfig, body: &BodyConfig) -> Result<TriMesh, HarnessError> {
    let mesh = match &body.shape {
        ShapeConfig::Cuboid(e) => cuboid(Vector3::from(*e)),
        ShapeConfig::Icosphere { radius, subdivisions } => icosphere(*radius, *subdivisions),
        ShapeConfig::Obj(path) => load_obj(config.base_dir.join(path)),
    }
    .map_err(|e| body_error(body, e))?;
    // Body frames sit at the center of mass.
    let (_, centroid, _) = mass_properties(&mesh);
    Ok(mesh.translated(&-centroid.coords))
}

fn vector(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v)
}

fn build_body(config: &ScenarioConfig, body: &BodyConfig, jitter: Vector3<f64>) -> Result<RigidBody, HarnessError> {
    let mesh = shape_mesh(config, body)?;
    let inertia = match body.inertia {
        Some(moments) => Matrix3::from_diagonal(&vector(moments)),
        None => {
            let (volume, _, unit) = mass_properties(&mesh);
            let tensor = unit * (body.mass / volume);
            // Symmetrize away rounding.
            (tensor + tensor.transpose()) * 0.5
        }
    };
    let shape = Arc::new(ConvexShape::new(mesh).map_err(|e| body_error(body, e))?);
    let orientation = UnitQuaternion::from_scaled_axis(vector(body.rotation));
    let mut position = vector(body.position);
    let kind = match &body.kind {
        KindConfig::Dynamic => BodyKind::Dynamic,
        KindConfig::Static => BodyKind::Static,
        KindConfig::Prismatic(axis) => BodyKind::PrismaticAlong(Unit::new_normalize(vector(*axis))),
        KindConfig::Kinematic(path) => {
            let axis = Unit::new_normalize(vector(path.axis));
            // The configured position is where the body is at t = 0.
            position -= axis.into_inner() * (path.amplitude * path.phase.sin());
            BodyKind::Kinematic(Sinusoid {
                origin: position,
                axis,
                amplitude: path.amplitude,
                omega: path.omega,
                phase: path.phase,
            })
        }
    };
    if matches!(kind, BodyKind::Dynamic | BodyKind::PrismaticAlong(_)) {
        position += jitter;
    }
    let rigid = RigidBody::new(shape, body.mass, inertia, kind).map_err(|e| body_error(body, e))?;
    rigid
        .with_pose(position, orientation)
        .with_velocity(vector(body.velocity), vector(body.angular_velocity))
        .map_err(|e| body_error(body, e))
}

/// Builds the world described by a validated configuration.
pub fn build_world(config: &ScenarioConfig) -> Result<World, HarnessError> {
    let settings = SimSettings {
        integrator: config.integrator_options(),
        output_step: config.output_step,
        normal_mode: match config.normal_mode {
            NormalModeConfig::CentroidToContact => NormalMode::CentroidToContact,
            NormalModeConfig::InwardFaceNormal => NormalMode::InwardFaceNormal,
            NormalModeConfig::VolumeGradient => NormalMode::VolumeGradient,
        },
        geometry: match config.geometry {
            GeometryConfig::PerStage => GeometryMode::PerStage,
            GeometryConfig::FrozenPerStep => GeometryMode::FrozenPerStep,
        },
        onset_resolution: config.integrator.onset_resolution,
    };
    let mut world = World::new(config.contact_params(), config.friction_params(), settings);
    world.gravity = vector(config.gravity);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let j = config.position_jitter;
    for body in &config.bodies {
        let jitter = if j > 0.0 {
            Vector3::from_fn(|_, _| rng.gen_range(-j..=j))
        } else {
            Vector3::zeros()
        };
        let rigid = build_body(config, body, jitter)?;
        world.add_body(body.name.clone(), rigid, vector(body.applied_force));
    }
    if let Some(reference) = &config.energy_reference {
        // Names were checked during validation.
        let id = |name: &str| world.body_id(name).expect("validated body name");
        world.energy_reference = Some(EnergyReference {
            object: id(&reference.object),
            reference: id(&reference.reference),
        });
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::path::Path;

    #[test]
    fn box_inertia_matches_closed_form() {
        let (x, y, z) = (0.3, 0.2, 0.1);
        let (volume, centroid, inertia) = mass_properties(&cuboid(Vector3::new(x, y, z)).unwrap());
        assert!((volume - x * y * z).abs() < 1e-15);
        assert!(centroid.coords.norm() < 1e-15);
        let m = volume;
        let expected = Matrix3::from_diagonal(&Vector3::new(
            m * (y * y + z * z) / 12.0,
            m * (x * x + z * z) / 12.0,
            m * (x * x + y * y) / 12.0,
        ));
        assert!((inertia - expected).abs().max() < 1e-15, "{inertia}");
    }

    #[test]
    fn offset_mesh_is_recentered() {
        let mesh = cuboid(Vector3::new(1.0, 2.0, 3.0)).unwrap().translated(&Vector3::new(5.0, -1.0, 2.0));
        let (_, centroid, inertia) = mass_properties(&mesh);
        assert!((centroid.coords - Vector3::new(5.0, -1.0, 2.0)).norm() < 1e-12);
        assert!((inertia[(0, 0)] - 6.0 * (4.0 + 9.0) / 12.0).abs() < 1e-12);
    }

    #[test]
    fn kinematic_body_starts_at_configured_position() {
        let text = r#"{"bodies": [{"name": "palm", "shape": {"cuboid": [1, 1, 1]}, "mass": 1,
            "position": [0.2, 0, 0],
            "kind": {"kinematic": {"axis": [1, 0, 0], "amplitude": 0.05, "omega": 6.0, "phase": -1.5707963267948966}}}]}"#;
        let world = build_world(&parse_config(text, Path::new(".")).unwrap()).unwrap();
        assert!((world.bodies[0].position - Vector3::new(0.2, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn jitter_is_seeded() {
        let text = r#"{"seed": 3, "position_jitter": 0.001, "bodies": [
            {"name": "a", "shape": {"cuboid": [1, 1, 1]}, "mass": 1, "kind": "dynamic"},
            {"name": "floor", "shape": {"cuboid": [1, 1, 1]}, "mass": 1, "kind": "static", "position": [0, 0, -2]}]}"#;
        let config = parse_config(text, Path::new(".")).unwrap();
        let (w1, w2) = (build_world(&config).unwrap(), build_world(&config).unwrap());
        let p = w1.bodies[0].position;
        assert_eq!(p, w2.bodies[0].position);
        assert!(p != Vector3::zeros() && p.amax() <= 0.001);
        assert_eq!(w1.bodies[1].position, Vector3::new(0.0, 0.0, -2.0));
    }
}
