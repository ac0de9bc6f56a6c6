use std::sync::Arc;

use compliant_core::dynamics::{rk45_integrate, Rk45Options};
use compliant_core::mesh::{cuboid, NormalMode};
use compliant_core::scene::{SimSettings, World};
use compliant_core::{BodyKind, ContactParams, ConvexShape, FrictionParams, RigidBody};
use nalgebra::{Matrix3, UnitQuaternion, Vector3};

const EDGE: f64 = 0.05;
const MASS: f64 = 0.2;

fn cube(kind: BodyKind) -> RigidBody {
    let shape = Arc::new(ConvexShape::new(cuboid(Vector3::repeat(EDGE)).unwrap()).unwrap());
    let inertia = Matrix3::from_diagonal_element(MASS * EDGE * EDGE / 6.0);
    RigidBody::new(shape, MASS, inertia, kind).unwrap()
}

fn settings(rel_tol: f64, abs_tol: f64) -> SimSettings {
    SimSettings {
        integrator: Rk45Options {
            rel_tol,
            abs_tol,
            h_max: 1e-3,
        },
        ..SimSettings::default()
    }
}

#[test]
fn free_fall_matches_kinematics() {
    let mut world = World::new(ContactParams::default(), FrictionParams::default(), settings(1e-10, 1e-13));
    world.add_body("cube", cube(BodyKind::Dynamic), Vector3::zeros());
    world.step(1.0).unwrap();
    let z = world.bodies[0].position.z;
    assert!((z + 0.5 * 9.81).abs() < 1e-9, "{z}");
}

#[test]
fn torque_free_body_conserves_momentum_and_energy() {
    let shape = Arc::new(ConvexShape::new(cuboid(Vector3::new(0.3, 0.2, 0.1)).unwrap()).unwrap());
    let inertia = Matrix3::from_diagonal(&Vector3::new(0.02, 0.035, 0.05));
    let body = RigidBody::new(shape, 1.0, inertia, BodyKind::Dynamic)
        .unwrap()
        .with_velocity(Vector3::zeros(), Vector3::new(1.0, 0.3, -0.7))
        .unwrap();
    let mut world = World::new(ContactParams::default(), FrictionParams::default(), settings(1e-9, 1e-12));
    world.gravity = Vector3::zeros();
    world.add_body("spinner", body, Vector3::zeros());

    let momentum = |b: &RigidBody| b.orientation * (b.inertia() * b.ang_vel_body);
    let energy = |b: &RigidBody| 0.5 * b.ang_vel_body.dot(&(b.inertia() * b.ang_vel_body));
    let (l0, e0) = (momentum(&world.bodies[0]), energy(&world.bodies[0]));
    world.step(10.0).unwrap();
    let b = &world.bodies[0];
    assert!((momentum(b) - l0).norm() <= 1e-6 * l0.norm(), "{:?} vs {:?}", momentum(b), l0);
    assert!((energy(b) - e0).abs() <= 1e-6 * e0);
}

#[test]
fn principal_spin_matches_closed_form_rotation() {
    let rate = 2.0;
    let body = cube(BodyKind::Dynamic)
        .with_velocity(Vector3::zeros(), Vector3::new(0.0, 0.0, rate))
        .unwrap();
    let mut world = World::new(ContactParams::default(), FrictionParams::default(), settings(1e-10, 1e-13));
    world.gravity = Vector3::zeros();
    world.add_body("cube", body, Vector3::zeros());
    for sample in world.step(1.0).unwrap() {
        let expected = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rate * sample.t);
        assert!(sample.bodies[0].orientation.angle_to(&expected) < 1e-8, "t = {}", sample.t);
        let state = world.pack_state();
        let norm = state[3..7].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fifth_order_convergence_at_fixed_step() {
    // Loose tolerances make h_max the step size.
    let error = |h: f64| {
        let options = Rk45Options {
            rel_tol: 1e3,
            abs_tol: 1e3,
            h_max: h,
        };
        let out = rk45_integrate(|_, y, dy| dy[0] = -y[0], &[1.0], 0.0, 1.0, options).unwrap();
        (out.last().unwrap().1[0] - (-1f64).exp()).abs()
    };
    let ratio = error(0.1) / error(0.05);
    assert!((20.0..45.0).contains(&ratio), "{ratio}");
}

#[test]
fn prismatic_body_stays_on_its_axis() {
    let axis = Vector3::new(1.0, 1.0, 0.0).normalize();
    let body = cube(BodyKind::PrismaticAlong(nalgebra::Unit::new_normalize(axis)))
        .with_velocity(Vector3::new(0.3, -0.1, 0.2), Vector3::new(1.0, 2.0, 3.0))
        .unwrap();
    let mut world = World::new(ContactParams::default(), FrictionParams::default(), SimSettings::default());
    world.add_body("finger", body, Vector3::new(0.5, -2.0, 1.0));
    for sample in world.step(0.2).unwrap() {
        let b = &sample.bodies[0];
        let off_axis = b.lin_vel - axis * axis.dot(&b.lin_vel);
        assert!(off_axis.norm() < 1e-15);
        assert_eq!(b.ang_vel_body, Vector3::zeros());
        assert!((b.position - axis * axis.dot(&b.position)).norm() < 1e-15);
    }
}

/// Two equal cubes, gravity and friction off, A moving at `speed` toward B.
fn collision(contact: ContactParams, speed: f64) -> World {
    let mut world = World::new(contact, FrictionParams::frictionless(), SimSettings::default());
    world.settings.output_step = 1e-4;
    world.gravity = Vector3::zeros();
    let a = cube(BodyKind::Dynamic)
        .with_pose(Vector3::new(-EDGE - 5e-4, 0.0, 0.0), UnitQuaternion::identity())
        .with_velocity(Vector3::new(speed, 0.0, 0.0), Vector3::zeros())
        .unwrap();
    world.add_body("a", a, Vector3::zeros());
    world.add_body("b", cube(BodyKind::Dynamic), Vector3::zeros());
    world
}

#[test]
fn collision_conserves_momentum_and_never_creates_energy() {
    let contact = ContactParams {
        g_i: 1e-3,
        ..ContactParams::default()
    };
    let speed = 0.5;
    let mut world = collision(contact, speed);
    let p0 = MASS * speed;
    let e0 = 0.5 * MASS * speed * speed;
    let samples = world.step(0.02).unwrap();
    assert!(samples.iter().any(|s| s.contacts[0].force > 1.0), "no collision happened");
    for s in &samples {
        let p: Vector3<f64> = s.bodies.iter().map(|b| b.lin_vel * MASS).sum();
        assert!((p - Vector3::new(p0, 0.0, 0.0)).norm() <= 1e-4 * p0, "t = {}: {p:?}", s.t);
        let e: f64 = s.bodies.iter().map(|b| b.kinetic_energy).sum();
        assert!(e <= e0 * (1.0 + 1e-3), "t = {}: {e} > {e0}", s.t);
    }
    // The bodies separate and B leaves faster than A.
    let last = &samples.last().unwrap().bodies;
    assert!(last[1].lin_vel.x > last[0].lin_vel.x);
}

#[test]
fn identical_runs_are_bit_identical() {
    let run = || {
        let mut world = collision(ContactParams::default(), 0.3);
        world.friction_params = FrictionParams::default();
        world.step(0.01).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn resting_cube_settles_on_floor() {
    let floor_shape = Arc::new(ConvexShape::new(cuboid(Vector3::new(1.0, 1.0, 0.1)).unwrap()).unwrap());
    let floor = RigidBody::new(floor_shape, 10.0, Matrix3::identity(), BodyKind::Static)
        .unwrap()
        .with_pose(Vector3::new(0.0, 0.0, -0.05), UnitQuaternion::identity());
    let params = ContactParams::default();
    let mut world = World::new(params, FrictionParams::default(), SimSettings::default());
    world.settings.output_step = 0.01;
    world.settings.normal_mode = NormalMode::VolumeGradient;
    world.add_body("floor", floor, Vector3::zeros());
    let start = cube(BodyKind::Dynamic).with_pose(Vector3::new(0.0, 0.0, EDGE / 2.0 - 1e-5), UnitQuaternion::identity());
    world.add_body("cube", start, Vector3::zeros());
    let samples = world.step(1.5).unwrap();
    let weight = MASS * 9.81;
    for s in samples.iter().filter(|s| s.t >= 1.0) {
        let contact = &s.contacts[0];
        assert!((contact.force - weight).abs() <= 0.02 * weight, "t = {}: {}", s.t, contact.force);
        let depth = contact.v / (EDGE * EDGE);
        assert!(depth < 2.0 * params.d_t, "{depth}");
    }
}
