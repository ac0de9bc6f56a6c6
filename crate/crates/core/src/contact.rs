//! Effort laws for overlapping pairs and per-pair contact bookkeeping.
//!
//! The reaction on body A is
//! `f = δ_eff (g1 v + g2 v̇_f) s_n`, applied at the overlap centroid `c`,
//! where `v̇_f` comes from a second-order low-pass filter driven by the
//! overlap volume and `δ_eff = 1 + δ_i` adds a Gaussian pulse shortly after
//! first contact. Body B receives the exact negation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::dynamics::RigidBody;
use crate::mesh::OverlapResult;

/// Floor on the frozen impact speed (m/s).
pub const EPSILON_V: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("initial filter volume must be nonnegative, got {0}")]
    NegativeVolume(f64),
    #[error("contact parameter {name} must be positive and finite, got {value}")]
    Parameter { name: &'static str, value: f64 },
}

/// Force and torque about a body's center of mass (world frame).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Force `force` applied at `point` on a body centered at `center`.
    pub fn at_point(force: Vector3<f64>, point: &Point3<f64>, center: &Point3<f64>) -> Self {
        Self {
            force,
            torque: (point - center).cross(&force),
        }
    }
}

impl std::ops::AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Self) {
        self.force += rhs.force;
        self.torque += rhs.torque;
    }
}

/// Impedance and filter parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// Stiffness gain (N/m³).
    pub g1: f64,
    /// Damping gain (N·s/m³).
    pub g2: f64,
    /// Pulse magnitude.
    pub g_i: f64,
    /// Pulse delay, in pulse widths.
    pub g_t: f64,
    /// Target depth (m).
    pub d_t: f64,
    pub zeta: f64,
    /// Filter natural frequency (rad/s).
    pub omega_n: f64,
}

impl Default for ContactParams {
    /// Desk-scale baseline: 740 N/cm and 50 N·s/m spread over a 25 cm²
    /// reference face, pulse gain 250, 2 mm target depth.
    fn default() -> Self {
        Self {
            g1: 2.96e7,
            g2: 2.0e4,
            g_i: 250.0,
            g_t: 1.0,
            d_t: 0.002,
            zeta: 1.0,
            omega_n: 2.0 * PI * 500.0,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), ContactError> {
        let fields = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("g_i", self.g_i),
            ("g_t", self.g_t),
            ("d_t", self.d_t),
            ("zeta", self.zeta),
            ("omega_n", self.omega_n),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ContactError::Parameter { name, value });
            }
        }
        Ok(())
    }
}

/// Regularized Coulomb plus viscous friction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self {
            mu: 0.2,
            beta: 0.2,
            gamma: 1.0,
        }
    }
}

impl FrictionParams {
    pub fn frictionless() -> Self {
        Self {
            mu: 0.0,
            beta: 0.0,
            gamma: 1.0,
        }
    }
}

/// Low-pass filter state: filtered volume and its rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState {
    pub v_f: f64,
    pub v_f_dot: f64,
}

/// Right-hand side of `v̈_f = −2ζω_n v̇_f + ω_n²(v − v_f)` as a first-order
/// system.
pub fn filter_rhs(state: &FilterState, v: f64, zeta: f64, omega_n: f64) -> (f64, f64) {
    (
        state.v_f_dot,
        -2.0 * zeta * omega_n * state.v_f_dot + omega_n * omega_n * (v - state.v_f),
    )
}

pub fn init_filter(v0: f64) -> Result<FilterState, ContactError> {
    if !(v0 >= 0.0) {
        return Err(ContactError::NegativeVolume(v0));
    }
    Ok(FilterState {
        v_f: v0,
        v_f_dot: 0.0,
    })
}

/// Bookkeeping for one body pair from first overlap to separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEpisode {
    /// Body ids, `pair.0 < pair.1`; the lower id plays body A.
    pub pair: (usize, usize),
    pub t_c: f64,
    /// Approach speed at first contact, at least [`EPSILON_V`].
    pub dv_c0: f64,
    pub filter: FilterState,
    pub active: bool,
}

pub type EpisodeTable = BTreeMap<(usize, usize), ContactEpisode>;

/// Approach speed of B relative to A at `c` along `s_n` (positive when the
/// bodies close in).
pub fn relative_contact_speed(
    body_a: &RigidBody,
    body_b: &RigidBody,
    c: &Point3<f64>,
    s_n: &Vector3<f64>,
) -> f64 {
    (body_b.velocity_at(c) - body_a.velocity_at(c)).dot(s_n)
}

/// Multiplier `1 + δ_i(t)` with the Gaussian pulse
/// `δ_i = i_v / (√π d_v) · exp(−(t − t_peak)² / d_v²)`,
/// `i_v = g_i (m_A + m_B) Δv`, `d_v = d_t / Δv`, `t_peak = t_c + g_t d_v`.
pub fn transient_gain(
    t: f64,
    episode: &ContactEpisode,
    params: &ContactParams,
    mass_a: f64,
    mass_b: f64,
) -> f64 {
    1.0 + pulse(t, episode, params, mass_a, mass_b)
}

fn pulse(t: f64, episode: &ContactEpisode, params: &ContactParams, mass_a: f64, mass_b: f64) -> f64 {
    let dv = episode.dv_c0.max(EPSILON_V);
    let impulse = params.g_i * (mass_a + mass_b) * dv;
    let width = params.d_t / dv;
    let t_peak = episode.t_c + params.g_t * width;
    let x = (t - t_peak) / width;
    impulse / (PI.sqrt() * width) * (-x * x).exp()
}

/// Reaction wrench on the receiving body centered at `p_o`. The impedance
/// magnitude is clamped at zero so contacts never pull.
pub fn reaction_wrench(
    overlap: &OverlapResult,
    filter: &FilterState,
    delta_eff: f64,
    params: &ContactParams,
    p_o: &Point3<f64>,
) -> Wrench {
    let magnitude = (delta_eff * (params.g1 * overlap.v + params.g2 * filter.v_f_dot)).max(0.0);
    Wrench::at_point(overlap.s_n.into_inner() * magnitude, &overlap.c, p_o)
}

/// `f_f = −(μ‖f_n‖ tanh(γ‖v_r‖) + β‖v_r‖) v_r/‖v_r‖`, zero below 1e-9 m/s.
pub fn friction_force(f_n: &Vector3<f64>, v_r: &Vector3<f64>, params: &FrictionParams) -> Vector3<f64> {
    let speed = v_r.norm();
    if speed < 1e-9 {
        return Vector3::zeros();
    }
    let magnitude = params.mu * f_n.norm() * (params.gamma * speed).tanh() + params.beta * speed;
    -v_r * (magnitude / speed)
}

/// Updates the episode table from the overlaps found at a step boundary.
///
/// New pairs open an episode at `t` with the clamped approach speed and a
/// filter initialized at the current volume; pairs that no longer overlap
/// are dropped; continuing pairs are left untouched.
pub fn update_episodes(
    episodes: &mut EpisodeTable,
    overlaps: &[((usize, usize), OverlapResult)],
    t: f64,
    bodies: &[RigidBody],
) {
    episodes.retain(|pair, _| overlaps.iter().any(|(p, _)| p == pair));
    for ((a, b), overlap) in overlaps {
        debug_assert!(a < b);
        episodes.entry((*a, *b)).or_insert_with(|| {
            let dv = relative_contact_speed(&bodies[*a], &bodies[*b], &overlap.c, &overlap.s_n);
            ContactEpisode {
                pair: (*a, *b),
                t_c: t,
                dv_c0: dv.max(EPSILON_V),
                filter: init_filter(overlap.v.max(0.0)).expect("volume is nonnegative"),
                active: true,
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BodyKind;
    use crate::mesh::{cuboid, ConvexShape};
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Unit};
    use std::sync::Arc;

    fn body(kind: BodyKind) -> RigidBody {
        let shape = Arc::new(ConvexShape::new(cuboid(Vector3::new(1.0, 1.0, 1.0)).unwrap()).unwrap());
        RigidBody::new(shape, 0.2, Matrix3::identity(), kind).unwrap()
    }

    fn episode(t_c: f64, dv: f64) -> ContactEpisode {
        ContactEpisode {
            pair: (0, 1),
            t_c,
            dv_c0: dv,
            filter: FilterState::default(),
            active: true,
        }
    }

    fn overlap(v: f64, c: Point3<f64>, s_n: Vector3<f64>) -> OverlapResult {
        OverlapResult {
            intersection: cuboid(Vector3::new(1.0, 1.0, 1.0)).unwrap(),
            c,
            v,
            s_d: s_n,
            s_n: Unit::new_normalize(s_n),
        }
    }

    #[test]
    fn filter_fixed_point_and_substitution() {
        let s = FilterState { v_f: 0.7, v_f_dot: 0.0 };
        assert_eq!(filter_rhs(&s, 0.7, 1.0, 10.0), (0.0, 0.0));
        assert_eq!(filter_rhs(&FilterState::default(), 1.0, 1.0, 10.0), (0.0, 100.0));
        let init = init_filter(1e-6).unwrap();
        assert_eq!(init, FilterState { v_f: 1e-6, v_f_dot: 0.0 });
        assert_eq!(filter_rhs(&init, 1e-6, 1.0, 2000.0), (0.0, 0.0));
        assert_eq!(init_filter(0.0).unwrap(), FilterState::default());
        assert_eq!(init_filter(-1.0), Err(ContactError::NegativeVolume(-1.0)));
    }

    #[test]
    fn relative_speed_cases() {
        let a = body(BodyKind::Dynamic);
        let mut b = body(BodyKind::Dynamic);
        b.lin_vel = Vector3::new(-1.0, 0.0, 0.0);
        let c = Point3::new(0.5, 0.0, 0.0);
        assert_relative_eq!(relative_contact_speed(&a, &b, &c, &-Vector3::x()), 1.0);

        let mut same = a.clone();
        same.lin_vel = Vector3::new(0.3, 0.1, 0.0);
        assert_eq!(relative_contact_speed(&same, &same.clone(), &c, &Vector3::x()), 0.0);

        let mut spinning = body(BodyKind::Dynamic);
        spinning.ang_vel_body = Vector3::new(0.0, 0.0, 1.0);
        let at_rest = body(BodyKind::Dynamic);
        let speed = relative_contact_speed(&spinning, &at_rest, &Point3::new(0.0, 1.0, 0.0), &Vector3::x());
        assert_relative_eq!(speed, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn transient_gain_peak_with_grasp_parameters() {
        let params = ContactParams::default();
        let e = episode(0.3, 0.1);
        let d_v = 0.002 / 0.1;
        let t_peak = 0.3 + d_v;
        let peak = transient_gain(t_peak, &e, &params, 0.2, 0.2);
        assert_relative_eq!(peak, 1.0 + 10.0 / (PI.sqrt() * 0.02), max_relative = 1e-12);
        assert_relative_eq!(peak, 283.0948, epsilon = 1e-3);
        let tail = transient_gain(t_peak + 6.0 * d_v, &e, &params, 0.2, 0.2);
        assert!(tail - 1.0 < 1e-15 * (peak - 1.0));
        assert!(transient_gain(t_peak - 0.01, &e, &params, 0.2, 0.2) < peak);
    }

    #[test]
    fn resting_contact_has_unit_gain() {
        let e = episode(0.0, 0.0);
        let g = transient_gain(0.0, &e, &ContactParams::default(), 0.2, 0.2);
        assert!((g - 1.0).abs() < 1e-3, "{g}");
    }

    #[test]
    fn reaction_wrench_cases() {
        let params = ContactParams {
            g1: 1e8,
            ..ContactParams::default()
        };
        let filter = FilterState::default();
        let p_o = Point3::origin();
        let r = overlap(1e-6, Point3::new(0.5, 0.0, 0.0), -Vector3::x());
        let w = reaction_wrench(&r, &filter, 1.0, &params, &p_o);
        assert_relative_eq!(w.force, Vector3::new(-100.0, 0.0, 0.0), epsilon = 1e-9);
        assert_eq!(w.torque, Vector3::zeros());

        let r = overlap(1e-6, Point3::new(0.0, 0.1, 0.0), -Vector3::x());
        let w = reaction_wrench(&r, &filter, 1.0, &params, &p_o);
        assert_relative_eq!(w.torque, Vector3::new(0.0, 0.0, 10.0), epsilon = 1e-9);

        let r = overlap(0.0, Point3::new(0.0, 0.1, 0.0), -Vector3::x());
        assert_eq!(reaction_wrench(&r, &filter, 1.0, &params, &p_o), Wrench::zero());
    }

    #[test]
    fn separating_contact_does_not_pull() {
        let params = ContactParams::default();
        let r = overlap(1e-7, Point3::origin(), Vector3::z());
        let fast_exit = FilterState { v_f: 1e-7, v_f_dot: -1.0 };
        assert_eq!(reaction_wrench(&r, &fast_exit, 1.0, &params, &Point3::origin()).force, Vector3::zeros());
    }

    #[test]
    fn friction_cases() {
        let params = FrictionParams::default();
        assert_eq!(friction_force(&Vector3::z(), &Vector3::zeros(), &params), Vector3::zeros());
        let f = friction_force(&Vector3::z(), &Vector3::x(), &params);
        assert_relative_eq!(f, Vector3::new(-(0.2 * 1f64.tanh() + 0.2), 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(f.x, -0.352319, epsilon = 1e-6);

        let sharp = FrictionParams { mu: 0.2, beta: 0.0, gamma: 1e6 };
        let f = friction_force(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(0.0, 0.01, 0.0), &sharp);
        assert_relative_eq!(f.norm(), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn episode_lifecycle() {
        let bodies = vec![body(BodyKind::Static), body(BodyKind::Dynamic)];
        let mut table = EpisodeTable::new();
        update_episodes(&mut table, &[], 0.0, &bodies);
        assert!(table.is_empty());

        let r = overlap(2e-7, Point3::origin(), Vector3::z());
        update_episodes(&mut table, &[((0, 1), r.clone())], 0.3, &bodies);
        let e = table[&(0, 1)];
        assert_eq!(e.t_c, 0.3);
        assert_eq!(e.filter, FilterState { v_f: 2e-7, v_f_dot: 0.0 });
        assert_eq!(e.dv_c0, EPSILON_V);

        // Continuing overlap keeps the original bookkeeping.
        update_episodes(&mut table, &[((0, 1), overlap(5e-7, Point3::origin(), Vector3::z()))], 0.4, &bodies);
        assert_eq!(table[&(0, 1)].t_c, 0.3);

        update_episodes(&mut table, &[], 0.5, &bodies);
        assert!(table.is_empty());
        update_episodes(&mut table, &[((0, 1), r)], 0.9, &bodies);
        assert_eq!(table[&(0, 1)].t_c, 0.9);
    }
}
