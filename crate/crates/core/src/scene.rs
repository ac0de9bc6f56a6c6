//! World assembly and the simulation loop.
//!
//! Each call to [`World::step`] walks a sequence of boundaries at most
//! `h_max` apart. At a boundary the broad phase and overlap characterization
//! run, episodes open or close, and the augmented state (integrated bodies
//! followed by episode filter states) is advanced to the next boundary with
//! the adaptive integrator. Overlap geometry is re-evaluated at every stage
//! unless [`GeometryMode::FrozenPerStep`] is selected.

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::contact::{
    filter_rhs, friction_force, reaction_wrench, transient_gain, update_episodes, ContactParams,
    EpisodeTable, FilterState, FrictionParams, Wrench,
};
use crate::dynamics::{
    equations_of_motion, kinetic_energy, quaternion_rate, BodyKind, Dopri5, IntegrationError,
    IntegratorStats, RigidBody, Rk45Options, Sinusoid,
};
use crate::mesh::{
    direction_vector, intersect_shapes, MeshError, NormalMode, OverlapResult,
};

/// Integrated values per dynamic body: position, quaternion, velocity,
/// body angular velocity.
const BODY_STATE_LEN: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("integration failed at t = {t} s (active pairs {pairs:?}): {source}")]
    Integration {
        t: f64,
        pairs: Vec<(usize, usize)>,
        #[source]
        source: IntegrationError,
    },
    #[error("end time {t_end} is before the current time {time}")]
    Time { time: f64, t_end: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GeometryMode {
    /// Recompute overlaps at every right-hand-side evaluation.
    #[default]
    PerStage,
    /// Reuse the overlaps found at the step boundary for the whole step.
    FrozenPerStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub integrator: Rk45Options,
    /// Spacing of emitted metrics samples (s).
    pub output_step: f64,
    pub normal_mode: NormalMode,
    pub geometry: GeometryMode,
    /// Steps in which a new contact appears are bisected until they are at
    /// most this long (s).
    pub onset_resolution: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            integrator: Rk45Options::default(),
            output_step: 1e-3,
            normal_mode: NormalMode::default(),
            geometry: GeometryMode::default(),
            onset_resolution: 1e-6,
        }
    }
}

/// Measured-versus-prescribed kinetic energy bookkeeping: `object` should
/// move rigidly with the kinematic body `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyReference {
    pub object: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactSample {
    pub pair: (usize, usize),
    /// Magnitude of the reaction force (N).
    pub force: f64,
    pub v: f64,
    pub v_f_dot: f64,
    pub delta_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodySample {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub lin_vel: Vector3<f64>,
    pub ang_vel_body: Vector3<f64>,
    pub kinetic_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSample {
    pub t: f64,
    /// One entry per monitored pair, in [`World::monitored_pairs`] order.
    pub contacts: Vec<ContactSample>,
    pub bodies: Vec<BodySample>,
    pub expected_energy: Option<f64>,
    pub ke_ratio: Option<f64>,
}

/// Contact contribution of one episode at one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactReport {
    pub pair: (usize, usize),
    pub v: f64,
    pub v_f_dot: f64,
    pub delta_eff: f64,
    /// Reaction force on the pair's first body (N).
    pub force: Vector3<f64>,
    /// Friction force on the pair's first body (N).
    pub friction: Vector3<f64>,
    pub c: Point3<f64>,
}

/// Output of one effort assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Efforts {
    /// Net wrench per body; torques in world coordinates.
    pub wrenches: Vec<Wrench>,
    /// Overlap volume feeding each episode's filter, in episode order.
    pub filter_inputs: Vec<f64>,
    pub contacts: Vec<ContactReport>,
    pub warnings: usize,
}

/// Kinetic energy of a body of `mass` rigidly following `path` at `t`.
pub fn expected_energy(path: &Sinusoid, mass: f64, t: f64) -> f64 {
    0.5 * mass * path.velocity(t).norm_squared()
}

/// `measured / expected`, with 1 when both vanish and +∞ when only the
/// reference does.
pub fn kinetic_energy_ratio(measured: f64, expected: f64) -> f64 {
    const TINY: f64 = 1e-12;
    match (expected < TINY, measured < TINY) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => measured / expected,
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub bodies: Vec<RigidBody>,
    pub names: Vec<String>,
    pub applied_forces: Vec<Vector3<f64>>,
    pub contact_params: ContactParams,
    pub friction_params: FrictionParams,
    pub gravity: Vector3<f64>,
    pub episodes: EpisodeTable,
    pub time: f64,
    pub settings: SimSettings,
    pub energy_reference: Option<EnergyReference>,
    /// Evaluations where an overlap had no usable direction.
    pub warnings: usize,
    solver: Option<Dopri5>,
}

impl World {
    pub fn new(contact_params: ContactParams, friction_params: FrictionParams, settings: SimSettings) -> Self {
        Self {
            bodies: Vec::new(),
            names: Vec::new(),
            applied_forces: Vec::new(),
            contact_params,
            friction_params,
            gravity: Vector3::new(0.0, 0.0, -9.81),
            episodes: EpisodeTable::new(),
            time: 0.0,
            settings,
            energy_reference: None,
            warnings: 0,
            solver: None,
        }
    }

    /// Adds a body and returns its id.
    pub fn add_body(&mut self, name: impl Into<String>, body: RigidBody, applied_force: Vector3<f64>) -> usize {
        self.bodies.push(body);
        self.names.push(name.into());
        self.applied_forces.push(applied_force);
        self.bodies.len() - 1
    }

    pub fn body_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Every pair that can ever carry a contact: all pairs except those of
    /// two static bodies, ascending.
    pub fn monitored_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.bodies.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if !(self.bodies[a].is_static() && self.bodies[b].is_static()) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// Pairs whose posed bounding boxes overlap (touching included).
    pub fn detect_pairs(&self) -> Vec<(usize, usize)> {
        let boxes: Vec<_> = self.bodies.iter().map(|b| b.shape.aabb(&b.pose())).collect();
        self.monitored_pairs()
            .into_iter()
            .filter(|&(a, b)| boxes[a].overlaps(&boxes[b]))
            .collect()
    }

    fn integrated_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.bodies.iter().enumerate().filter(|(_, b)| b.is_integrated()).map(|(i, _)| i)
    }

    /// Flat state: integrated bodies by ascending id, then episode filters by
    /// ascending pair.
    pub fn pack_state(&self) -> Vec<f64> {
        let mut y = Vec::new();
        for i in self.integrated_ids() {
            let b = &self.bodies[i];
            let q = b.orientation.quaternion();
            y.extend_from_slice(b.position.as_slice());
            y.extend_from_slice(&[q.w, q.i, q.j, q.k]);
            y.extend_from_slice(b.lin_vel.as_slice());
            y.extend_from_slice(b.ang_vel_body.as_slice());
        }
        for e in self.episodes.values() {
            y.push(e.filter.v_f);
            y.push(e.filter.v_f_dot);
        }
        y
    }

    /// Bodies and filter states described by `y` at time `t`.
    fn unpack(&self, y: &[f64], t: f64) -> (Vec<RigidBody>, Vec<FilterState>) {
        let mut bodies = self.bodies.clone();
        let mut offset = 0;
        for b in bodies.iter_mut() {
            if b.is_integrated() {
                let s = &y[offset..offset + BODY_STATE_LEN];
                b.position = Vector3::new(s[0], s[1], s[2]);
                b.orientation = UnitQuaternion::new_normalize(Quaternion::new(s[3], s[4], s[5], s[6]));
                b.lin_vel = Vector3::new(s[7], s[8], s[9]);
                b.ang_vel_body = Vector3::new(s[10], s[11], s[12]);
                offset += BODY_STATE_LEN;
            } else {
                b.set_time(t);
            }
        }
        let filters = y[offset..]
            .chunks_exact(2)
            .map(|c| FilterState { v_f: c[0], v_f_dot: c[1] })
            .collect();
        (bodies, filters)
    }

    fn overlap_geometry(
        &self,
        bodies: &[RigidBody],
        (a, b): (usize, usize),
    ) -> Result<Option<OverlapResult>, (f64, MeshError)> {
        let (ba, bb) = (&bodies[a], &bodies[b]);
        let Some(intersection) = intersect_shapes(&ba.shape, &ba.pose(), &bb.shape, &bb.pose()) else {
            return Ok(None);
        };
        let (v, c) = crate::mesh::volume_and_centroid(&intersection);
        match direction_vector(&intersection, &c, self.settings.normal_mode) {
            Ok(s_d) => Ok(Some(OverlapResult {
                intersection,
                c,
                v,
                s_d,
                s_n: nalgebra::Unit::new_normalize(s_d),
            })),
            Err(e) => Err((v, e)),
        }
    }

    /// Gravity, applied forces, and reaction plus friction efforts of every
    /// episode, for the given bodies and filter states.
    fn efforts_for(
        &self,
        t: f64,
        bodies: &[RigidBody],
        filters: &[FilterState],
        frozen: Option<&[Option<OverlapResult>]>,
    ) -> Efforts {
        let mut wrenches: Vec<Wrench> = bodies
            .iter()
            .zip(&self.applied_forces)
            .map(|(b, applied)| {
                if b.is_integrated() {
                    Wrench::new(self.gravity * b.mass + applied, Vector3::zeros())
                } else {
                    Wrench::zero()
                }
            })
            .collect();
        let mut filter_inputs = Vec::with_capacity(self.episodes.len());
        let mut contacts = Vec::new();
        let mut warnings = 0;

        for (k, (pair, episode)) in self.episodes.iter().enumerate() {
            let (a, b) = *pair;
            let geometry = match frozen {
                Some(cache) => Ok(cache[k].clone()),
                None => self.overlap_geometry(bodies, *pair),
            };
            let overlap = match geometry {
                Ok(Some(overlap)) => overlap,
                Ok(None) => {
                    filter_inputs.push(0.0);
                    continue;
                }
                Err((v, _)) => {
                    warnings += 1;
                    filter_inputs.push(v.max(0.0));
                    continue;
                }
            };
            filter_inputs.push(overlap.v);
            let filter = filters[k];
            let (ba, bb) = (&bodies[a], &bodies[b]);
            let delta_eff = transient_gain(t, episode, &self.contact_params, ba.mass, bb.mass);
            let on_a = reaction_wrench(&overlap, &filter, delta_eff, &self.contact_params, &ba.center());
            let c = overlap.c;
            let v_r = ba.velocity_at(&c) - bb.velocity_at(&c);
            let friction = friction_force(&on_a.force, &v_r, &self.friction_params);

            wrenches[a] += on_a;
            wrenches[a] += Wrench::at_point(friction, &c, &ba.center());
            wrenches[b] += Wrench::at_point(-on_a.force, &c, &bb.center());
            wrenches[b] += Wrench::at_point(-friction, &c, &bb.center());
            contacts.push(ContactReport {
                pair: *pair,
                v: overlap.v,
                v_f_dot: filter.v_f_dot,
                delta_eff,
                force: on_a.force,
                friction,
                c,
            });
        }
        Efforts {
            wrenches,
            filter_inputs,
            contacts,
            warnings,
        }
    }

    /// Efforts on every body for the augmented state `state` at time `t`,
    /// using the current episode table.
    pub fn assemble_efforts(&self, state: &[f64], t: f64) -> Efforts {
        let (bodies, filters) = self.unpack(state, t);
        self.efforts_for(t, &bodies, &filters, None)
    }

    /// Time derivative of the augmented state.
    fn derivative(
        &self,
        t: f64,
        y: &[f64],
        dy: &mut [f64],
        frozen: Option<&[Option<OverlapResult>]>,
    ) -> usize {
        let (bodies, filters) = self.unpack(y, t);
        let efforts = self.efforts_for(t, &bodies, &filters, frozen);
        let mut offset = 0;
        for (i, body) in bodies.iter().enumerate() {
            if !body.is_integrated() {
                continue;
            }
            let s = &y[offset..offset + BODY_STATE_LEN];
            let world = efforts.wrenches[i];
            let body_frame = Wrench::new(world.force, body.orientation.inverse() * world.torque);
            let (acc, alpha) = equations_of_motion(body, &body_frame);
            let q = Quaternion::new(s[3], s[4], s[5], s[6]);
            let q_dot = quaternion_rate(&q, &body.ang_vel_body);
            let d = &mut dy[offset..offset + BODY_STATE_LEN];
            d[0..3].copy_from_slice(body.lin_vel.as_slice());
            d[3..7].copy_from_slice(&[q_dot.w, q_dot.i, q_dot.j, q_dot.k]);
            d[7..10].copy_from_slice(acc.as_slice());
            d[10..13].copy_from_slice(alpha.as_slice());
            offset += BODY_STATE_LEN;
        }
        let p = &self.contact_params;
        for (k, filter) in filters.iter().enumerate() {
            let (dv, ddv) = filter_rhs(filter, efforts.filter_inputs[k], p.zeta, p.omega_n);
            dy[offset + 2 * k] = dv;
            dy[offset + 2 * k + 1] = ddv;
        }
        efforts.warnings
    }

    /// Overlaps at the current boundary for pairs with at least one
    /// integrated body.
    fn boundary_overlaps(&mut self) -> Vec<((usize, usize), OverlapResult)> {
        let mut found = Vec::new();
        for pair in self.detect_pairs() {
            let (a, b) = pair;
            if !(self.bodies[a].is_integrated() || self.bodies[b].is_integrated()) {
                continue;
            }
            match self.overlap_geometry(&self.bodies, pair) {
                Ok(Some(overlap)) => found.push((pair, overlap)),
                Ok(None) => {}
                Err(_) => self.warnings += 1,
            }
        }
        found
    }

    /// Advances the world to `t_end`, emitting a metrics sample at every
    /// multiple of the output step.
    pub fn step(&mut self, t_end: f64) -> Result<Vec<MetricsSample>, SimError> {
        if t_end < self.time {
            return Err(SimError::Time {
                time: self.time,
                t_end,
            });
        }
        let output_step = self.settings.output_step;
        let h_max = self.settings.integrator.h_max;
        let mut samples = Vec::new();
        let mut solver = match self.solver.take() {
            Some(s) => s,
            None => Dopri5::new(self.settings.integrator).map_err(|source| SimError::Integration {
                t: self.time,
                pairs: vec![],
                source,
            })?,
        };

        // Boundaries lie on the h_max and output grids; snapping within `eps`
        // keeps rounding from leaving slivers of steps.
        let eps = 1e-9 * h_max.min(output_step);
        let next_on_grid = |t: f64, step: f64| ((t / step + 1e-7).floor() + 1.0) * step;
        let mut overlaps = self.boundary_overlaps();
        while t_end - self.time > eps {
            let t = self.time;
            update_episodes(&mut self.episodes, &overlaps, t, &self.bodies);
            let frozen: Option<Vec<Option<OverlapResult>>> = match self.settings.geometry {
                GeometryMode::PerStage => None,
                GeometryMode::FrozenPerStep => Some(
                    self.episodes
                        .keys()
                        .map(|pair| overlaps.iter().find(|(p, _)| p == pair).map(|(_, o)| o.clone()))
                        .collect(),
                ),
            };

            let next_output = next_on_grid(t, output_step);
            let mut t_next = next_on_grid(t, h_max).min(next_output).min(t_end);
            if t_end - t_next < eps {
                t_next = t_end;
            }

            // A contact that starts inside the step would see no force until
            // the next boundary; halve the step until its onset is localized.
            let checkpoint = (self.bodies.clone(), solver.clone(), self.warnings);
            loop {
                let mut y = self.pack_state();
                let mut warnings = 0;
                let world = &*self;
                let mut rhs = |tt: f64, yy: &[f64], dy: &mut [f64]| {
                    warnings += world.derivative(tt, yy, dy, frozen.as_deref());
                };
                let quaternion_slots: Vec<usize> = world
                    .integrated_ids()
                    .enumerate()
                    .map(|(k, _)| k * BODY_STATE_LEN + 3)
                    .collect();
                let mut renormalize = |_: f64, yy: &mut [f64]| {
                    for &o in &quaternion_slots {
                        let norm = (yy[o..o + 4].iter().map(|x| x * x).sum::<f64>()).sqrt();
                        if norm > 0.0 {
                            yy[o..o + 4].iter_mut().for_each(|x| *x /= norm);
                        }
                    }
                };
                let result = solver.integrate(&mut rhs, t, &mut y, t_next, &mut renormalize);
                self.warnings += warnings;
                if let Err(source) = result {
                    self.solver = Some(solver);
                    return Err(SimError::Integration {
                        t,
                        pairs: self.episodes.keys().copied().collect(),
                        source,
                    });
                }

                let (bodies, filters) = self.unpack(&y, t_next);
                self.bodies = bodies;
                let next = self.boundary_overlaps();
                let onset = next.iter().any(|(pair, _)| !self.episodes.contains_key(pair));
                if onset && t_next - t > self.settings.onset_resolution {
                    (self.bodies, solver, self.warnings) = checkpoint.clone();
                    t_next = t + 0.5 * (t_next - t);
                    continue;
                }
                for (episode, filter) in self.episodes.values_mut().zip(filters) {
                    episode.filter = filter;
                }
                overlaps = next;
                break;
            }
            self.time = t_next;
            if t_next >= next_output - eps {
                samples.push(self.sample());
            }
        }
        self.solver = Some(solver);
        Ok(samples)
    }

    /// Integrator counters accumulated over every call to [`World::step`].
    pub fn integrator_stats(&self) -> IntegratorStats {
        self.solver.as_ref().map(|s| s.stats).unwrap_or_default()
    }

    /// Metrics at the current state.
    pub fn sample(&self) -> MetricsSample {
        let state = self.pack_state();
        let efforts = self.assemble_efforts(&state, self.time);
        let contacts = self
            .monitored_pairs()
            .into_iter()
            .map(|pair| {
                let mut sample = ContactSample {
                    pair,
                    delta_eff: 1.0,
                    ..Default::default()
                };
                if let Some(k) = self.episodes.keys().position(|p| *p == pair) {
                    sample.v = efforts.filter_inputs[k];
                    sample.v_f_dot = self.episodes[&pair].filter.v_f_dot;
                }
                if let Some(report) = efforts.contacts.iter().find(|r| r.pair == pair) {
                    sample.force = report.force.norm();
                    sample.delta_eff = report.delta_eff;
                }
                sample
            })
            .collect();
        let bodies = self
            .bodies
            .iter()
            .map(|b| BodySample {
                position: b.position,
                orientation: b.orientation,
                lin_vel: b.lin_vel,
                ang_vel_body: b.ang_vel_body,
                kinetic_energy: kinetic_energy(b),
            })
            .collect();
        let (expected_energy, ke_ratio) = match self.energy_reference {
            Some(EnergyReference { object, reference }) => match self.bodies[reference].kind {
                BodyKind::Kinematic(path) => {
                    let expected = expected_energy(&path, self.bodies[object].mass, self.time);
                    let measured = kinetic_energy(&self.bodies[object]);
                    (Some(expected), Some(kinetic_energy_ratio(measured, expected)))
                }
                _ => (None, None),
            },
            None => (None, None),
        };
        MetricsSample {
            t: self.time,
            contacts,
            bodies,
            expected_energy,
            ke_ratio,
        }
    }
}
