//! Scenario configuration: JSON schema, defaults and validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use compliant_core::contact::{ContactParams, FrictionParams};
use compliant_core::dynamics::Rk45Options;
use compliant_core::scene::SimSettings;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 10] = [
    "beta", "d_t", "g1", "g2", "g_i", "g_t", "gamma", "mu", "omega_n", "zeta",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Gains as stored: g1 in N/m³, g2 in N·s/m³, d_t in m.
    #[default]
    Si,
    /// Linear gains on a reference contact face: g1 in N/cm, g2 in N·s/m,
    /// d_t in mm. Divided by `reference_area` at load.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalModeConfig {
    #[default]
    CentroidToContact,
    InwardFaceNormal,
    VolumeGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryConfig {
    #[default]
    PerStage,
    FrozenPerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    /// Box with the given edge lengths (m).
    Cuboid([f64; 3]),
    Icosphere { radius: f64, subdivisions: u32 },
    /// Triangulated convex OBJ file, relative to the config file.
    Obj(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub axis: [f64; 3],
    pub amplitude: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KindConfig {
    Dynamic,
    Static,
    /// Translation along the given axis only.
    Prismatic([f64; 3]),
    Kinematic(TrajectoryConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub name: String,
    pub shape: ShapeConfig,
    pub mass: f64,
    /// Principal moments about the center of mass (kg·m²); computed from the
    /// shape as a uniform solid when absent.
    #[serde(default)]
    pub inertia: Option<[f64; 3]>,
    pub kind: KindConfig,
    /// Center of mass at t = 0 (m).
    #[serde(default)]
    pub position: [f64; 3],
    /// Initial orientation as a rotation vector (rad).
    #[serde(default)]
    pub rotation: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Body-frame angular velocity (rad/s).
    #[serde(default)]
    pub angular_velocity: [f64; 3],
    /// Constant external force (N).
    #[serde(default)]
    pub applied_force: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactConfig {
    pub g1: f64,
    pub g2: f64,
    pub g_i: f64,
    pub g_t: f64,
    pub d_t: f64,
    pub zeta: f64,
    pub omega_n: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        let p = ContactParams::default();
        Self {
            g1: p.g1,
            g2: p.g2,
            g_i: p.g_i,
            g_t: p.g_t,
            d_t: p.d_t,
            zeta: p.zeta,
            omega_n: p.omega_n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionConfig {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FrictionConfig {
    fn default() -> Self {
        let f = FrictionParams::default();
        Self {
            mu: f.mu,
            beta: f.beta,
            gamma: f.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    /// Longest step allowed to contain the start of a contact (s).
    pub onset_resolution: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let o = Rk45Options::default();
        Self {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            h_max: o.h_max,
            onset_resolution: SimSettings::default().onset_resolution,
        }
    }
}

/// Kinetic-energy bookkeeping: `object` should move rigidly with the
/// kinematic body `reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyReferenceConfig {
    pub object: String,
    pub reference: String,
}

fn default_scenario() -> String {
    "scenario".to_string()
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

fn default_duration() -> f64 {
    1.0
}

fn default_output_step() -> f64 {
    1e-3
}

fn default_reference_area() -> f64 {
    0.0025
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default)]
    pub units: Units,
    /// Contact face area used to convert `linear` units (m²).
    #[serde(default = "default_reference_area")]
    pub reference_area: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_output_step")]
    pub output_step: f64,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    #[serde(default)]
    pub seed: u64,
    /// Uniform random offset (m) applied to the initial position of every
    /// dynamic and prismatic body, drawn from `seed`.
    #[serde(default)]
    pub position_jitter: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub normal_mode: NormalModeConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub contact: ContactConfig,
    #[serde(default)]
    pub friction: FrictionConfig,
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub energy_reference: Option<EnergyReferenceConfig>,
    /// Parameter name to list of values; cells are the Cartesian product in
    /// alphabetical parameter order.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    /// Directory that relative OBJ paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    /// Contact parameters in SI units.
    pub fn contact_params(&self) -> ContactParams {
        let c = &self.contact;
        let (g1, g2, d_t) = match self.units {
            Units::Si => (c.g1, c.g2, c.d_t),
            // N/cm -> N/m, then per unit face area; mm -> m.
            Units::Linear => (c.g1 * 100.0 / self.reference_area, c.g2 / self.reference_area, c.d_t * 1e-3),
        };
        ContactParams {
            g1,
            g2,
            g_i: c.g_i,
            g_t: c.g_t,
            d_t,
            zeta: c.zeta,
            omega_n: c.omega_n,
        }
    }

    pub fn friction_params(&self) -> FrictionParams {
        FrictionParams {
            mu: self.friction.mu,
            beta: self.friction.beta,
            gamma: self.friction.gamma,
        }
    }

    pub fn integrator_options(&self) -> Rk45Options {
        Rk45Options {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            h_max: self.integrator.h_max,
        }
    }

    pub fn body(&self, name: &str) -> Option<&BodyConfig> {
        self.bodies.iter().find(|b| b.name == name)
    }

    /// Every schema violation, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut positive = |field: String, value: f64| {
            if !(value.is_finite() && value > 0.0) {
                errors.push(format!("{field}: must be positive and finite (got {value})"));
            }
        };
        positive("output_step".into(), self.output_step);
        positive("reference_area".into(), self.reference_area);
        positive("integrator.rel_tol".into(), self.integrator.rel_tol);
        positive("integrator.abs_tol".into(), self.integrator.abs_tol);
        positive("integrator.h_max".into(), self.integrator.h_max);
        positive("integrator.onset_resolution".into(), self.integrator.onset_resolution);
        let c = &self.contact;
        for (name, value) in [
            ("g1", c.g1),
            ("g2", c.g2),
            ("g_i", c.g_i),
            ("g_t", c.g_t),
            ("d_t", c.d_t),
            ("zeta", c.zeta),
            ("omega_n", c.omega_n),
        ] {
            positive(format!("contact.{name}"), value);
        }
        positive("friction.gamma".into(), self.friction.gamma);
        for (i, body) in self.bodies.iter().enumerate() {
            positive(format!("bodies[{i}].mass"), body.mass);
            if let Some(inertia) = body.inertia {
                for (k, value) in inertia.iter().enumerate() {
                    positive(format!("bodies[{i}].inertia[{k}]"), *value);
                }
            }
            match &body.shape {
                ShapeConfig::Cuboid(extents) => {
                    for (k, value) in extents.iter().enumerate() {
                        positive(format!("bodies[{i}].shape.cuboid[{k}]"), *value);
                    }
                }
                ShapeConfig::Icosphere { radius, .. } => {
                    positive(format!("bodies[{i}].shape.icosphere.radius"), *radius)
                }
                ShapeConfig::Obj(_) => {}
            }
            if let KindConfig::Kinematic(path) = &body.kind {
                positive(format!("bodies[{i}].kind.kinematic.omega"), path.omega);
            }
        }

        for (field, value) in [("friction.mu", self.friction.mu), ("friction.beta", self.friction.beta)] {
            if !(value.is_finite() && value >= 0.0) {
                errors.push(format!("{field}: must be nonnegative and finite (got {value})"));
            }
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            errors.push(format!("duration: must be nonnegative and finite (got {})", self.duration));
        }
        if !(self.position_jitter.is_finite() && self.position_jitter >= 0.0) {
            errors.push(format!("position_jitter: must be nonnegative (got {})", self.position_jitter));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            errors.push("gravity: must be finite".into());
        }
        if self.bodies.is_empty() {
            errors.push("bodies: at least one body is required".into());
        }
        for (i, body) in self.bodies.iter().enumerate() {
            if self.bodies[..i].iter().any(|b| b.name == body.name) {
                errors.push(format!("bodies[{i}].name: duplicate name {:?}", body.name));
            }
            let vectors = [
                ("position", body.position),
                ("rotation", body.rotation),
                ("velocity", body.velocity),
                ("angular_velocity", body.angular_velocity),
                ("applied_force", body.applied_force),
            ];
            for (field, v) in vectors {
                if !v.iter().all(|x| x.is_finite()) {
                    errors.push(format!("bodies[{i}].{field}: must be finite"));
                }
            }
            let axis = match &body.kind {
                KindConfig::Prismatic(axis) => Some(("prismatic", *axis)),
                KindConfig::Kinematic(path) => {
                    if !(path.amplitude.is_finite() && path.phase.is_finite()) {
                        errors.push(format!("bodies[{i}].kind.kinematic: amplitude and phase must be finite"));
                    }
                    Some(("kinematic.axis", path.axis))
                }
                _ => None,
            };
            if let Some((field, axis)) = axis {
                let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm.is_finite() && norm > 0.0) {
                    errors.push(format!("bodies[{i}].kind.{field}: axis must be a nonzero vector"));
                }
            }
            if matches!(body.kind, KindConfig::Static)
                && (body.velocity != [0.0; 3] || body.angular_velocity != [0.0; 3])
            {
                errors.push(format!("bodies[{i}].velocity: static bodies cannot move"));
            }
            if let ShapeConfig::Obj(path) = &body.shape {
                let full = self.base_dir.join(path);
                if !full.is_file() {
                    errors.push(format!("bodies[{i}].shape.obj: mesh file {} not found", full.display()));
                }
            }
        }
        if let Some(reference) = &self.energy_reference {
            match self.body(&reference.object) {
                None => errors.push(format!("energy_reference.object: no body named {:?}", reference.object)),
                Some(b) if matches!(b.kind, KindConfig::Static | KindConfig::Kinematic(_)) => {
                    errors.push("energy_reference.object: must be a dynamic or prismatic body".into())
                }
                _ => {}
            }
            match self.body(&reference.reference) {
                None => errors.push(format!("energy_reference.reference: no body named {:?}", reference.reference)),
                Some(b) if !matches!(b.kind, KindConfig::Kinematic(_)) => {
                    errors.push("energy_reference.reference: must be a kinematic body".into())
                }
                _ => {}
            }
        }
        for (name, values) in &self.sweep {
            if !SWEEP_PARAMETERS.contains(&name.as_str()) {
                errors.push(format!("sweep.{name}: unknown parameter (expected one of {SWEEP_PARAMETERS:?})"));
            } else if values.is_empty() {
                errors.push(format!("sweep.{name}: value list is empty"));
            } else if !values.iter().all(|v| v.is_finite()) {
                errors.push(format!("sweep.{name}: values must be finite"));
            }
        }
        errors
    }

    /// Configurations of every sweep cell, with the swept values applied, in
    /// row-major order over alphabetically sorted parameter names.
    pub fn sweep_cells(&self) -> Result<Vec<(Vec<(String, f64)>, ScenarioConfig)>, HarnessError> {
        if self.sweep.is_empty() || self.sweep.values().any(|v| v.is_empty()) {
            return Err(HarnessError::NoSweep);
        }
        let mut coordinates: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &self.sweep {
            coordinates = coordinates
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut cell = prefix.clone();
                        cell.push((name.clone(), *v));
                        cell
                    })
                })
                .collect();
        }
        coordinates
            .into_iter()
            .map(|cell| {
                let mut config = self.clone();
                config.sweep.clear();
                for (name, value) in &cell {
                    config.set_parameter(name, *value)?;
                }
                Ok((cell, config))
            })
            .collect()
    }

    fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), HarnessError> {
        let slot = match name {
            "g1" => &mut self.contact.g1,
            "g2" => &mut self.contact.g2,
            "g_i" => &mut self.contact.g_i,
            "g_t" => &mut self.contact.g_t,
            "d_t" => &mut self.contact.d_t,
            "zeta" => &mut self.contact.zeta,
            "omega_n" => &mut self.contact.omega_n,
            "mu" => &mut self.friction.mu,
            "beta" => &mut self.friction.beta,
            "gamma" => &mut self.friction.gamma,
            other => return Err(HarnessError::Invalid(vec![format!("sweep.{other}: unknown parameter")])),
        };
        *slot = value;
        Ok(())
    }
}

/// Parses and validates a configuration document. Relative mesh paths
/// resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ScenarioConfig, HarnessError> {
    let mut config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    config.base_dir = base_dir.to_path_buf();
    let errors = config.violations();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(HarnessError::Invalid(errors))
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}
