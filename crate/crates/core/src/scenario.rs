//! Scenario files.
//!
//! Scenarios are TOML. Every table rejects unknown keys so that a typo fails
//! loudly instead of silently falling back to a default.
//!
//! ```toml
//! name = "example"
//!
//! [vehicle]
//! mass_kg = 27.7                      # dry mass, without booms
//! dims_m = [0.2463, 0.2463, 0.454]    # inertia derived from a uniform box
//! # inertia_kg_m2 = [[..], [..], [..]] # optional explicit tensor
//!
//! [ehs]
//! max_extension_m = 5.026
//! link_count = 24                     # individual links, N = link_count / 2
//! mount_clearance_m = 0.1             # L_B + L_E
//! mass_kg = 2.41
//! mass_split = [0.85, 0.10, 0.05]     # links, actuation bar, effector
//! prismatic_friction_n_s_per_m = 0.01
//! revolute_friction_n_m_s_per_rad = 0.01
//!
//! [[mounts]]
//! position_m = [0.12315, 0.0, 0.0]
//! euler_rad = [0.0, 1.5707963267948966, 0.0]
//!
//! [limits]
//! body_force_n = 0.1
//! body_torque_n_m = 0.2
//! prismatic_force_n = 40.0
//! revolute_torque_n_m = 0.2
//! link_force_n = 20.0
//!
//! [gains.position]   # likewise gains.attitude, gains.pan, gains.pitch, gains.actuation
//! kp = 8.0
//! ki = 0.8
//! kd = 27.0
//! integral_clamp = 1.0
//! output_clamp = 0.1
//!
//! [initial]
//! pose = [0, 0, 0, 0, 0, 0]           # X, Y, Z (m), alpha, beta, gamma (rad, intrinsic XYZ)
//!
//! [maneuver]
//! pose_goal = [25, 25, -10, 0.39269908169872414, -0.7853981633974483, 0.39269908169872414]
//! # joint_goal = { pan_rad = 2.356194490192345, pitch_rad = 0.0, deploy_m = 4.5 }
//! [maneuver.profile]
//! t_total_s = 500.0
//! t_accel_s = 153.0
//!
//! [sim]
//! dt_s = 0.001
//! duration_s = 520.0
//! sample_interval_s = 0.1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{JointGains, PidGains, PoseGains};
use crate::ehs::{EhsMassModel, MassSplit};
use crate::error::{Result, SimError};
use crate::scissor::{actuation_from_extension, calibrate_from_envelope, EhsJointState, MountFrame, ScissorParams};
use crate::spatial::{euler_to_rotation, Pose, RigidBodyState, Vec3};
use crate::trajectory::TrapezoidProfile;
use crate::vehicle::{derive_box_inertia, ActuatorLimits, EhsUnit, JointFriction, SystemState, VehicleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub vehicle: VehicleSection,
    pub ehs: EhsSection,
    #[serde(default)]
    pub mounts: Vec<MountSection>,
    #[serde(default)]
    pub limits: ActuatorLimits,
    pub gains: GainsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub maneuver: ManeuverSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub mass_kg: f64,
    pub dims_m: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_kg_m2: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EhsSection {
    pub max_extension_m: f64,
    pub link_count: u32,
    #[serde(default = "default_clearance")]
    pub mount_clearance_m: f64,
    pub mass_kg: f64,
    #[serde(default = "default_split")]
    pub mass_split: [f64; 3],
    #[serde(default = "default_friction")]
    pub prismatic_friction_n_s_per_m: f64,
    #[serde(default = "default_friction")]
    pub revolute_friction_n_m_s_per_rad: f64,
}

fn default_clearance() -> f64 {
    0.1
}
fn default_split() -> [f64; 3] {
    let s = MassSplit::default();
    [s.links, s.actuation_bar, s.effector]
}
fn default_friction() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountSection {
    pub position_m: [f64; 3],
    #[serde(default)]
    pub euler_rad: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub position: PidGains,
    pub attitude: PidGains,
    pub pan: PidGains,
    pub pitch: PidGains,
    pub actuation: PidGains,
    #[serde(default = "default_true")]
    pub schedule_actuation: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub pose: [f64; 6],
    /// Per mount `[pan_rad, pitch_rad, actuation_m]`; booms start folded when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_goal: Option<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_goal: Option<JointGoal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSection>,
}

/// Boom goal applied to every mount. `deploy_m` is the boom length beyond the
/// fully folded length `L_E + L_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointGoal {
    #[serde(default)]
    pub pan_rad: f64,
    #[serde(default)]
    pub pitch_rad: f64,
    pub deploy_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub t_total_s: f64,
    pub t_accel_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_sample")]
    pub sample_interval_s: f64,
    #[serde(default = "default_true")]
    pub base_control: bool,
    #[serde(default = "default_true")]
    pub joint_control: bool,
    /// Feed the boom reaction wrench forward into the base command.
    #[serde(default = "default_true")]
    pub reaction_feedforward: bool,
}

fn default_sample() -> f64 {
    0.1
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub dt_s: Option<f64>,
    pub duration_s: Option<f64>,
}

/// Resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub vehicle: VehicleConfig,
    pub pose_gains: PoseGains,
    pub joint_gains: JointGains,
    pub initial: SystemState,
    pub maneuver: Maneuver,
    pub sim: SimSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maneuver {
    pub pose_goal: Option<Pose>,
    /// Per-mount goal joint positions.
    pub joint_goal: Option<Vec<EhsJointState>>,
    pub profile: Option<TrapezoidProfile>,
}

impl ScenarioFile {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| SimError::config(error_key(&e), e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt_s {
            self.sim.dt_s = dt;
        }
        if let Some(d) = o.duration_s {
            self.sim.duration_s = d;
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let sim = self.sim;
        check_positive("sim.dt_s", sim.dt_s)?;
        check_positive("sim.duration_s", sim.duration_s)?;
        check_positive("sim.sample_interval_s", sim.sample_interval_s)?;
        let decim = sim.sample_interval_s / sim.dt_s;
        if (decim - decim.round()).abs() > 1e-6 || decim.round() < 1.0 {
            return Err(SimError::config(
                "sim.sample_interval_s",
                "must be a positive integer multiple of sim.dt_s",
            ));
        }
        let steps = sim.duration_s / sim.dt_s;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(SimError::config("sim.duration_s", "must be an integer multiple of sim.dt_s"));
        }
        let samples = sim.duration_s / sim.sample_interval_s;
        if (samples - samples.round()).abs() > 1e-6 {
            return Err(SimError::config(
                "sim.duration_s",
                "must be an integer multiple of sim.sample_interval_s",
            ));
        }

        let v = &self.vehicle;
        check_positive("vehicle.mass_kg", v.mass_kg)?;
        let dims = Vec3::from(v.dims_m);
        let inertia = match v.inertia_kg_m2 {
            Some(m) => crate::spatial::Mat3::from_fn(|i, j| m[i][j]),
            None => derive_box_inertia(v.mass_kg, dims),
        };

        let e = &self.ehs;
        let params = calibrate_from_envelope(e.max_extension_m, e.link_count, e.mount_clearance_m)
            .map_err(|err| SimError::config("ehs", err.to_string()))?;
        let split = MassSplit {
            links: e.mass_split[0],
            actuation_bar: e.mass_split[1],
            effector: e.mass_split[2],
        };
        let mass = EhsMassModel::from_split(e.mass_kg, split, &params)?;
        if !(e.prismatic_friction_n_s_per_m >= 0.0) {
            return Err(SimError::config("ehs.prismatic_friction_n_s_per_m", "must be >= 0"));
        }
        if !(e.revolute_friction_n_m_s_per_rad >= 0.0) {
            return Err(SimError::config("ehs.revolute_friction_n_m_s_per_rad", "must be >= 0"));
        }
        let friction = JointFriction {
            revolute: e.revolute_friction_n_m_s_per_rad,
            prismatic: e.prismatic_friction_n_s_per_m,
        };
        let units: Vec<EhsUnit> = self
            .mounts
            .iter()
            .map(|m| EhsUnit {
                mount: MountFrame {
                    offset: Vec3::from(m.position_m),
                    rotation: euler_to_rotation(m.euler_rad[0], m.euler_rad[1], m.euler_rad[2]),
                },
                params,
                mass: mass.clone(),
                friction,
            })
            .collect();

        let vehicle = VehicleConfig {
            dry_mass: v.mass_kg,
            dims,
            inertia,
            units,
            limits: self.limits,
        };
        vehicle.validate()?;

        let g = &self.gains;
        for (k, pid) in [
            ("gains.position", &g.position),
            ("gains.attitude", &g.attitude),
            ("gains.pan", &g.pan),
            ("gains.pitch", &g.pitch),
            ("gains.actuation", &g.actuation),
        ] {
            pid.validate(k)?;
        }

        let joints = match &self.initial.joints {
            None => vec![EhsJointState::folded(&params); vehicle.units.len()],
            Some(list) => {
                if list.len() != vehicle.units.len() {
                    return Err(SimError::config(
                        "initial.joints",
                        format!("{} entries for {} mounts", list.len(), vehicle.units.len()),
                    ));
                }
                list.iter()
                    .map(|q| {
                        let j = EhsJointState::default().with_positions(*q);
                        j.validate(&params)
                            .map_err(|err| SimError::config("initial.joints", err.to_string()))?;
                        Ok(j)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if self.initial.pose.iter().any(|v| !v.is_finite()) {
            return Err(SimError::config("initial.pose", "must be finite"));
        }
        let initial = SystemState {
            base: RigidBodyState::at_rest(Pose::from_tuple(self.initial.pose)),
            joints,
        };

        let m = &self.maneuver;
        let wants_profile = m.pose_goal.is_some() || m.joint_goal.is_some();
        let profile = match (m.profile, wants_profile) {
            (Some(p), _) => Some(TrapezoidProfile::new(1.0, p.t_total_s, p.t_accel_s)?),
            (None, true) => {
                return Err(SimError::config("maneuver.profile", "required when a goal is given"))
            }
            (None, false) => None,
        };
        if let Some(p) = &profile {
            if sim.duration_s < p.total_time {
                return Err(SimError::config(
                    "sim.duration_s",
                    format!("shorter than the maneuver ({} s)", p.total_time),
                ));
            }
        }
        if let Some(goal) = m.pose_goal {
            if goal.iter().any(|v| !v.is_finite()) {
                return Err(SimError::config("maneuver.pose_goal", "must be finite"));
            }
        }
        let joint_goal = match m.joint_goal {
            None => None,
            Some(goal) => {
                if vehicle.units.is_empty() {
                    return Err(SimError::config("maneuver.joint_goal", "no mounts configured"));
                }
                let y = actuation_from_extension(params.folded_extension() + goal.deploy_m, &params)
                    .map_err(|err| SimError::config("maneuver.joint_goal.deploy_m", err.to_string()))?;
                let j = EhsJointState {
                    pan: goal.pan_rad,
                    pitch: goal.pitch_rad,
                    actuation: y,
                    ..Default::default()
                };
                j.validate(&params)
                    .map_err(|err| SimError::config("maneuver.joint_goal.deploy_m", err.to_string()))?;
                Some(vec![j; vehicle.units.len()])
            }
        };

        Ok(Scenario {
            name: self.name.clone(),
            pose_gains: PoseGains {
                position: g.position,
                attitude: g.attitude,
            },
            joint_gains: JointGains {
                pan: g.pan,
                pitch: g.pitch,
                actuation: g.actuation,
                schedule: g.schedule_actuation,
            },
            vehicle,
            initial,
            maneuver: Maneuver {
                pose_goal: m.pose_goal.map(Pose::from_tuple),
                joint_goal,
                profile,
            },
            sim,
        })
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self> {
        let mut file = ScenarioFile::load(path)?;
        file.apply(overrides);
        file.resolve()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        ScenarioFile::from_toml_str(s)?.resolve()
    }

    pub fn params(&self) -> Option<&ScissorParams> {
        self.vehicle.units.first().map(|u| &u.params)
    }

    pub fn steps(&self) -> u64 {
        (self.sim.duration_s / self.sim.dt_s).round() as u64
    }

    pub fn sample_every(&self) -> u64 {
        (self.sim.sample_interval_s / self.sim.dt_s).round() as u64
    }
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::config(key, format!("must be > 0, got {v}")))
    }
}

fn error_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    // serde reports unknown fields as "unknown field `x`, expected ..."
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return rest[..end].to_string();
        }
    }
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return rest[..end].to_string();
        }
    }
    "scenario".to_string()
}
