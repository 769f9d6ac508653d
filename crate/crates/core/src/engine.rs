//! Fixed-step scenario engine.
//!
//! Each step evaluates the references, runs the base and joint controllers,
//! saturates the command and advances the coupled dynamics. Telemetry rows
//! are decimated to the scenario's sample interval.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{
    joint_controller, pose_controller, Feedforward, JointControllerState, PoseControllerState,
};
use crate::ehs::joint_space_dynamics;
use crate::error::{Result, SimError};
use crate::scenario::Scenario;
use crate::scissor::extension_from_actuation;
use crate::spatial::{rotation_error, rotation_to_euler, symmetric_pd_inverse, Frame, Pose, Vec3, Wrench};
use crate::trajectory::{joint_trajectory_eval, JointReference, PoseReference, PoseTrajectory};
use crate::vehicle::{
    apply_saturation, hold_wrench, step_coupled, ControlCommand, JointEfforts, SaturationFlags, Snapshot,
    SystemState,
};

/// Telemetry column names, in file order.
pub const COLUMNS: [&str; 42] = [
    "t_s", "pos_x_m", "pos_y_m", "pos_z_m", "q_w", "q_x", "q_y", "q_z", "vel_x", "vel_y", "vel_z", "omg_x",
    "omg_y", "omg_z", "joint_pan_rad", "joint_pitch_rad", "joint_y_m", "joint_pan_rate", "joint_pitch_rate",
    "joint_y_rate", "cmd_fx", "cmd_fy", "cmd_fz", "cmd_tx", "cmd_ty", "cmd_tz", "app_fx", "app_fy", "app_fz",
    "app_tx", "app_ty", "app_tz", "eff_pan_nm", "eff_pitch_nm", "eff_y_n", "sat_flags", "imp_ux", "imp_uy",
    "imp_uz", "imp_nx", "imp_ny", "imp_nz",
];

/// Descriptive aliases accepted by [`Telemetry::column`].
pub const ALIASES: [(&str, &str); 15] = [
    ("force_x", "app_fx"),
    ("force_y", "app_fy"),
    ("force_z", "app_fz"),
    ("torque_x", "app_tx"),
    ("torque_y", "app_ty"),
    ("torque_z", "app_tz"),
    ("impulse_unsigned_x", "imp_ux"),
    ("impulse_unsigned_y", "imp_uy"),
    ("impulse_unsigned_z", "imp_uz"),
    ("impulse_net_x", "imp_nx"),
    ("impulse_net_y", "imp_ny"),
    ("impulse_net_z", "imp_nz"),
    ("pan_torque", "eff_pan_nm"),
    ("pitch_torque", "eff_pitch_nm"),
    ("prismatic_force", "eff_y_n"),
];

pub type TelemetryRow = [f64; 42];

/// Uniformly sampled run history. Joint columns describe the first boom.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Telemetry {
    pub rows: Vec<TelemetryRow>,
}

impl Telemetry {
    pub fn column_index(name: &str) -> Option<usize> {
        let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, c)| c);
        COLUMNS.iter().position(|c| *c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = Self::column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes CSV with every value in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| SimError::Io(e.to_string());
        out.write_record(COLUMNS).map_err(io)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let io = |e: csv::Error| SimError::Io(e.to_string());
        let header = input.headers().map_err(io)?;
        if header.iter().ne(COLUMNS.iter().copied()) {
            return Err(SimError::config("telemetry", "header does not match the telemetry column layout"));
        }
        let mut rows = Vec::new();
        for (n, rec) in input.records().enumerate() {
            let rec = rec.map_err(io)?;
            let mut row = [0.0; 42];
            for (i, field) in rec.iter().enumerate() {
                row[i] = field
                    .parse()
                    .map_err(|_| SimError::config("telemetry", format!("row {}: bad value {field:?}", n + 1)))?;
            }
            rows.push(row);
        }
        Ok(Telemetry { rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Cumulative thruster impulse, inertial axes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImpulseAccumulator {
    pub unsigned: [f64; 3],
    pub net: [f64; 3],
}

pub fn accumulate_impulse(acc: ImpulseAccumulator, force: &Vec3, dt: f64) -> ImpulseAccumulator {
    let mut next = acc;
    for i in 0..3 {
        next.unsigned[i] += force[i].abs() * dt;
        next.net[i] += force[i] * dt;
    }
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_s: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SaturationOnset,
    JointLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub dt_s: f64,
    pub duration_s: f64,
    pub steps: u64,
    /// `[x, y, z, alpha, beta, gamma]`, intrinsic XYZ angles.
    pub final_pose: [f64; 6],
    /// Error against the goal pose (or the initial pose when holding).
    pub final_position_error_m: f64,
    pub final_attitude_error_rad: f64,
    /// Worst tracking error against the pose reference over the run.
    pub max_position_error_m: f64,
    pub max_attitude_error_rad: f64,
    /// Applied wrench, inertial axes.
    pub max_abs_force_n: [f64; 3],
    pub max_abs_torque_n_m: [f64; 3],
    /// Commanded wrench before saturation.
    pub max_abs_cmd_force_n: [f64; 3],
    pub max_abs_cmd_torque_n_m: [f64; 3],
    pub impulse_unsigned_n_s: [f64; 3],
    pub impulse_net_n_s: [f64; 3],
    /// Applied `[pan N m, pitch N m, actuation N]`, worst over all booms.
    pub max_joint_effort: [f64; 3],
    pub max_joint_command: [f64; 3],
    /// Per boom `[pan, pitch, actuation]`.
    pub final_joints: Vec<[f64; 3]>,
    pub final_extension_m: Vec<f64>,
    pub events: Vec<Event>,
}

impl RunSummary {
    /// Scalar view used for comparisons, keyed as `field` or `field.component`.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        let xyz = ["x", "y", "z"];
        let mut vec3 = |name: &str, v: &[f64; 3], labels: &[&str; 3]| {
            for (l, x) in labels.iter().zip(v) {
                m.insert(format!("{name}.{l}"), *x);
            }
        };
        vec3("max_abs_force_n", &self.max_abs_force_n, &xyz);
        vec3("max_abs_torque_n_m", &self.max_abs_torque_n_m, &xyz);
        vec3("max_abs_cmd_force_n", &self.max_abs_cmd_force_n, &xyz);
        vec3("max_abs_cmd_torque_n_m", &self.max_abs_cmd_torque_n_m, &xyz);
        vec3("impulse_unsigned_n_s", &self.impulse_unsigned_n_s, &xyz);
        vec3("impulse_net_n_s", &self.impulse_net_n_s, &xyz);
        let joints = ["pan", "pitch", "actuation"];
        vec3("max_joint_effort", &self.max_joint_effort, &joints);
        vec3("max_joint_command", &self.max_joint_command, &joints);
        for (l, v) in ["x", "y", "z", "alpha", "beta", "gamma"].iter().zip(self.final_pose) {
            m.insert(format!("final_pose.{l}"), v);
        }
        for (u, q) in self.final_joints.iter().enumerate() {
            for (l, v) in joints.iter().zip(q) {
                m.insert(format!("final_joints.{u}.{l}"), *v);
            }
        }
        for (u, x) in self.final_extension_m.iter().enumerate() {
            m.insert(format!("final_extension_m.{u}"), *x);
        }
        m.insert("final_position_error_m".into(), self.final_position_error_m);
        m.insert("final_attitude_error_rad".into(), self.final_attitude_error_rad);
        m.insert("max_position_error_m".into(), self.max_position_error_m);
        m.insert("max_attitude_error_rad".into(), self.max_attitude_error_rad);
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SimError::config("summary", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Per-field tolerance. A field passes when
/// `|result - reference| <= abs + rel * |reference|`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    #[serde(default)]
    pub abs: f64,
    #[serde(default)]
    pub rel: f64,
}

/// Fields to compare. Keys match [`RunSummary::metrics`] names exactly or as
/// a prefix ending before a `.`, so `impulse_unsigned_n_s` covers all axes.
/// `upper` bounds the result alone, independent of the reference.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub fields: BTreeMap<String, Tolerance>,
    #[serde(default)]
    pub upper: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty() && self.upper.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub result: f64,
    /// Reference value, or the bound for `upper` checks.
    pub expected: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Tolerance keys that matched no field.
    pub unmatched: Vec<String>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.unmatched.is_empty()
    }
}

fn key_matches(key: &str, field: &str) -> bool {
    field == key || (field.starts_with(key) && field.as_bytes().get(key.len()) == Some(&b'.'))
}

pub fn compare_summary(result: &RunSummary, reference: &RunSummary, tolerances: &Tolerances) -> ComparisonReport {
    let mut report = ComparisonReport::default();
    if result.scenario != reference.scenario {
        report.violations.push(Violation {
            field: format!("scenario ({} vs {})", result.scenario, reference.scenario),
            result: f64::NAN,
            expected: f64::NAN,
            allowed: 0.0,
        });
    }
    let got = result.metrics();
    let want = reference.metrics();
    for (key, tol) in &tolerances.fields {
        let mut hit = false;
        for (field, r) in got.iter().filter(|(f, _)| key_matches(key, f)) {
            hit = true;
            report.checked += 1;
            let Some(e) = want.get(field) else {
                report.violations.push(Violation {
                    field: field.clone(),
                    result: *r,
                    expected: f64::NAN,
                    allowed: 0.0,
                });
                continue;
            };
            let allowed = tol.abs + tol.rel * e.abs();
            if !((r - e).abs() <= allowed) {
                report.violations.push(Violation {
                    field: field.clone(),
                    result: *r,
                    expected: *e,
                    allowed,
                });
            }
        }
        if !hit {
            report.unmatched.push(key.clone());
        }
    }
    for (key, bound) in &tolerances.upper {
        let mut hit = false;
        for (field, r) in got.iter().filter(|(f, _)| key_matches(key, f)) {
            hit = true;
            report.checked += 1;
            if !(r.abs() <= *bound) {
                report.violations.push(Violation {
                    field: field.clone(),
                    result: *r,
                    expected: *bound,
                    allowed: 0.0,
                });
            }
        }
        if !hit {
            report.unmatched.push(key.clone());
        }
    }
    report
}

/// Everything computed by one control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    /// Commanded command before saturation, body wrench inertial.
    pub commanded: ControlCommand,
    pub applied: ControlCommand,
    pub flags: SaturationFlags,
    pub pose_reference: PoseReference,
}

/// Stepwise simulation of one scenario.
#[derive(Debug, Clone)]
pub struct Engine {
    scenario: Scenario,
    trajectory: Option<PoseTrajectory>,
    state: SystemState,
    step: u64,
    pose_ctl: PoseControllerState,
    joint_ctl: Vec<JointControllerState>,
    impulse: ImpulseAccumulator,
    prev_flags: SaturationFlags,
    at_limit: Vec<bool>,
    summary: RunSummary,
}

impl Engine {
    pub fn new(scenario: Scenario) -> Self {
        let start = scenario.initial.base.pose();
        let trajectory = match (scenario.maneuver.pose_goal, scenario.maneuver.profile) {
            (Some(goal), Some(profile)) => Some(PoseTrajectory::new(start, goal, profile)),
            _ => None,
        };
        let k = scenario.vehicle.units.len();
        let summary = RunSummary {
            scenario: scenario.name.clone(),
            dt_s: scenario.sim.dt_s,
            duration_s: scenario.sim.duration_s,
            steps: 0,
            final_pose: start.to_tuple(),
            final_position_error_m: 0.0,
            final_attitude_error_rad: 0.0,
            max_position_error_m: 0.0,
            max_attitude_error_rad: 0.0,
            max_abs_force_n: [0.0; 3],
            max_abs_torque_n_m: [0.0; 3],
            max_abs_cmd_force_n: [0.0; 3],
            max_abs_cmd_torque_n_m: [0.0; 3],
            impulse_unsigned_n_s: [0.0; 3],
            impulse_net_n_s: [0.0; 3],
            max_joint_effort: [0.0; 3],
            max_joint_command: [0.0; 3],
            final_joints: Vec::new(),
            final_extension_m: Vec::new(),
            events: Vec::new(),
        };
        Engine {
            state: scenario.initial.clone(),
            trajectory,
            step: 0,
            pose_ctl: PoseControllerState::default(),
            joint_ctl: vec![JointControllerState::default(); k],
            impulse: ImpulseAccumulator::default(),
            prev_flags: SaturationFlags::default(),
            at_limit: vec![false; k],
            summary,
            scenario,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.sim.dt_s
    }

    pub fn impulse(&self) -> &ImpulseAccumulator {
        &self.impulse
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.scenario.steps()
    }

    fn pose_reference(&self, t: f64) -> PoseReference {
        match &self.trajectory {
            Some(traj) => traj.eval(t),
            None => PoseReference::hold(self.scenario.initial.base.pose()),
        }
    }

    fn joint_references(&self, t: f64) -> Result<Vec<JointReference>> {
        let m = &self.scenario.maneuver;
        self.scenario
            .vehicle
            .units
            .iter()
            .enumerate()
            .map(|(u, unit)| {
                let start = &self.scenario.initial.joints[u];
                match (&m.joint_goal, &m.profile) {
                    (Some(goal), Some(profile)) => joint_trajectory_eval(start, &goal[u], profile, &unit.params, t),
                    _ => JointReference::hold(*start, &unit.params),
                }
            })
            .collect()
    }

    /// Computes the command for the current state without advancing.
    pub fn control(&mut self) -> Result<ControlOutput> {
        let t = self.time();
        let sc = &self.scenario;
        let config = &sc.vehicle;
        let dt = sc.sim.dt_s;
        let snap = Snapshot::new(config, &self.state.joints)?;
        let pose_reference = self.pose_reference(t);

        let mut efforts = Vec::with_capacity(config.units.len());
        if sc.sim.joint_control {
            let refs = self.joint_references(t)?;
            for (u, unit) in config.units.iter().enumerate() {
                let e = joint_controller(
                    &mut self.joint_ctl[u],
                    &self.state.joints[u],
                    &refs[u],
                    &sc.joint_gains,
                    &unit.params,
                    dt,
                )?;
                efforts.push(JointEfforts::from_array(e));
            }
        } else {
            efforts.resize(config.units.len(), JointEfforts::default());
        }

        let mut body = Wrench::zero(Frame::Inertial);
        if sc.sim.base_control {
            let r = self.state.base.attitude.to_rotation_matrix();
            let ff = Feedforward {
                mass: snap.total_mass,
                inertia: r.matrix() * snap.inertia * r.matrix().transpose(),
            };
            body = pose_controller(
                &mut self.pose_ctl,
                &self.state.base,
                &pose_reference,
                &sc.pose_gains,
                &ff,
                dt,
            );
            if sc.sim.reaction_feedforward && !config.units.is_empty() {
                // Joint accelerations the clamped efforts produce on a held base.
                let (limited, _) = apply_saturation(
                    &ControlCommand {
                        body: Wrench::zero(Frame::Inertial),
                        joints: efforts.clone(),
                    },
                    &config.limits,
                    &self.state.base.attitude,
                );
                let accels = snap
                    .lumps
                    .iter()
                    .zip(&self.state.joints)
                    .zip(&limited.joints)
                    .zip(&config.units)
                    .map(|(((lumps, j), e), unit)| {
                        let (m, bias) = joint_space_dynamics(lumps);
                        let qd = j.rates();
                        let tau = Vec3::new(
                            e.pan - unit.friction.revolute * qd[0],
                            e.pitch - unit.friction.revolute * qd[1],
                            e.actuation - unit.friction.prismatic * qd[2],
                        );
                        let a = symmetric_pd_inverse(&m).map_or(Vec3::zeros(), |inv| inv * (tau - bias));
                        [a.x, a.y, a.z]
                    })
                    .collect::<Vec<_>>();
                let hold = hold_wrench(&snap, &self.state, &accels);
                body = Wrench::new(body.force + hold.force, body.torque + hold.torque, Frame::Inertial);
            }
        }

        let commanded = ControlCommand { body, joints: efforts };
        let (applied, flags) = apply_saturation(&commanded, &config.limits, &self.state.base.attitude);
        Ok(ControlOutput {
            commanded,
            applied,
            flags,
            pose_reference,
        })
    }

    fn record(&mut self, out: &ControlOutput) {
        let t = self.time();
        let s = &mut self.summary;
        let base = &self.state.base;
        let pr = &out.pose_reference.state;
        s.max_position_error_m = s.max_position_error_m.max((pr.position - base.position).norm());
        s.max_attitude_error_rad = s
            .max_attitude_error_rad
            .max(rotation_error(&pr.attitude, &base.attitude).norm());
        let c = &out.commanded.body;
        let a = &out.applied.body;
        for i in 0..3 {
            s.max_abs_force_n[i] = s.max_abs_force_n[i].max(a.force[i].abs());
            s.max_abs_torque_n_m[i] = s.max_abs_torque_n_m[i].max(a.torque[i].abs());
            s.max_abs_cmd_force_n[i] = s.max_abs_cmd_force_n[i].max(c.force[i].abs());
            s.max_abs_cmd_torque_n_m[i] = s.max_abs_cmd_torque_n_m[i].max(c.torque[i].abs());
        }
        for (cmd, app) in out.commanded.joints.iter().zip(&out.applied.joints) {
            let (cmd, app) = (cmd.as_array(), app.as_array());
            for j in 0..3 {
                s.max_joint_command[j] = s.max_joint_command[j].max(cmd[j].abs());
                s.max_joint_effort[j] = s.max_joint_effort[j].max(app[j].abs());
            }
        }
        let onset = out.flags.0 & !self.prev_flags.0;
        for bit in 0..32 {
            if onset & (1 << bit) != 0 {
                s.events.push(Event {
                    t_s: t,
                    kind: EventKind::SaturationOnset,
                    detail: SaturationFlags::channel_name(bit),
                });
            }
        }
        self.prev_flags = out.flags;
    }

    fn row(&self, out: &ControlOutput) -> TelemetryRow {
        let b = &self.state.base;
        let q = b.attitude.quaternion();
        let j = self.state.joints.first().copied().unwrap_or_default();
        let e = out.applied.joints.first().copied().unwrap_or_default();
        let c = &out.commanded.body;
        let a = &out.applied.body;
        let imp = &self.impulse;
        [
            self.time(),
            b.position.x,
            b.position.y,
            b.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
            b.linear_velocity.x,
            b.linear_velocity.y,
            b.linear_velocity.z,
            b.angular_velocity.x,
            b.angular_velocity.y,
            b.angular_velocity.z,
            j.pan,
            j.pitch,
            j.actuation,
            j.pan_rate,
            j.pitch_rate,
            j.actuation_rate,
            c.force.x,
            c.force.y,
            c.force.z,
            c.torque.x,
            c.torque.y,
            c.torque.z,
            a.force.x,
            a.force.y,
            a.force.z,
            a.torque.x,
            a.torque.y,
            a.torque.z,
            e.pan,
            e.pitch,
            e.actuation,
            out.flags.0 as f64,
            imp.unsigned[0],
            imp.unsigned[1],
            imp.unsigned[2],
            imp.net[0],
            imp.net[1],
            imp.net[2],
        ]
    }

    /// Runs one control cycle and advances the dynamics. Returns the
    /// telemetry row for the pre-step state when it falls on a sample.
    pub fn step(&mut self) -> Result<Option<TelemetryRow>> {
        let t = self.time();
        let fault = |e: SimError| match e {
            SimError::NumericalFault { what, .. } => SimError::NumericalFault { time: t, what },
            other => other,
        };
        let out = self.control().map_err(fault)?;
        self.record(&out);
        let sampled = self.step % self.scenario.sample_every() == 0;
        let row = sampled.then(|| self.row(&out));
        if self.is_finished() {
            return Ok(row);
        }
        let dt = self.scenario.sim.dt_s;
        let next = step_coupled(&self.scenario.vehicle, &self.state, &out.applied, dt).map_err(fault)?;
        let mut hit_now = vec![false; self.at_limit.len()];
        for hit in &next.limit_hits {
            hit_now[hit.unit] = true;
            if !self.at_limit[hit.unit] {
                self.summary.events.push(Event {
                    t_s: t + dt,
                    kind: EventKind::JointLimit,
                    detail: format!(
                        "ehs{} actuation at {} stop (y = {} m)",
                        hit.unit,
                        if hit.upper { "folded" } else { "extended" },
                        hit.actuation
                    ),
                });
            }
        }
        self.at_limit = hit_now;
        self.impulse = accumulate_impulse(self.impulse, &out.applied.body.force, dt);
        self.state = next.state;
        self.step += 1;
        Ok(row)
    }

    /// Runs to the configured duration.
    pub fn run(mut self) -> Result<(Telemetry, RunSummary)> {
        let mut telemetry = Telemetry::default();
        loop {
            let done = self.is_finished();
            if let Some(row) = self.step()? {
                telemetry.rows.push(row);
            }
            if done {
                break;
            }
        }
        Ok((telemetry, self.finish()?))
    }

    fn finish(mut self) -> Result<RunSummary> {
        let sc = &self.scenario;
        let goal = sc.maneuver.pose_goal.unwrap_or_else(|| sc.initial.base.pose());
        let pose = self.state.base.pose();
        let (a, b, g) = rotation_to_euler(&pose.attitude);
        let s = &mut self.summary;
        s.steps = self.step;
        s.final_pose = [pose.position.x, pose.position.y, pose.position.z, a, b, g];
        s.final_position_error_m = (goal.position - pose.position).norm();
        s.final_attitude_error_rad = rotation_error(&goal.attitude, &pose.attitude).norm();
        s.impulse_unsigned_n_s = self.impulse.unsigned;
        s.impulse_net_n_s = self.impulse.net;
        s.final_joints = self.state.joints.iter().map(|j| j.positions()).collect();
        s.final_extension_m = self
            .state
            .joints
            .iter()
            .zip(&sc.vehicle.units)
            .map(|(j, u)| extension_from_actuation(j.actuation, &u.params))
            .collect::<Result<_>>()?;
        Ok(self.summary)
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<(Telemetry, RunSummary)> {
    Engine::new(scenario.clone()).run()
}

/// Pose of the base at the end of a run, for convenience in tests and examples.
pub fn final_pose(summary: &RunSummary) -> Pose {
    Pose::from_tuple(summary.final_pose)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_examples() {
        let mut acc = ImpulseAccumulator::default();
        for _ in 0..1000 {
            acc = accumulate_impulse(acc, &Vec3::new(0.1, 0.0, 0.0), 0.01);
        }
        assert!((acc.unsigned[0] - 1.0).abs() < 1e-12);
        assert_eq!(acc.unsigned[1], 0.0);

        let mut acc = ImpulseAccumulator::default();
        for k in 0..200 {
            let f = if k < 100 { 0.2 } else { -0.2 };
            acc = accumulate_impulse(acc, &Vec3::new(f, -f, 0.0), 0.01);
        }
        assert!(acc.net[0].abs() < 1e-12);
        assert!((acc.unsigned[0] - 0.4).abs() < 1e-12);
        assert!((acc.unsigned[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn columns_are_unique_and_aliases_resolve() {
        let mut sorted = COLUMNS.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), COLUMNS.len());
        for (alias, col) in ALIASES {
            assert_eq!(Telemetry::column_index(alias), Telemetry::column_index(col));
        }
        assert_eq!(Telemetry::column_index("nope"), None);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut row = [0.0; 42];
        for (i, v) in row.iter_mut().enumerate() {
            *v = (i as f64 + 0.1).powf(1.7) / 3.0 - 1e-17 * i as f64;
        }
        row[5] = -0.0;
        row[6] = 1e-300;
        let t = Telemetry { rows: vec![row, row.map(|v| v * std::f64::consts::PI)] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Telemetry::read_csv(buf.as_slice()).unwrap();
        for (a, b) in t.rows.iter().zip(&back.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    fn summary() -> RunSummary {
        RunSummary {
            scenario: "s".into(),
            dt_s: 0.001,
            duration_s: 1.0,
            steps: 1000,
            final_pose: [1.0, 2.0, 3.0, 0.0, 0.0, 0.0],
            final_position_error_m: 0.001,
            final_attitude_error_rad: 0.0,
            max_position_error_m: 0.01,
            max_attitude_error_rad: 0.0,
            max_abs_force_n: [0.1, 0.05, 0.0],
            max_abs_torque_n_m: [0.0; 3],
            max_abs_cmd_force_n: [0.2, 0.05, 0.0],
            max_abs_cmd_torque_n_m: [0.0; 3],
            impulse_unsigned_n_s: [4.33, 4.32, 1.74],
            impulse_net_n_s: [0.0; 3],
            max_joint_effort: [0.0; 3],
            max_joint_command: [0.0; 3],
            final_joints: vec![[0.0, 0.0, 0.18]],
            final_extension_m: vec![0.59],
            events: vec![],
        }
    }

    #[test]
    fn identical_summaries_pass() {
        let s = summary();
        let mut tol = Tolerances::default();
        tol.fields.insert("impulse_unsigned_n_s".into(), Tolerance { abs: 0.0, rel: 0.0 });
        tol.fields.insert("final_pose".into(), Tolerance { abs: 0.0, rel: 0.0 });
        let r = compare_summary(&s, &s, &tol);
        assert!(r.passed());
        assert_eq!(r.checked, 9);
    }

    #[test]
    fn impulse_off_by_ten_percent_fails_named_field() {
        let reference = summary();
        let mut result = summary();
        result.impulse_unsigned_n_s[1] *= 1.10;
        let mut tol = Tolerances::default();
        tol.fields.insert("impulse_unsigned_n_s".into(), Tolerance { abs: 0.0, rel: 0.05 });
        let r = compare_summary(&result, &reference, &tol);
        assert!(!r.passed());
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "impulse_unsigned_n_s.y");
    }

    #[test]
    fn upper_bounds_and_unmatched_keys() {
        let s = summary();
        let mut tol = Tolerances::default();
        tol.upper.insert("max_abs_force_n".into(), 0.1);
        assert!(compare_summary(&s, &s, &tol).passed());
        tol.upper.insert("max_abs_cmd_force_n".into(), 0.1);
        assert!(!compare_summary(&s, &s, &tol).passed());
        let mut tol = Tolerances::default();
        tol.fields.insert("impulse_unsigned".into(), Tolerance::default());
        let r = compare_summary(&s, &s, &tol);
        assert_eq!(r.unmatched, vec!["impulse_unsigned".to_string()]);
    }

    #[test]
    fn summary_json_round_trip() {
        let mut s = summary();
        s.events.push(Event { t_s: 1.5, kind: EventKind::JointLimit, detail: "x".into() });
        assert_eq!(RunSummary::from_json(&s.to_json()).unwrap(), s);
    }
}
