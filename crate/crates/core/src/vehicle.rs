//! Free-floating cubesat coupled to one or more booms.
//!
//! Generalized velocities are `[v (inertial), omega (body), qdot_1 .. qdot_k]`.
//! Accelerations come from Kane's equations over the base body and all boom
//! lumps. The stepper then advances the system momenta rather than the base
//! velocities directly:
//!
//! 1. joint rates `qdot += dt * qddot`, linear momentum `P += dt * F`,
//!    angular momentum about the combined CoM `H += dt * T`;
//! 2. the base rate that realises `H` is rotated into the attitude, joints
//!    advance with the new rates;
//! 3. the combined CoM advances with the step-averaged `P / m`, and base
//!    position, velocity and rate are recovered from the new configuration.
//!
//! Internal joint efforts, friction and joint stops therefore never change
//! the total momenta or move the combined CoM, to round-off.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ehs::{composite_inertia, lump_kinematics, reaction_from_lumps, EhsMassModel, LumpKinematics};
use crate::error::{Result, SimError};
use crate::scissor::{EhsJointState, MountFrame, ScissorParams};
use crate::spatial::{advance_attitude, is_finite3, skew, symmetric_pd_inverse, Frame, Mat3, RigidBodyState, Rotation, Vec3, Wrench};

/// Actuator saturation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorLimits {
    /// Per inertial axis (N).
    pub body_force_n: f64,
    /// Per inertial axis (N·m).
    pub body_torque_n_m: f64,
    /// Prismatic actuation joint (N).
    pub prismatic_force_n: f64,
    /// Pan and pitch joints (N·m).
    pub revolute_torque_n_m: f64,
    /// Structural per-link force bound (N). Reported, not enforced on the actuator.
    pub link_force_n: f64,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        ActuatorLimits {
            body_force_n: 0.1,
            body_torque_n_m: 0.2,
            prismatic_force_n: 40.0,
            revolute_torque_n_m: 0.2,
            link_force_n: 20.0,
        }
    }
}

impl ActuatorLimits {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("limits.body_force_n", self.body_force_n),
            ("limits.body_torque_n_m", self.body_torque_n_m),
            ("limits.prismatic_force_n", self.prismatic_force_n),
            ("limits.revolute_torque_n_m", self.revolute_torque_n_m),
            ("limits.link_force_n", self.link_force_n),
        ] {
            if !(v > 0.0) {
                return Err(SimError::config(k, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Viscous joint friction coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointFriction {
    /// N·m·s/rad, pan and pitch.
    pub revolute: f64,
    /// N·s/m, actuation.
    pub prismatic: f64,
}

impl Default for JointFriction {
    fn default() -> Self {
        JointFriction {
            revolute: 0.01,
            prismatic: 0.01,
        }
    }
}

/// One boom and where it sits on the body.
#[derive(Debug, Clone, PartialEq)]
pub struct EhsUnit {
    pub mount: MountFrame,
    pub params: ScissorParams,
    pub mass: EhsMassModel,
    pub friction: JointFriction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleConfig {
    pub dry_mass: f64,
    pub dims: Vec3,
    /// Body-frame inertia of the dry body about its origin (its CoM).
    pub inertia: Mat3,
    pub units: Vec<EhsUnit>,
    pub limits: ActuatorLimits,
}

impl VehicleConfig {
    pub fn total_mass(&self) -> f64 {
        self.dry_mass + self.units.iter().map(|u| u.mass.total_mass).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dry_mass > 0.0 && self.dry_mass.is_finite()) {
            return Err(SimError::config("vehicle.mass_kg", "must be > 0"));
        }
        if self.dims.iter().any(|d| !(*d > 0.0)) {
            return Err(SimError::config("vehicle.dims_m", "all dimensions must be > 0"));
        }
        if symmetric_pd_inverse(&self.inertia).is_none() {
            return Err(SimError::config(
                "vehicle.inertia_kg_m2",
                "must be symmetric positive definite",
            ));
        }
        self.limits.validate()?;
        for u in &self.units {
            u.params.validate()?;
            u.mass.validate(&u.params)?;
        }
        Ok(())
    }
}

/// Uniform-density box inertia about its centre, body axes along the edges.
pub fn derive_box_inertia(mass: f64, dims: Vec3) -> Mat3 {
    let (a2, b2, c2) = (dims.x * dims.x, dims.y * dims.y, dims.z * dims.z);
    Mat3::from_diagonal(&Vec3::new(b2 + c2, a2 + c2, a2 + b2)) * (mass / 12.0)
}

/// Pan torque, pitch torque (N·m) and actuation force (N) of one boom.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointEfforts {
    pub pan: f64,
    pub pitch: f64,
    pub actuation: f64,
}

impl JointEfforts {
    pub fn as_array(&self) -> [f64; 3] {
        [self.pan, self.pitch, self.actuation]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        JointEfforts {
            pan: a[0],
            pitch: a[1],
            actuation: a[2],
        }
    }
}

/// Body wrench (applied at the base-fixed point coinciding with the combined
/// CoM) and one set of joint efforts per boom.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlCommand {
    pub body: Wrench,
    pub joints: Vec<JointEfforts>,
}

impl ControlCommand {
    pub fn zero(units: usize) -> Self {
        ControlCommand {
            body: Wrench::zero(Frame::Inertial),
            joints: vec![JointEfforts::default(); units],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.body.is_finite()
            && self
                .joints
                .iter()
                .all(|j| j.as_array().iter().all(|v| v.is_finite()))
    }
}

/// Bitmask of saturated channels. Bits 0-2 body force x/y/z, bits 3-5 body
/// torque x/y/z, then three bits per boom (pan, pitch, actuation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SaturationFlags(pub u32);

impl SaturationFlags {
    pub fn force(axis: usize) -> u32 {
        1 << axis
    }
    pub fn torque(axis: usize) -> u32 {
        1 << (3 + axis)
    }
    pub fn joint(unit: usize, joint: usize) -> u32 {
        1 << (6 + 3 * unit + joint)
    }
    pub fn contains(&self, bit: u32) -> bool {
        self.0 & bit != 0
    }
    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Human-readable channel name for bit `i`.
    pub fn channel_name(i: u32) -> String {
        const AXES: [&str; 3] = ["x", "y", "z"];
        const JOINTS: [&str; 3] = ["pan", "pitch", "actuation"];
        match i {
            0..=2 => format!("force_{}", AXES[i as usize]),
            3..=5 => format!("torque_{}", AXES[i as usize - 3]),
            _ => {
                let k = (i - 6) as usize;
                format!("ehs{}_{}", k / 3, JOINTS[k % 3])
            }
        }
    }
}

/// Clamps every scalar channel independently. The body wrench is clamped per
/// inertial axis.
pub fn apply_saturation(cmd: &ControlCommand, limits: &ActuatorLimits, attitude: &Rotation) -> (ControlCommand, SaturationFlags) {
    let mut flags = 0u32;
    let mut clamp = |v: f64, lim: f64, bit: u32| {
        if v.abs() > lim {
            flags |= bit;
        }
        v.clamp(-lim, lim)
    };
    let w = cmd.body.to_inertial(attitude);
    let mut force = w.force;
    let mut torque = w.torque;
    for i in 0..3 {
        force[i] = clamp(force[i], limits.body_force_n, SaturationFlags::force(i));
        torque[i] = clamp(torque[i], limits.body_torque_n_m, SaturationFlags::torque(i));
    }
    let joints = cmd
        .joints
        .iter()
        .enumerate()
        .map(|(u, j)| JointEfforts {
            pan: clamp(j.pan, limits.revolute_torque_n_m, SaturationFlags::joint(u, 0)),
            pitch: clamp(j.pitch, limits.revolute_torque_n_m, SaturationFlags::joint(u, 1)),
            actuation: clamp(j.actuation, limits.prismatic_force_n, SaturationFlags::joint(u, 2)),
        })
        .collect();
    (
        ControlCommand {
            body: Wrench::new(force, torque, Frame::Inertial),
            joints,
        },
        SaturationFlags(flags),
    )
}

/// Base state plus the joint state of every boom.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub base: RigidBodyState,
    pub joints: Vec<EhsJointState>,
}

impl SystemState {
    pub fn is_finite(&self) -> bool {
        self.base.is_finite() && self.joints.iter().all(|j| j.is_finite())
    }
}

/// Configuration-dependent quantities at one instant, body frame.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub lumps: Vec<Vec<LumpKinematics>>,
    pub total_mass: f64,
    /// Combined CoM offset from the base origin.
    pub com_offset: Vec3,
    /// Inertia about the combined CoM.
    pub inertia: Mat3,
}

impl Snapshot {
    pub fn new(config: &VehicleConfig, joints: &[EhsJointState]) -> Result<Self> {
        if joints.len() != config.units.len() {
            return Err(SimError::config(
                "mounts",
                format!("{} joint states for {} booms", joints.len(), config.units.len()),
            ));
        }
        let lumps = config
            .units
            .iter()
            .zip(joints)
            .map(|(u, j)| lump_kinematics(j, &u.params, &u.mass, &u.mount))
            .collect::<Result<Vec<_>>>()?;
        let flat: Vec<LumpKinematics> = lumps.iter().flatten().copied().collect();
        let (com_offset, inertia) = composite_inertia(config.dry_mass, &config.inertia, &flat);
        Ok(Snapshot {
            lumps,
            total_mass: config.total_mass(),
            com_offset,
            inertia,
        })
    }

    /// Angular momentum of joint motion about the combined CoM, body frame.
    fn joint_angular_momentum(&self, joints: &[EhsJointState]) -> Vec3 {
        self.lumps
            .iter()
            .zip(joints)
            .flat_map(|(ls, j)| {
                let qd = Vec3::from(j.rates());
                ls.iter()
                    .map(move |l| (l.position - self.com_offset).cross(&(l.jacobian * qd)) * l.mass)
            })
            .sum()
    }

    /// Mass-weighted joint velocity `sum m_i J_i qdot`, body frame.
    fn joint_linear_momentum(&self, joints: &[EhsJointState]) -> Vec3 {
        self.lumps
            .iter()
            .zip(joints)
            .flat_map(|(ls, j)| {
                let qd = Vec3::from(j.rates());
                ls.iter().map(move |l| l.jacobian * qd * l.mass)
            })
            .sum()
    }

    /// Body rate that realises angular momentum `h` (inertial) about the combined CoM.
    fn rate_from_momentum(&self, h: &Vec3, attitude: &Rotation, joints: &[EhsJointState]) -> Result<Vec3> {
        let inv = symmetric_pd_inverse(&self.inertia)
            .ok_or_else(|| SimError::config("vehicle.inertia_kg_m2", "composite inertia not positive definite"))?;
        Ok(inv * (attitude.inverse_transform_vector(h) - self.joint_angular_momentum(joints)))
    }

    /// Base velocity that realises linear momentum `p` (inertial).
    fn velocity_from_momentum(&self, p: &Vec3, attitude: &Rotation, omega: &Vec3, joints: &[EhsJointState]) -> Vec3 {
        let rel = omega.cross(&self.com_offset) + self.joint_linear_momentum(joints) / self.total_mass;
        p / self.total_mass - attitude * rel
    }
}

/// Total linear momentum, angular momentum about the combined CoM, and the
/// combined CoM position, all inertial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMomentum {
    pub linear: Vec3,
    pub angular: Vec3,
    pub com: Vec3,
}

pub fn system_momentum(config: &VehicleConfig, state: &SystemState) -> Result<SystemMomentum> {
    let snap = Snapshot::new(config, &state.joints)?;
    Ok(momentum_from_snapshot(&snap, state))
}

fn momentum_from_snapshot(snap: &Snapshot, state: &SystemState) -> SystemMomentum {
    let b = &state.base;
    let rel = b.angular_velocity.cross(&snap.com_offset) * snap.total_mass + snap.joint_linear_momentum(&state.joints);
    let h_body = snap.inertia * b.angular_velocity + snap.joint_angular_momentum(&state.joints);
    SystemMomentum {
        linear: b.linear_velocity * snap.total_mass + b.attitude * rel,
        angular: b.attitude * h_body,
        com: b.position + b.attitude * snap.com_offset,
    }
}

/// Generalized accelerations `[vdot (inertial), omegadot (body), qddot ...]`.
pub fn accelerations(
    config: &VehicleConfig,
    snap: &Snapshot,
    state: &SystemState,
    cmd: &ControlCommand,
) -> Result<DVector<f64>> {
    let k = config.units.len();
    let n = 6 + 3 * k;
    let r = state.base.attitude.to_rotation_matrix();
    let r = *r.matrix();
    let rt = r.transpose();
    let omega = state.base.angular_velocity;

    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);

    let put = |m: &mut DMatrix<f64>, row: usize, col: usize, b: &Mat3| {
        m.view_mut((row, col), (3, 3)).add_assign(b);
    };
    put(&mut m, 0, 0, &(Mat3::identity() * config.dry_mass));
    put(&mut m, 3, 3, &config.inertia);
    let gyro = omega.cross(&(config.inertia * omega));

    let body = cmd.body.to_inertial(&state.base.attitude);
    // Force acts at the base-fixed point coincident with the combined CoM.
    let torque_b = rt * body.torque + snap.com_offset.cross(&(rt * body.force));
    let mut q_v = body.force;
    let mut q_w = torque_b - gyro;

    for (u, (lumps, joints)) in snap.lumps.iter().zip(&state.joints).enumerate() {
        let col = 6 + 3 * u;
        let qd = Vec3::from(joints.rates());
        let unit = &config.units[u];
        let effort = Vec3::from(cmd.joints[u].as_array());
        let friction = Vec3::new(
            unit.friction.revolute * qd.x,
            unit.friction.revolute * qd.y,
            unit.friction.prismatic * qd.z,
        );
        let mut q_j = effort - friction;
        for l in lumps {
            let s = skew(&l.position);
            let jac = l.jacobian;
            let u_rel = jac * qd;
            let beta = omega.cross(&omega.cross(&l.position)) + omega.cross(&u_rel) * 2.0 + l.jdot_qdot;
            let mi = l.mass;
            put(&mut m, 0, 0, &(Mat3::identity() * mi));
            put(&mut m, 0, 3, &(-(r * s) * mi));
            put(&mut m, 3, 0, &(-(r * s) * mi).transpose());
            put(&mut m, 0, col, &(r * jac * mi));
            put(&mut m, col, 0, &(r * jac * mi).transpose());
            put(&mut m, 3, 3, &(-(s * s) * mi));
            put(&mut m, 3, col, &(s * jac * mi));
            put(&mut m, col, 3, &(s * jac * mi).transpose());
            put(&mut m, col, col, &(jac.transpose() * jac * mi));
            q_v -= r * beta * mi;
            q_w -= l.position.cross(&beta) * mi;
            q_j -= jac.transpose() * beta * mi;
        }
        rhs.fixed_rows_mut::<3>(col).copy_from(&q_j);
    }
    rhs.fixed_rows_mut::<3>(0).copy_from(&q_v);
    rhs.fixed_rows_mut::<3>(3).copy_from(&q_w);

    let chol = m.cholesky().ok_or_else(|| SimError::NumericalFault {
        time: f64::NAN,
        what: "system mass matrix is not positive definite".into(),
    })?;
    Ok(chol.solve(&rhs))
}

trait AddAssignMat {
    fn add_assign(&mut self, b: &Mat3);
}

impl AddAssignMat for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, b: &Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self[(i, j)] += b[(i, j)];
            }
        }
    }
}

/// A joint hit an actuation stop during a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimitHit {
    pub unit: usize,
    /// `true` for the folded (upper) stop.
    pub upper: bool,
    pub actuation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SystemState,
    pub limit_hits: Vec<JointLimitHit>,
}

/// Advances base and booms by one fixed step under an already saturated command.
pub fn step_coupled(config: &VehicleConfig, state: &SystemState, cmd: &ControlCommand, dt: f64) -> Result<StepOutcome> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::config("sim.dt_s", format!("must be > 0, got {dt}")));
    }
    if cmd.joints.len() != config.units.len() {
        return Err(SimError::config("command", "joint effort count does not match boom count"));
    }
    if !state.is_finite() || !cmd.is_finite() {
        return Err(SimError::NumericalFault {
            time: f64::NAN,
            what: "non-finite state or command".into(),
        });
    }
    let snap = Snapshot::new(config, &state.joints)?;
    let mom = momentum_from_snapshot(&snap, state);
    let acc = accelerations(config, &snap, state, cmd)?;

    let body = cmd.body.to_inertial(&state.base.attitude);
    let linear = mom.linear + body.force * dt;
    let angular = mom.angular + body.torque * dt;

    let mut joints: Vec<EhsJointState> = state
        .joints
        .iter()
        .enumerate()
        .map(|(u, j)| {
            let q = &acc.as_slice()[6 + 3 * u..9 + 3 * u];
            let r = j.rates();
            j.with_rates([r[0] + dt * q[0], r[1] + dt * q[1], r[2] + dt * q[2]])
        })
        .collect();

    let omega_mid = snap.rate_from_momentum(&angular, &state.base.attitude, &joints)?;
    let attitude = advance_attitude(&state.base.attitude, &Rotation::from_scaled_axis(omega_mid * dt));

    let mut limit_hits = Vec::new();
    for (u, j) in joints.iter_mut().enumerate() {
        let p = &config.units[u].params;
        let q = j.positions();
        let r = j.rates();
        let mut next = j.with_positions([q[0] + dt * r[0], q[1] + dt * r[1], q[2] + dt * r[2]]).wrapped();
        if next.actuation > p.y_max() || next.actuation < p.y_min() {
            let upper = next.actuation > p.y_max();
            next.actuation = if upper { p.y_max() } else { p.y_min() };
            next.actuation_rate = 0.0;
            limit_hits.push(JointLimitHit {
                unit: u,
                upper,
                actuation: next.actuation,
            });
        }
        *j = next;
    }

    let next_snap = Snapshot::new(config, &joints)?;
    let omega = next_snap.rate_from_momentum(&angular, &attitude, &joints)?;
    let com = mom.com + (mom.linear + linear) * (0.5 * dt / snap.total_mass);
    // Written as increments so that a system at rest stays bit-identical.
    let position = state.base.position + (com - mom.com)
        - (attitude * next_snap.com_offset - state.base.attitude * snap.com_offset);
    let velocity = next_snap.velocity_from_momentum(&linear, &attitude, &omega, &joints);

    let next = SystemState {
        base: RigidBodyState {
            position,
            attitude,
            linear_velocity: velocity,
            angular_velocity: omega,
        },
        joints,
    };
    if !next.is_finite() || !is_finite3(&com) {
        return Err(SimError::NumericalFault {
            time: f64::NAN,
            what: "system state became non-finite".into(),
        });
    }
    Ok(StepOutcome { state: next, limit_hits })
}

/// Inertial base wrench that holds the base still while each boom follows
/// `joint_accels` from the current state (the negated boom reactions, moved
/// to the combined CoM so it can be commanded directly).
pub fn hold_wrench(
    snap: &Snapshot,
    state: &SystemState,
    joint_accels: &[[f64; 3]],
) -> Wrench {
    let omega = state.base.angular_velocity;
    let (f, t) = snap
        .lumps
        .iter()
        .zip(&state.joints)
        .zip(joint_accels)
        .fold((Vec3::zeros(), Vec3::zeros()), |(f, t), ((lumps, j), a)| {
            let w = reaction_from_lumps(lumps, j, *a, &omega);
            (f - w.force, t - w.torque)
        });
    // Torque about the base origin, re-referenced to the force application point.
    let t_com = t - snap.com_offset.cross(&f);
    Wrench::new(f, t_com, Frame::Body).to_inertial(&state.base.attitude)
}
