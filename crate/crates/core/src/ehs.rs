//! Lumped-mass model of the deploying boom.
//!
//! Link mass is lumped at the crossing pivot of each link pair, on the boom
//! axis. Transverse link offsets cancel by symmetry, so the axial momentum
//! exchange is preserved without modelling every link as a rigid body. The
//! actuation bar slider sits on the boom-frame `y` axis at the actuation
//! coordinate, and the effector at the tip.
//!
//! Lump order is always `[pair 0 .. pair N-1, actuation bar, effector]`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::scissor::{boom_rotation, EhsJointState, MountFrame, ScissorParams};
use crate::spatial::{skew, Frame, Mat3, RigidBodyState, Vec3, Wrench};

/// Fractions of the boom mass assigned to links, actuation bar and effector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    pub links: f64,
    pub actuation_bar: f64,
    pub effector: f64,
}

impl Default for MassSplit {
    fn default() -> Self {
        MassSplit {
            links: 0.85,
            actuation_bar: 0.10,
            effector: 0.05,
        }
    }
}

/// Mass distribution of one boom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhsMassModel {
    pub total_mass: f64,
    /// One entry per individual link (`2N` entries).
    pub link_masses: Vec<f64>,
    pub effector_mass: f64,
    pub actuation_bar_mass: f64,
}

impl EhsMassModel {
    pub fn from_split(total_mass: f64, split: MassSplit, params: &ScissorParams) -> Result<Self> {
        let parts = [split.links, split.actuation_bar, split.effector];
        if parts.iter().any(|f| !(*f > 0.0)) {
            return Err(SimError::config("ehs.mass_split", "fractions must be > 0"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::config(
                "ehs.mass_split",
                format!("fractions must sum to 1, got {sum}"),
            ));
        }
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(SimError::config("ehs.mass_kg", "must be > 0"));
        }
        let links = 2 * params.pair_count as usize;
        Ok(EhsMassModel {
            total_mass,
            link_masses: vec![total_mass * split.links / links as f64; links],
            effector_mass: total_mass * split.effector,
            actuation_bar_mass: total_mass * split.actuation_bar,
        })
    }

    /// Lump masses in lump order.
    pub fn lump_masses(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self
            .link_masses
            .chunks(2)
            .map(|pair| pair.iter().sum())
            .collect();
        m.push(self.actuation_bar_mass);
        m.push(self.effector_mass);
        m
    }

    pub fn validate(&self, params: &ScissorParams) -> Result<()> {
        if self.link_masses.len() != 2 * params.pair_count as usize {
            return Err(SimError::config(
                "ehs.mass",
                format!(
                    "expected {} link masses, got {}",
                    2 * params.pair_count,
                    self.link_masses.len()
                ),
            ));
        }
        let all = self
            .link_masses
            .iter()
            .chain([&self.effector_mass, &self.actuation_bar_mass]);
        if all.clone().any(|m| !(*m > 0.0)) {
            return Err(SimError::config("ehs.mass", "all masses must be > 0"));
        }
        let sum: f64 = all.sum();
        if (sum - self.total_mass).abs() > 1e-9 * self.total_mass {
            return Err(SimError::config(
                "ehs.mass",
                format!("lump masses sum to {sum}, total is {}", self.total_mass),
            ));
        }
        Ok(())
    }
}

/// Axial pivot stations: the `N + 1` pair junctions `L_B + 2k sqrt(L_L^2 - y^2)`
/// followed by the effector station.
pub fn link_stations(joints: &EhsJointState, p: &ScissorParams) -> Result<Vec<f64>> {
    let x = crate::scissor::extension_from_actuation(joints.actuation, p)?;
    let c = p.half_projection(joints.actuation);
    let mut s: Vec<f64> = (0..=p.pair_count)
        .map(|k| p.base_offset + 2.0 * k as f64 * c)
        .collect();
    s.push(x);
    Ok(s)
}

/// Boom-frame position of each lump and its first and second derivatives
/// with respect to the actuation coordinate.
fn boom_frame_lumps(y: f64, p: &ScissorParams) -> Result<Vec<[Vec3; 3]>> {
    let l = p.half_link_length;
    if !(0.0..l).contains(&y) {
        return Err(SimError::Domain(format!(
            "actuation y = {y} outside [0, {l}) for dynamics"
        )));
    }
    let c = p.half_projection(y);
    let dc = -y / c;
    let ddc = -l * l / (c * c * c);
    let mut out = Vec::with_capacity(p.pair_count as usize + 2);
    for k in 0..p.pair_count {
        let n = (2 * k + 1) as f64;
        out.push([
            Vec3::new(p.base_offset + n * c, 0.0, 0.0),
            Vec3::new(n * dc, 0.0, 0.0),
            Vec3::new(n * ddc, 0.0, 0.0),
        ]);
    }
    out.push([Vec3::new(0.0, y, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::zeros()]);
    let f = p.stroke_factor();
    out.push([
        Vec3::new(p.folded_extension() + f * c, 0.0, 0.0),
        Vec3::new(f * dc, 0.0, 0.0),
        Vec3::new(f * ddc, 0.0, 0.0),
    ]);
    Ok(out)
}

/// Kinematics of one lump relative to the base body, in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpKinematics {
    pub mass: f64,
    /// Position relative to the base origin.
    pub position: Vec3,
    /// Columns are `d position / d (pan, pitch, actuation)`.
    pub jacobian: Mat3,
    /// Velocity-product acceleration `dJ/dt * qdot` (zero joint acceleration).
    pub jdot_qdot: Vec3,
}

impl LumpKinematics {
    /// Velocity relative to the base frame due to joint motion.
    pub fn joint_velocity(&self, qdot: &Vec3) -> Vec3 {
        self.jacobian * qdot
    }
}

/// Evaluates the lumps of one boom.
pub fn lump_kinematics(
    joints: &EhsJointState,
    p: &ScissorParams,
    model: &EhsMassModel,
    mount: &MountFrame,
) -> Result<Vec<LumpKinematics>> {
    let lumps = boom_frame_lumps(joints.actuation, p)?;
    let masses = model.lump_masses();
    let boom = boom_rotation(joints.pan, joints.pitch);
    let e1 = Vec3::z();
    // Pitch axis: mount y after the pan rotation.
    let e2 = Vec3::new(-joints.pan.sin(), joints.pan.cos(), 0.0);
    let (dpan, dpitch, dy) = (joints.pan_rate, joints.pitch_rate, joints.actuation_rate);
    let omega = e1 * dpan + e2 * dpitch;
    let omega_dot = e1.cross(&e2) * (dpan * dpitch);
    let mount_rot = mount.rotation.to_rotation_matrix();
    let mount_rot = mount_rot.matrix();

    Ok(lumps
        .iter()
        .zip(masses)
        .map(|([s, ds, dds], mass)| {
            let w = boom * s;
            let w_y = boom * ds;
            let w_yy = boom * dds;
            let w_dot = omega.cross(&w) + w_y * dy;
            let acc = omega_dot.cross(&w)
                + omega.cross(&w_dot)
                + omega.cross(&w_y) * dy
                + w_yy * (dy * dy);
            let jac = Matrix3::from_columns(&[e1.cross(&w), e2.cross(&w), w_y]);
            LumpKinematics {
                mass,
                position: mount.offset + mount_rot * w,
                jacobian: mount_rot * jac,
                jdot_qdot: mount_rot * acc,
            }
        })
        .collect())
}

/// Inertial position and velocity of one lump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Joint state together with the derived inertial lump states.
#[derive(Debug, Clone, PartialEq)]
pub struct EhsDynamicState {
    pub joints: EhsJointState,
    pub points: Vec<PointState>,
}

impl EhsDynamicState {
    pub fn new(
        joints: EhsJointState,
        p: &ScissorParams,
        model: &EhsMassModel,
        mount: &MountFrame,
        base: &RigidBodyState,
    ) -> Result<Self> {
        let qdot = Vec3::from(joints.rates());
        let points = lump_kinematics(&joints, p, model, mount)?
            .iter()
            .map(|l| {
                let rel = base.angular_velocity.cross(&l.position) + l.joint_velocity(&qdot);
                PointState {
                    position: base.position + base.attitude * l.position,
                    velocity: base.linear_velocity + base.attitude * rel,
                }
            })
            .collect();
        Ok(EhsDynamicState { joints, points })
    }
}

/// Linear momentum (N·s) and angular momentum about the base origin
/// (N·m·s) of the boom lumps, both inertial.
pub fn ehs_momentum(state: &EhsDynamicState, model: &EhsMassModel, base: &RigidBodyState) -> (Vec3, Vec3) {
    state
        .points
        .iter()
        .zip(model.lump_masses())
        .fold((Vec3::zeros(), Vec3::zeros()), |(lin, ang), (pt, m)| {
            let mv = pt.velocity * m;
            (lin + mv, ang + (pt.position - base.position).cross(&mv))
        })
}

/// Wrench the moving boom exerts on the base (body frame, torque about the
/// base origin), assuming the base itself is not accelerating.
///
/// This is `-d/dt` of the boom momentum: the base must supply the opposite
/// wrench to hold its pose while the joints follow `joint_accels`.
pub fn reaction_wrench(
    joints: &EhsJointState,
    joint_accels: [f64; 3],
    p: &ScissorParams,
    model: &EhsMassModel,
    mount: &MountFrame,
    base: &RigidBodyState,
) -> Result<Wrench> {
    let lumps = lump_kinematics(joints, p, model, mount)?;
    Ok(reaction_from_lumps(&lumps, joints, joint_accels, &base.angular_velocity))
}

pub(crate) fn reaction_from_lumps(
    lumps: &[LumpKinematics],
    joints: &EhsJointState,
    joint_accels: [f64; 3],
    omega: &Vec3,
) -> Wrench {
    let qdot = Vec3::from(joints.rates());
    let qddot = Vec3::from(joint_accels);
    let (f, t) = lumps
        .iter()
        .fold((Vec3::zeros(), Vec3::zeros()), |(f, t), l| {
            let u = l.joint_velocity(&qdot);
            let acc = omega.cross(&omega.cross(&l.position))
                + omega.cross(&u) * 2.0
                + l.jdot_qdot
                + l.jacobian * qddot;
            let ma = acc * l.mass;
            (f + ma, t + l.position.cross(&ma))
        });
    Wrench::new(-f, -t, Frame::Body)
}

/// Combined centre-of-mass offset from the base origin and inertia tensor
/// about the combined centre of mass, body frame.
pub fn composite_inertia(
    base_mass: f64,
    base_inertia: &Mat3,
    lumps: &[LumpKinematics],
) -> (Vec3, Mat3) {
    let total: f64 = base_mass + lumps.iter().map(|l| l.mass).sum::<f64>();
    let com = lumps
        .iter()
        .fold(Vec3::zeros(), |acc, l| acc + l.position * l.mass)
        / total;
    let point = |m: f64, r: Vec3| -> Mat3 {
        let s = skew(&r);
        -(s * s) * m
    };
    let inertia = lumps.iter().fold(
        base_inertia + point(base_mass, -com),
        |acc, l| acc + point(l.mass, l.position - com),
    );
    (com, inertia)
}

/// Joint-space mass matrix and velocity-product bias of a boom on a
/// non-moving base.
pub fn joint_space_dynamics(lumps: &[LumpKinematics]) -> (Mat3, Vec3) {
    lumps.iter().fold((Mat3::zeros(), Vec3::zeros()), |(m, b), l| {
        let jt = l.jacobian.transpose();
        (m + jt * l.jacobian * l.mass, b + jt * l.jdot_qdot * l.mass)
    })
}
