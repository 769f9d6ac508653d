//! Value types and numerical primitives for 3-D rigid-body simulation.
//!
//! Vectors, rotations and tensors are the `nalgebra` types; this module adds
//! the rigid-body state, wrenches with an explicit frame tag, the Euler-angle
//! convention used for scenario poses, and the fixed-step rigid-body
//! integrator.
//!
//! # Euler convention
//!
//! Pose tuples `(X, Y, Z, alpha, beta, gamma)` use **intrinsic X-Y-Z**
//! (roll-pitch-yaw about the moving axes):
//!
//! ```text
//! R = Rx(alpha) * Ry(beta) * Rz(gamma)
//! ```
//!
//! This is an assumption of this crate, not something the source scenario
//! defines. Attitude errors are computed on the rotation group, so the
//! convention only matters for reading and writing pose tuples.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
/// Unit quaternion attitude (body to inertial).
pub type Rotation = UnitQuaternion<f64>;

/// Frame in which a [`Wrench`] is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Inertial,
    Body,
}

/// Force (N) and torque (N·m) pair with an explicit frame tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
    pub frame: Frame,
}

impl Wrench {
    pub fn zero(frame: Frame) -> Self {
        Wrench {
            force: Vec3::zeros(),
            torque: Vec3::zeros(),
            frame,
        }
    }

    pub fn new(force: Vec3, torque: Vec3, frame: Frame) -> Self {
        Wrench {
            force,
            torque,
            frame,
        }
    }

    /// Re-express in the inertial frame, given the body attitude.
    pub fn to_inertial(&self, attitude: &Rotation) -> Wrench {
        match self.frame {
            Frame::Inertial => *self,
            Frame::Body => Wrench::new(
                attitude * self.force,
                attitude * self.torque,
                Frame::Inertial,
            ),
        }
    }

    /// Re-express in the body frame, given the body attitude.
    pub fn to_body(&self, attitude: &Rotation) -> Wrench {
        match self.frame {
            Frame::Body => *self,
            Frame::Inertial => Wrench::new(
                attitude.inverse_transform_vector(&self.force),
                attitude.inverse_transform_vector(&self.torque),
                Frame::Body,
            ),
        }
    }

    pub fn is_finite(&self) -> bool {
        is_finite3(&self.force) && is_finite3(&self.torque)
    }
}

/// Position + attitude, both in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub attitude: Rotation,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            position: Vec3::zeros(),
            attitude: Rotation::identity(),
        }
    }

    /// Builds a pose from an `(X, Y, Z, alpha, beta, gamma)` tuple.
    pub fn from_tuple(t: [f64; 6]) -> Self {
        Pose {
            position: Vec3::new(t[0], t[1], t[2]),
            attitude: euler_to_rotation(t[3], t[4], t[5]),
        }
    }

    pub fn to_tuple(&self) -> [f64; 6] {
        let (a, b, g) = rotation_to_euler(&self.attitude);
        [self.position.x, self.position.y, self.position.z, a, b, g]
    }
}

/// Base body state. Angular velocity is expressed in the body frame, every
/// other vector in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub position: Vec3,
    pub attitude: Rotation,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        RigidBodyState::at_rest(Pose::identity())
    }
}

impl RigidBodyState {
    pub fn at_rest(pose: Pose) -> Self {
        RigidBodyState {
            position: pose.position,
            attitude: pose.attitude,
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            attitude: self.attitude,
        }
    }

    /// Angular velocity in the inertial frame.
    pub fn angular_velocity_inertial(&self) -> Vec3 {
        self.attitude * self.angular_velocity
    }

    pub fn is_finite(&self) -> bool {
        is_finite3(&self.position)
            && is_finite3(&self.linear_velocity)
            && is_finite3(&self.angular_velocity)
            && self.attitude.coords.iter().all(|c| c.is_finite())
    }
}

pub(crate) fn is_finite3(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Intrinsic X-Y-Z Euler angles to a rotation: `Rx(alpha) * Ry(beta) * Rz(gamma)`.
pub fn euler_to_rotation(alpha: f64, beta: f64, gamma: f64) -> Rotation {
    let rx = Rotation::from_axis_angle(&Vec3::x_axis(), alpha);
    let ry = Rotation::from_axis_angle(&Vec3::y_axis(), beta);
    let rz = Rotation::from_axis_angle(&Vec3::z_axis(), gamma);
    rx * ry * rz
}

/// Inverse of [`euler_to_rotation`]. `beta` is returned in `[-pi/2, pi/2]`.
pub fn rotation_to_euler(r: &Rotation) -> (f64, f64, f64) {
    let m = r.to_rotation_matrix();
    let m = m.matrix();
    let beta = m[(0, 2)].clamp(-1.0, 1.0).asin();
    let alpha = (-m[(1, 2)]).atan2(m[(2, 2)]);
    let gamma = (-m[(0, 1)]).atan2(m[(0, 0)]);
    (alpha, beta, gamma)
}

/// Rotation-error vector (axis times angle, inertial frame) taking `current`
/// onto `target`: `log(target * current^-1)`.
pub fn rotation_error(target: &Rotation, current: &Rotation) -> Vec3 {
    if target == current {
        return Vec3::zeros();
    }
    (target * current.inverse()).scaled_axis()
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Cross-product matrix `[v]x` such that `[v]x * u = v x u`.
pub(crate) fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Advances a single free rigid body by one fixed step.
///
/// Velocities are advanced first from the Newton-Euler accelerations, then the
/// pose from the new velocities. The gyroscopic term `omega x I omega` is
/// applied as the exact rotation of the body-frame angular momentum over the
/// step, which keeps `|L|` invariant for torque-free motion. Position uses the
/// step-averaged velocity, which is exact for constant force.
///
/// `inertia` is the body-frame tensor about the centre of mass.
pub fn integrate_step(
    state: &RigidBodyState,
    mass: f64,
    inertia: &Mat3,
    wrench: &Wrench,
    dt: f64,
) -> Result<RigidBodyState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::config("dt", format!("must be > 0, got {dt}")));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SimError::config("mass", format!("must be > 0, got {mass}")));
    }
    if !state.is_finite() || !wrench.is_finite() {
        return Err(SimError::NumericalFault {
            time: f64::NAN,
            what: "non-finite state or wrench passed to integrate_step".into(),
        });
    }
    let inv_inertia = symmetric_pd_inverse(inertia)
        .ok_or_else(|| SimError::config("inertia", "must be symmetric positive definite"))?;

    let body = wrench.to_body(&state.attitude);
    let inertial = wrench.to_inertial(&state.attitude);

    let v0 = state.linear_velocity;
    let v1 = v0 + inertial.force * (dt / mass);
    let position = state.position + (v0 + v1) * (0.5 * dt);

    let l_body = inertia * state.angular_velocity + body.torque * dt;
    let omega_step = inv_inertia * l_body;
    let step = Rotation::from_scaled_axis(omega_step * dt);
    let attitude = advance_attitude(&state.attitude, &step);
    let l_next = step.inverse_transform_vector(&l_body);

    let next = RigidBodyState {
        position,
        attitude,
        linear_velocity: v1,
        angular_velocity: inv_inertia * l_next,
    };
    if !next.is_finite() {
        return Err(SimError::NumericalFault {
            time: f64::NAN,
            what: "rigid body state became non-finite".into(),
        });
    }
    Ok(next)
}

/// `attitude * step`, renormalized. A null step leaves the attitude bit-identical.
pub(crate) fn advance_attitude(attitude: &Rotation, step: &Rotation) -> Rotation {
    if step.angle() == 0.0 {
        return *attitude;
    }
    Rotation::new_normalize((attitude * step).into_inner())
}

/// Inverse of a symmetric positive-definite 3x3 tensor, `None` otherwise.
pub(crate) fn symmetric_pd_inverse(m: &Mat3) -> Option<Mat3> {
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-9 * m.abs().max().max(1.0) {
        return None;
    }
    m.cholesky().map(|c| c.inverse())
}
