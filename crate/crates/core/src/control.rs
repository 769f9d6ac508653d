//! PID regulation for the base pose and the boom joints.
//!
//! The actuation channel is nonlinear: a fixed-gain loop on extension error
//! sees a loop gain that swings with `|dx/dy|` over the stroke. Its gains are
//! rescheduled every step from the scissor Jacobian.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::scissor::{extension_from_actuation, extension_jacobian, EhsJointState, ScissorParams};
use crate::spatial::{rotation_error, Frame, Mat3, RigidBodyState, Wrench};
use crate::trajectory::{JointReference, PoseReference};

/// Lower bound on `|dx/dy|` used by the gain schedule.
pub const JACOBIAN_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral_clamp: f64,
    pub output_clamp: f64,
}

impl PidGains {
    pub fn validate(&self, key: &str) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::config(format!("{key}.{name}"), format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("integral_clamp", self.integral_clamp), ("output_clamp", self.output_clamp)] {
            if !(v > 0.0) {
                return Err(SimError::config(format!("{key}.{name}"), format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
}

/// One PID update.
///
/// The derivative term uses the measured `error_rate`. Integration is frozen
/// while the output is saturated in the direction of the error, and the
/// accumulator is always held within `integral_clamp`.
pub fn pid_step(state: PidState, gains: &PidGains, error: f64, error_rate: f64, dt: f64) -> (f64, PidState) {
    let pd = gains.kp * error + gains.kd * error_rate;
    let candidate = (state.integral + error * dt).clamp(-gains.integral_clamp, gains.integral_clamp);
    let unclamped = pd + gains.ki * candidate;
    let winding = unclamped.abs() > gains.output_clamp && unclamped.signum() == error.signum();
    let integral = if winding { state.integral } else { candidate };
    let effort = (pd + gains.ki * integral).clamp(-gains.output_clamp, gains.output_clamp);
    (
        effort,
        PidState {
            integral,
            prev_error: error,
        },
    )
}

/// Rescales `kp` and `kd` by `1 / max(|dx/dy|, JACOBIAN_FLOOR)`.
pub fn scheduled_actuation_gains(y: f64, p: &ScissorParams, base: &PidGains) -> Result<PidGains> {
    let j = extension_jacobian(y, p)?.abs().max(JACOBIAN_FLOOR);
    Ok(PidGains {
        kp: base.kp / j,
        kd: base.kd / j,
        ..*base
    })
}

/// Gains for the base pose loop (per axis, shared across x/y/z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseGains {
    pub position: PidGains,
    pub attitude: PidGains,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseControllerState {
    pub position: [PidState; 3],
    pub attitude: [PidState; 3],
}

/// Mass properties used for feedforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedforward {
    pub mass: f64,
    /// Inertia about the combined centre of mass, inertial frame.
    pub inertia: Mat3,
}

/// Full-state pose regulator. Returns an inertial wrench command.
///
/// Position channels run PID on position error with velocity error as rate,
/// plus `mass * a_ref`. Attitude channels run PID on the axis-angle error
/// `log(q_ref * q^-1)` with the inertial angular-velocity error as rate, plus
/// `I * alpha_ref`.
pub fn pose_controller(
    ctl: &mut PoseControllerState,
    state: &RigidBodyState,
    reference: &PoseReference,
    gains: &PoseGains,
    ff: &Feedforward,
    dt: f64,
) -> Wrench {
    let pos_err = reference.state.position - state.position;
    let vel_err = reference.state.linear_velocity - state.linear_velocity;
    let att_err = rotation_error(&reference.state.attitude, &state.attitude);
    let rate_err = reference.state.angular_velocity_inertial() - state.angular_velocity_inertial();

    let mut force = reference.linear_accel * ff.mass;
    let mut torque = ff.inertia * reference.angular_accel;
    for i in 0..3 {
        let (f, s) = pid_step(ctl.position[i], &gains.position, pos_err[i], vel_err[i], dt);
        ctl.position[i] = s;
        force[i] += f;
        let (t, s) = pid_step(ctl.attitude[i], &gains.attitude, att_err[i], rate_err[i], dt);
        ctl.attitude[i] = s;
        torque[i] += t;
    }
    Wrench::new(force, torque, Frame::Inertial)
}

/// Gains for the three joints of one boom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointGains {
    pub pan: PidGains,
    pub pitch: PidGains,
    /// Base gains on extension error; rescheduled each step when `schedule` is set.
    pub actuation: PidGains,
    #[serde(default = "default_true")]
    pub schedule: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointControllerState {
    pub pan: PidState,
    pub pitch: PidState,
    pub actuation: PidState,
}

/// Joint regulator. Returns `[pan torque, pitch torque, actuation force]`.
///
/// The actuation channel regulates extension error `x_ref - x(y)` with rate
/// `xdot_ref - J * ydot`. Since `dx/dy <= 0`, a positive extension error
/// commands a negative actuation force.
pub fn joint_controller(
    ctl: &mut JointControllerState,
    joints: &EhsJointState,
    reference: &JointReference,
    gains: &JointGains,
    p: &ScissorParams,
    dt: f64,
) -> Result<[f64; 3]> {
    let r = &reference.joints;
    let (pan, s) = pid_step(ctl.pan, &gains.pan, r.pan - joints.pan, r.pan_rate - joints.pan_rate, dt);
    ctl.pan = s;
    let (pitch, s) = pid_step(
        ctl.pitch,
        &gains.pitch,
        r.pitch - joints.pitch,
        r.pitch_rate - joints.pitch_rate,
        dt,
    );
    ctl.pitch = s;

    let x = extension_from_actuation(joints.actuation, p)?;
    let j = extension_jacobian(joints.actuation, p)?;
    let e = reference.extension.position - x;
    let e_rate = reference.extension.rate - j * joints.actuation_rate;
    let g = if gains.schedule {
        scheduled_actuation_gains(joints.actuation, p, &gains.actuation)?
    } else {
        gains.actuation
    };
    let (u, s) = pid_step(ctl.actuation, &g, e, e_rate, dt);
    ctl.actuation = s;
    Ok([pan, pitch, -u])
}
