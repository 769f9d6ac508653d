//! Trapezoidal rest-to-rest reference generation.
//!
//! A profile accelerates for `t_a`, coasts at the plateau rate, then
//! decelerates for `t_a`. Pose and joint references share one profile over a
//! normalized path parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::scissor::{actuation_from_extension, extension_from_actuation, extension_jacobian, EhsJointState, ScissorParams};
use crate::spatial::{rotation_error, Pose, RigidBodyState, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidProfile {
    pub distance: f64,
    pub total_time: f64,
    pub accel_time: f64,
}

/// Position, rate and acceleration of a profile at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfileSample {
    pub position: f64,
    pub rate: f64,
    pub accel: f64,
}

impl TrapezoidProfile {
    pub fn new(distance: f64, total_time: f64, accel_time: f64) -> Result<Self> {
        let p = TrapezoidProfile {
            distance,
            total_time,
            accel_time,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return Err(SimError::config("profile.distance", "must be >= 0"));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(SimError::config(
                "maneuver.profile.t_total_s",
                format!("must be > 0, got {}", self.total_time),
            ));
        }
        if !(self.accel_time > 0.0 && self.accel_time < self.total_time / 2.0) {
            return Err(SimError::config(
                "maneuver.profile.t_accel_s",
                format!(
                    "must satisfy 0 < t_accel < t_total / 2, got {} with t_total {}",
                    self.accel_time, self.total_time
                ),
            ));
        }
        Ok(())
    }

    /// Same timing with a different distance.
    pub fn with_distance(&self, distance: f64) -> Self {
        TrapezoidProfile { distance, ..*self }
    }

    pub fn plateau_rate(&self) -> f64 {
        self.distance / (self.total_time - self.accel_time)
    }

    pub fn accel(&self) -> f64 {
        self.plateau_rate() / self.accel_time
    }

    /// Evaluates the profile. Times outside `[0, T]` clamp to the endpoints at rest.
    pub fn eval(&self, t: f64) -> ProfileSample {
        let (d, total, ta) = (self.distance, self.total_time, self.accel_time);
        if d == 0.0 {
            return ProfileSample::default();
        }
        if t <= 0.0 {
            return ProfileSample::default();
        }
        if t >= total {
            return ProfileSample {
                position: d,
                ..Default::default()
            };
        }
        let v = self.plateau_rate();
        let a = v / ta;
        if t < ta {
            ProfileSample {
                position: 0.5 * a * t * t,
                rate: a * t,
                accel: a,
            }
        } else if t <= total - ta {
            ProfileSample {
                position: v * (t - 0.5 * ta),
                rate: v,
                accel: 0.0,
            }
        } else {
            let r = total - t;
            ProfileSample {
                position: d - 0.5 * a * r * r,
                rate: a * r,
                accel: -a,
            }
        }
    }
}

pub fn profile_eval(p: &TrapezoidProfile, t: f64) -> ProfileSample {
    p.eval(t)
}

/// Straight-chord translation and constant-axis slew between two poses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseTrajectory {
    pub start: Pose,
    pub goal: Pose,
    /// Timing; the distance is ignored (the path parameter runs 0 to 1).
    pub profile: TrapezoidProfile,
}

/// Reference base state with feedforward accelerations (inertial frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseReference {
    pub state: RigidBodyState,
    pub linear_accel: Vec3,
    pub angular_accel: Vec3,
}

impl PoseReference {
    pub fn hold(pose: Pose) -> Self {
        PoseReference {
            state: RigidBodyState::at_rest(pose),
            linear_accel: Vec3::zeros(),
            angular_accel: Vec3::zeros(),
        }
    }
}

impl PoseTrajectory {
    pub fn new(start: Pose, goal: Pose, profile: TrapezoidProfile) -> Self {
        PoseTrajectory {
            start,
            goal,
            profile: profile.with_distance(1.0),
        }
    }

    /// Euclidean length of the translation chord.
    pub fn chord_length(&self) -> f64 {
        (self.goal.position - self.start.position).norm()
    }

    pub fn eval(&self, t: f64) -> PoseReference {
        let s = self.profile.eval(t);
        let chord = self.goal.position - self.start.position;
        let rot = rotation_error(&self.goal.attitude, &self.start.attitude);
        let attitude = if t >= self.profile.total_time {
            self.goal.attitude
        } else {
            Rotation::from_scaled_axis(rot * s.position) * self.start.attitude
        };
        let position = if t >= self.profile.total_time {
            self.goal.position
        } else {
            self.start.position + chord * s.position
        };
        let omega_inertial = rot * s.rate;
        PoseReference {
            state: RigidBodyState {
                position,
                attitude,
                linear_velocity: chord * s.rate,
                angular_velocity: attitude.inverse_transform_vector(&omega_inertial),
            },
            linear_accel: chord * s.accel,
            angular_accel: rot * s.accel,
        }
    }
}

pub fn pose_trajectory_eval(traj: &PoseTrajectory, t: f64) -> PoseReference {
    traj.eval(t)
}

/// Joint reference with accelerations `[pan, pitch, actuation]`, plus the
/// extension reference the actuation channel is controlled against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReference {
    pub joints: EhsJointState,
    pub accels: [f64; 3],
    pub extension: ProfileSample,
}

impl JointReference {
    pub fn hold(joints: EhsJointState, p: &ScissorParams) -> Result<Self> {
        let joints = joints.with_rates([0.0; 3]);
        Ok(JointReference {
            joints,
            accels: [0.0; 3],
            extension: ProfileSample {
                position: extension_from_actuation(joints.actuation, p)?,
                ..Default::default()
            },
        })
    }
}

/// Evaluates a joint move. Pan and pitch follow the normalized profile
/// directly; the actuation channel follows it in extension space and is
/// mapped back through the scissor inverse.
pub fn joint_trajectory_eval(
    start: &EhsJointState,
    goal: &EhsJointState,
    profile: &TrapezoidProfile,
    p: &ScissorParams,
    t: f64,
) -> Result<JointReference> {
    let x0 = extension_from_actuation(start.actuation, p)?;
    let x1 = extension_from_actuation(goal.actuation, p)?;
    if start.positions() == goal.positions() {
        return JointReference::hold(*start, p);
    }
    let s = profile.with_distance(1.0).eval(t);
    let pan = start.pan + (goal.pan - start.pan) * s.position;
    let pitch = start.pitch + (goal.pitch - start.pitch) * s.position;
    let dx = x1 - x0;
    let extension = ProfileSample {
        position: if t >= profile.total_time { x1 } else { x0 + dx * s.position },
        rate: dx * s.rate,
        accel: dx * s.accel,
    };
    let y = if t >= profile.total_time {
        goal.actuation
    } else {
        actuation_from_extension(extension.position, p)?
    };
    let (ydot, yddot) = if extension.rate == 0.0 && extension.accel == 0.0 {
        (0.0, 0.0)
    } else {
        let j = extension_jacobian(y, p)?;
        let ydot = extension.rate / j;
        // x'' = J y'' + J' y'^2 with J' = dJ/dy.
        let c = p.half_projection(y);
        let l = p.half_link_length;
        let dj = -p.stroke_factor() * l * l / (c * c * c);
        (ydot, (extension.accel - dj * ydot * ydot) / j)
    };
    Ok(JointReference {
        joints: EhsJointState {
            pan,
            pitch,
            actuation: y,
            pan_rate: (goal.pan - start.pan) * s.rate,
            pitch_rate: (goal.pitch - start.pitch) * s.rate,
            actuation_rate: ydot,
        },
        accels: [
            (goal.pan - start.pan) * s.accel,
            (goal.pitch - start.pitch) * s.accel,
            yddot,
        ],
        extension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scissor::calibrate_from_envelope;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn traverse() -> TrapezoidProfile {
        let d = Vec3::new(25.0, 25.0, -10.0).norm();
        TrapezoidProfile::new(d, 500.0, 153.0).unwrap()
    }

    #[test]
    fn zero_distance_is_identically_zero() {
        let p = TrapezoidProfile::new(0.0, 10.0, 2.0).unwrap();
        for t in [0.0, 1.0, 5.0, 9.0, 10.0] {
            assert_eq!(p.eval(t), ProfileSample::default());
        }
    }

    #[test]
    fn traverse_plateau_rate() {
        let p = traverse();
        assert_relative_eq!(p.distance, 36.742346141747674, max_relative = 1e-15);
        assert_relative_eq!(p.plateau_rate(), 0.10588572375143422, max_relative = 1e-14);
    }

    #[test]
    fn endpoints_and_symmetry() {
        let p = traverse();
        assert_eq!(p.eval(p.total_time).position, p.distance);
        assert_eq!(p.eval(0.0).position, 0.0);
        assert_relative_eq!(p.eval(250.0).position, p.distance / 2.0, max_relative = 1e-14);
        assert_eq!(p.eval(-3.0), ProfileSample::default());
        assert_eq!(p.eval(600.0).rate, 0.0);
    }

    #[test]
    fn rejects_bad_timing() {
        assert!(TrapezoidProfile::new(1.0, 10.0, 5.0).is_err());
        assert!(TrapezoidProfile::new(1.0, 10.0, 0.0).is_err());
        assert!(TrapezoidProfile::new(-1.0, 10.0, 2.0).is_err());
    }

    #[test]
    fn rate_continuous_at_boundaries() {
        let p = traverse();
        let v = p.plateau_rate();
        let a = p.accel();
        assert_relative_eq!(a * p.accel_time, v, max_relative = 1e-15);
        let eps = 1e-9;
        for tb in [p.accel_time, p.total_time - p.accel_time] {
            let jump = (p.eval(tb + eps).rate - p.eval(tb - eps).rate).abs();
            assert!(jump < 1e-9, "rate jump {jump} at {tb}");
        }
    }

    #[test]
    fn pose_trajectory_endpoints() {
        let goal = Pose::from_tuple([25.0, 25.0, -10.0, FRAC_PI_8, -FRAC_PI_4, FRAC_PI_8]);
        let traj = PoseTrajectory::new(Pose::identity(), goal, traverse());
        let r0 = traj.eval(0.0);
        assert_eq!(r0.state.position, Vec3::zeros());
        assert_eq!(r0.state.linear_velocity, Vec3::zeros());
        let r1 = traj.eval(500.0);
        assert_eq!(r1.state.position, goal.position);
        assert_eq!(r1.state.attitude, goal.attitude);
        assert_eq!(r1.state.angular_velocity, Vec3::zeros());
        let (a, b, g) = crate::spatial::rotation_to_euler(&r1.state.attitude);
        assert_relative_eq!(a, FRAC_PI_8, epsilon = 1e-12);
        assert_relative_eq!(b, -FRAC_PI_4, epsilon = 1e-12);
        assert_relative_eq!(g, FRAC_PI_8, epsilon = 1e-12);
        let mid = traj.eval(250.0);
        assert_relative_eq!(mid.state.position, Vec3::new(12.5, 12.5, -5.0), max_relative = 1e-14);
    }

    #[test]
    fn joint_trajectory_deploy() {
        let p = calibrate_from_envelope(5.026, 24, 0.1).unwrap();
        let start = EhsJointState::folded(&p);
        let goal = EhsJointState {
            pan: 135f64.to_radians(),
            actuation: actuation_from_extension(p.folded_extension() + 4.5, &p).unwrap(),
            ..Default::default()
        };
        let prof = TrapezoidProfile::new(1.0, 200.0, 50.0).unwrap();
        let mid = joint_trajectory_eval(&start, &goal, &prof, &p, 100.0).unwrap();
        assert_relative_eq!(mid.joints.pan, 67.5f64.to_radians(), max_relative = 1e-14);
        let end = joint_trajectory_eval(&start, &goal, &prof, &p, 200.0).unwrap();
        assert_eq!(end.joints.positions(), goal.positions());
        assert_relative_eq!(extension_from_actuation(end.joints.actuation, &p).unwrap(), 4.6, max_relative = 1e-12);
        let same = joint_trajectory_eval(&start, &start, &prof, &p, 50.0).unwrap();
        assert_eq!(same.joints, start);

        // Actuation rate and acceleration agree with differences of the reference.
        let h = 1e-3;
        for t in [20.0, 100.0, 170.0] {
            let r = |t| joint_trajectory_eval(&start, &goal, &prof, &p, t).unwrap();
            let fd_rate = (r(t + h).joints.actuation - r(t - h).joints.actuation) / (2.0 * h);
            let fd_acc = (r(t + h).joints.actuation_rate - r(t - h).joints.actuation_rate) / (2.0 * h);
            assert_relative_eq!(r(t).joints.actuation_rate, fd_rate, max_relative = 1e-6);
            assert_relative_eq!(r(t).accels[2], fd_acc, max_relative = 1e-4, epsilon = 1e-12);
        }
    }
}
