//! Built-in measurements used by `validate` and the acceptance tests.

use serde::{Deserialize, Serialize};

use crate::control::{joint_controller, JointControllerState, JointGains, PidGains};
use crate::ehs::{joint_space_dynamics, lump_kinematics};
use crate::engine::Engine;
use crate::error::Result;
use crate::scenario::Scenario;
use crate::scissor::{
    actuation_from_extension, extension_from_actuation, extension_jacobian, EhsJointState, ScissorParams,
};
use crate::spatial::{symmetric_pd_inverse, Vec3};
use crate::trajectory::{JointReference, ProfileSample, TrapezoidProfile};
use crate::vehicle::{system_momentum, EhsUnit};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicsReport {
    /// `x(0) - max_extension`.
    pub full_extension_error: f64,
    /// Largest `|y - ik(fk(y))|` over the grid, m.
    pub max_round_trip_error: f64,
}

/// Forward/inverse round trip over `n` evenly spaced points of the stroke.
pub fn kinematics_check(p: &ScissorParams, max_extension: f64, n: usize) -> Result<KinematicsReport> {
    let full = extension_from_actuation(0.0, p)? - max_extension;
    let mut worst = 0.0f64;
    for i in 0..n {
        let y = p.half_link_length * i as f64 / (n - 1) as f64;
        let back = actuation_from_extension(extension_from_actuation(y, p)?, p)?;
        let err = (back - y).abs();
        worst = worst.max(err);
    }
    Ok(KinematicsReport {
        full_extension_error: full,
        max_round_trip_error: worst,
    })
}

/// Largest relative error of `dx/dy` against a central difference with a
/// 1 um step over `y in [lo, hi] * L_L`.
pub fn jacobian_check(p: &ScissorParams, lo: f64, hi: f64, n: usize) -> Result<f64> {
    let l = p.half_link_length;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..n {
        let y = l * (lo + (hi - lo) * i as f64 / (n - 1) as f64);
        let fd = (extension_from_actuation(y + h, p)? - extension_from_actuation(y - h, p)?) / (2.0 * h);
        let j = extension_jacobian(y, p)?;
        worst = worst.max(((j - fd) / fd).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentumReport {
    pub max_linear_drift: f64,
    pub max_angular_drift: f64,
    pub max_com_drift: f64,
    pub final_extension: f64,
    pub steps: u64,
}

/// Runs the scenario with the base controller off and records how far the
/// system momentum and combined centre of mass move from their initial values.
pub fn momentum_check(scenario: &Scenario) -> Result<MomentumReport> {
    let mut sc = scenario.clone();
    sc.sim.base_control = false;
    sc.sim.reaction_feedforward = false;
    let config = sc.vehicle.clone();
    let m0 = system_momentum(&config, &sc.initial)?;
    let mut engine = Engine::new(sc);
    let mut r = MomentumReport::default();
    while !engine.is_finished() {
        engine.step()?;
        let m = system_momentum(&config, engine.state())?;
        r.max_linear_drift = r.max_linear_drift.max((m.linear - m0.linear).norm());
        r.max_angular_drift = r.max_angular_drift.max((m.angular - m0.angular).norm());
        r.max_com_drift = r.max_com_drift.max((m.com - m0.com).norm());
        r.steps += 1;
    }
    if let (Some(j), Some(u)) = (engine.state().joints.first(), config.units.first()) {
        r.final_extension = extension_from_actuation(j.actuation, &u.params)?;
    }
    Ok(r)
}

/// Settings for the constant-rate extension ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSettings {
    /// Base actuation gains, applied as-is or rescheduled.
    pub gains: PidGains,
    /// Extension rate, m/s.
    pub rate: f64,
    /// Ramp start and end as fractions of `L_L`.
    pub start: f64,
    pub end: f64,
    pub dt: f64,
}

impl Default for RampSettings {
    fn default() -> Self {
        RampSettings {
            gains: PidGains {
                kp: 20.0,
                ki: 0.0,
                kd: 400.0,
                integral_clamp: 1.0,
                output_clamp: 40.0,
            },
            rate: 1e-3,
            start: 0.93,
            end: 0.09,
            dt: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RampReport {
    /// Sample points as fractions of `L_L`.
    pub grid: Vec<f64>,
    pub scheduled: Vec<f64>,
    pub unscheduled: Vec<f64>,
}

fn spread(errors: &[f64]) -> f64 {
    let max = errors.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let min = errors.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    max / min
}

impl RampReport {
    pub fn scheduled_spread(&self) -> f64 {
        spread(&self.scheduled)
    }
    pub fn unscheduled_spread(&self) -> f64 {
        spread(&self.unscheduled)
    }
}

/// Extension error while one boom on a fixed base tracks a constant-rate
/// extension ramp, sampled as the reference passes each `grid` point.
pub fn ramp_errors(unit: &EhsUnit, settings: &RampSettings, schedule: bool, grid: &[f64]) -> Result<Vec<f64>> {
    let p = &unit.params;
    let l = p.half_link_length;
    let x0 = extension_from_actuation(settings.start * l, p)?;
    let x1 = extension_from_actuation(settings.end * l, p)?;
    let marks: Vec<f64> = grid
        .iter()
        .map(|g| extension_from_actuation(g * l, p))
        .collect::<Result<_>>()?;
    let gains = JointGains {
        pan: settings.gains,
        pitch: settings.gains,
        actuation: settings.gains,
        schedule,
    };
    let mut joints = EhsJointState {
        actuation: settings.start * l,
        ..Default::default()
    };
    let mut ctl = JointControllerState::default();
    let mut errors = vec![f64::NAN; grid.len()];
    let dt = settings.dt;
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        let x_ref = x0 + settings.rate * t;
        if x_ref > x1 {
            break;
        }
        let x = extension_from_actuation(joints.actuation, p)?;
        let x_next = x_ref + settings.rate * dt;
        for (i, m) in marks.iter().enumerate() {
            if errors[i].is_nan() && x_ref <= *m && *m < x_next {
                errors[i] = x_ref - x;
            }
        }
        let reference = JointReference {
            joints: EhsJointState {
                actuation: actuation_from_extension(x_ref, p)?,
                ..Default::default()
            },
            accels: [0.0; 3],
            extension: ProfileSample {
                position: x_ref,
                rate: settings.rate,
                accel: 0.0,
            },
        };
        let mut tau = joint_controller(&mut ctl, &joints, &reference, &gains, p, dt)?;
        tau[0] = 0.0;
        tau[1] = 0.0;
        let lumps = lump_kinematics(&joints, p, &unit.mass, &unit.mount)?;
        let (m, bias) = joint_space_dynamics(&lumps);
        let qd = joints.rates();
        let force = Vec3::new(
            tau[0] - unit.friction.revolute * qd[0],
            tau[1] - unit.friction.revolute * qd[1],
            tau[2] - unit.friction.prismatic * qd[2],
        );
        let inv = symmetric_pd_inverse(&m).ok_or_else(|| crate::SimError::NumericalFault {
            time: t,
            what: "joint mass matrix not positive definite".into(),
        })?;
        let acc = inv * (force - bias);
        let rate = joints.actuation_rate + dt * acc.z;
        joints.actuation_rate = rate;
        joints.actuation = (joints.actuation + dt * rate).clamp(0.0, p.y_max());
        k += 1;
    }
    Ok(errors)
}

/// Scheduled and unscheduled ramp errors over `y in [0.1, 0.9] * L_L`.
pub fn gain_scheduling_check(unit: &EhsUnit, settings: &RampSettings) -> Result<RampReport> {
    let grid: Vec<f64> = (0..9).map(|i| 0.9 - 0.1 * i as f64).collect();
    Ok(RampReport {
        scheduled: ramp_errors(unit, settings, true, &grid)?,
        unscheduled: ramp_errors(unit, settings, false, &grid)?,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryReport {
    /// `position(T) - d`.
    pub endpoint_error: f64,
    /// Largest rate jump between neighbouring samples, relative to the plateau rate.
    pub max_rate_jump: f64,
    pub distance: f64,
}

/// Endpoint and continuity of a profile, sampled every `dt`.
pub fn trajectory_check(profile: &TrapezoidProfile, dt: f64) -> TrajectoryReport {
    let n = (profile.total_time / dt).ceil() as u64;
    let mut prev = profile.eval(0.0).rate;
    let mut jump = 0.0f64;
    for k in 1..=n + 1 {
        let r = profile.eval(k as f64 * dt).rate;
        jump = jump.max((r - prev).abs());
        prev = r;
    }
    TrajectoryReport {
        endpoint_error: profile.eval(profile.total_time).position - profile.distance,
        max_rate_jump: jump / profile.plateau_rate().abs(),
        distance: profile.distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehs::{EhsMassModel, MassSplit};
    use crate::scissor::{calibrate_from_envelope, MountFrame};
    use crate::vehicle::JointFriction;

    #[test]
    fn kinematics_and_jacobian_checks_pass() {
        let p = calibrate_from_envelope(5.026, 24, 0.1).unwrap();
        let k = kinematics_check(&p, 5.026, 1000).unwrap();
        assert!(k.full_extension_error.abs() <= 2.0 * f64::EPSILON * 5.026);
        assert!(k.max_round_trip_error < 1e-9);
        assert!(jacobian_check(&p, 0.01, 0.95, 200).unwrap() < 1e-6);
    }

    #[test]
    fn trajectory_check_examples() {
        let p = TrapezoidProfile::new(36.742346141747674, 500.0, 153.0).unwrap();
        let r = trajectory_check(&p, 0.01);
        assert_eq!(r.endpoint_error, 0.0);
        assert!(r.max_rate_jump < 1e-3);
    }

    #[test]
    fn short_ramp_tracks() {
        let params = calibrate_from_envelope(5.026, 24, 0.1).unwrap();
        let unit = EhsUnit {
            mount: MountFrame::identity(),
            mass: EhsMassModel::from_split(2.41, MassSplit::default(), &params).unwrap(),
            params,
            friction: JointFriction::default(),
        };
        let settings = RampSettings { start: 0.6, end: 0.45, ..Default::default() };
        let e = ramp_errors(&unit, &settings, true, &[0.5]).unwrap();
        assert!(e[0].is_finite() && e[0].abs() < 1e-3);
    }
}
