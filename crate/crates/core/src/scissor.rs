//! Scissor-boom geometry and kinematics.
//!
//! The boom is a pantograph of `N` crossing link pairs driven by a single
//! prismatic actuation coordinate `y` on the actuation bar. Its extension is
//!
//! ```text
//! x(y) = L_E + L_B + (2N + 3) * sqrt(L_L^2 - y^2)
//! ```
//!
//! `y = L_L` is fully folded (and singular: `dx/dy -> -inf`), `y = 0` is
//! fully extended. The three-joint chain is pan (about the mount normal,
//! mount `z`), pitch (about the panned mount `y`), then translation along the
//! boom axis (mount `x` at zero pan and pitch).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::spatial::{wrap_angle, Pose, RigidBodyState, Rotation, Vec3};

/// Lower actuation stop as a fraction of `L_L` (near full extension).
pub const Y_MIN_FRACTION: f64 = 0.005;
/// Upper actuation stop as a fraction of `L_L`; keeps clear of the fold singularity.
pub const Y_MAX_FRACTION: f64 = 0.995;

/// Link geometry of the boom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScissorParams {
    /// Half length of one link, `L_L` (m).
    pub half_link_length: f64,
    /// Actuation bar to first link, `L_B` (m).
    pub base_offset: f64,
    /// Last link to effector contact point, `L_E` (m).
    pub effector_offset: f64,
    /// Number of crossing link pairs, `N`.
    pub pair_count: u32,
}

impl ScissorParams {
    pub fn new(
        half_link_length: f64,
        base_offset: f64,
        effector_offset: f64,
        pair_count: u32,
    ) -> Result<Self> {
        let p = ScissorParams {
            half_link_length,
            base_offset,
            effector_offset,
            pair_count,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.half_link_length) {
            return Err(SimError::Domain(format!(
                "half link length must be > 0, got {}",
                self.half_link_length
            )));
        }
        if !positive(self.base_offset) || !positive(self.effector_offset) {
            return Err(SimError::Domain(format!(
                "offsets must be > 0, got L_B = {}, L_E = {}",
                self.base_offset, self.effector_offset
            )));
        }
        if self.pair_count == 0 {
            return Err(SimError::Domain("pair count must be >= 1".into()));
        }
        if !self.max_extension().is_finite() {
            return Err(SimError::Domain("max extension is not finite".into()));
        }
        Ok(())
    }

    /// `2N + 3`, the number of half-link projections in the extension.
    pub fn stroke_factor(&self) -> f64 {
        (2 * self.pair_count + 3) as f64
    }

    /// Extension at `y = L_L`, i.e. `L_E + L_B`.
    pub fn folded_extension(&self) -> f64 {
        self.effector_offset + self.base_offset
    }

    /// Extension at `y = 0`.
    pub fn max_extension(&self) -> f64 {
        self.folded_extension() + self.stroke_factor() * self.half_link_length
    }

    pub fn y_min(&self) -> f64 {
        Y_MIN_FRACTION * self.half_link_length
    }

    pub fn y_max(&self) -> f64 {
        Y_MAX_FRACTION * self.half_link_length
    }

    /// Axial projection of one half link, `sqrt(L_L^2 - y^2)`.
    pub(crate) fn half_projection(&self, y: f64) -> f64 {
        let l = self.half_link_length;
        ((l - y) * (l + y)).max(0.0).sqrt()
    }
}

/// Maps the actuation coordinate to the effector extension.
pub fn extension_from_actuation(y: f64, p: &ScissorParams) -> Result<f64> {
    if !(0.0..=p.half_link_length).contains(&y) {
        return Err(SimError::Domain(format!(
            "actuation y = {y} outside [0, {}]",
            p.half_link_length
        )));
    }
    Ok(p.folded_extension() + p.stroke_factor() * p.half_projection(y))
}

/// Inverse of [`extension_from_actuation`].
pub fn actuation_from_extension(x: f64, p: &ScissorParams) -> Result<f64> {
    let lo = p.folded_extension();
    let hi = p.max_extension();
    if !(lo..=hi).contains(&x) {
        return Err(SimError::Domain(format!(
            "extension x = {x} outside reachable range [{lo}, {hi}]"
        )));
    }
    let c = ((x - lo) / p.stroke_factor()).min(p.half_link_length);
    let l = p.half_link_length;
    Ok(((l - c) * (l + c)).max(0.0).sqrt())
}

/// `dx/dy`. Non-positive; zero at full extension, unbounded at the fold.
pub fn extension_jacobian(y: f64, p: &ScissorParams) -> Result<f64> {
    let l = p.half_link_length;
    if y >= l {
        return Err(SimError::Singularity {
            y,
            half_link_length: l,
        });
    }
    if y < 0.0 {
        return Err(SimError::Domain(format!("actuation y = {y} is negative")));
    }
    Ok(-p.stroke_factor() * y / p.half_projection(y))
}

/// Derives link geometry from an overall envelope.
///
/// `link_count` counts individual links, so `N = link_count / 2` crossing
/// pairs; the mount clearance is split equally between `L_B` and `L_E`.
pub fn calibrate_from_envelope(
    max_extension: f64,
    link_count: u32,
    mount_clearance: f64,
) -> Result<ScissorParams> {
    if link_count < 4 || link_count % 2 != 0 {
        return Err(SimError::Calibration(format!(
            "link count must be even and >= 4, got {link_count}"
        )));
    }
    if !(mount_clearance > 0.0) {
        return Err(SimError::Calibration(format!(
            "mount clearance must be > 0, got {mount_clearance}"
        )));
    }
    let pair_count = link_count / 2;
    let half_clearance = mount_clearance / 2.0;
    let factor = (2 * pair_count + 3) as f64;
    let half_link_length = (max_extension - mount_clearance) / factor;
    if !(half_link_length > 0.0 && half_link_length.is_finite()) {
        return Err(SimError::Calibration(format!(
            "max extension {max_extension} leaves no room for links beyond clearance {mount_clearance}"
        )));
    }
    let p = ScissorParams {
        half_link_length,
        base_offset: half_clearance,
        effector_offset: half_clearance,
        pair_count,
    };
    p.validate().map_err(|e| SimError::Calibration(e.to_string()))?;
    Ok(p)
}

/// Joint coordinates of one EHS: pan and pitch angles (rad), actuation `y` (m)
/// and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EhsJointState {
    pub pan: f64,
    pub pitch: f64,
    pub actuation: f64,
    pub pan_rate: f64,
    pub pitch_rate: f64,
    pub actuation_rate: f64,
}

impl EhsJointState {
    /// At rest, folded to the upper actuation stop.
    pub fn folded(p: &ScissorParams) -> Self {
        EhsJointState {
            actuation: p.y_max(),
            ..Default::default()
        }
    }

    pub fn positions(&self) -> [f64; 3] {
        [self.pan, self.pitch, self.actuation]
    }

    pub fn rates(&self) -> [f64; 3] {
        [self.pan_rate, self.pitch_rate, self.actuation_rate]
    }

    pub fn with_positions(mut self, q: [f64; 3]) -> Self {
        self.pan = q[0];
        self.pitch = q[1];
        self.actuation = q[2];
        self
    }

    pub fn with_rates(mut self, r: [f64; 3]) -> Self {
        self.pan_rate = r[0];
        self.pitch_rate = r[1];
        self.actuation_rate = r[2];
        self
    }

    pub fn wrapped(mut self) -> Self {
        self.pan = wrap_angle(self.pan);
        self.pitch = wrap_angle(self.pitch);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.positions()
            .iter()
            .chain(self.rates().iter())
            .all(|v| v.is_finite())
    }

    /// Checks the actuation stop range.
    pub fn validate(&self, p: &ScissorParams) -> Result<()> {
        if !self.is_finite() {
            return Err(SimError::Domain("non-finite joint state".into()));
        }
        let tol = 1e-12 * p.half_link_length;
        if self.actuation < p.y_min() - tol || self.actuation > p.y_max() + tol {
            return Err(SimError::Domain(format!(
                "actuation y = {} outside stops [{}, {}]",
                self.actuation,
                p.y_min(),
                p.y_max()
            )));
        }
        Ok(())
    }
}

/// Pose of an EHS base on the cubesat body (body frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountFrame {
    pub offset: Vec3,
    pub rotation: Rotation,
}

impl MountFrame {
    pub fn identity() -> Self {
        MountFrame {
            offset: Vec3::zeros(),
            rotation: Rotation::identity(),
        }
    }
}

/// Orientation of the boom frame in the mount frame: `Rz(pan) * Ry(pitch)`.
pub fn boom_rotation(pan: f64, pitch: f64) -> Rotation {
    Rotation::from_axis_angle(&Vec3::z_axis(), pan)
        * Rotation::from_axis_angle(&Vec3::y_axis(), pitch)
}

/// Inertial pose of the effector contact point.
pub fn end_effector_pose(
    joints: &EhsJointState,
    p: &ScissorParams,
    mount: &MountFrame,
    base: &RigidBodyState,
) -> Result<Pose> {
    let x = extension_from_actuation(joints.actuation, p)?;
    let boom = boom_rotation(joints.pan, joints.pitch);
    let in_mount = boom * Vec3::new(x, 0.0, 0.0);
    let in_body = mount.offset + mount.rotation * in_mount;
    Ok(Pose {
        position: base.position + base.attitude * in_body,
        attitude: base.attitude * mount.rotation * boom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn calibrated() -> ScissorParams {
        calibrate_from_envelope(5.026, 24, 0.100).unwrap()
    }

    // Independent hand evaluation of the closed form.
    fn oracle_extension(y: f64, p: &ScissorParams) -> f64 {
        let l = p.half_link_length;
        p.effector_offset + p.base_offset + (2.0 * p.pair_count as f64 + 3.0) * (l * l - y * y).sqrt()
    }

    fn central_difference(y: f64, p: &ScissorParams, h: f64) -> f64 {
        (oracle_extension(y + h, p) - oracle_extension(y - h, p)) / (2.0 * h)
    }

    #[test]
    fn calibration_defaults() {
        let p = calibrated();
        assert_eq!(p.pair_count, 12);
        assert_relative_eq!(p.half_link_length, 0.18244444444444444, max_relative = 1e-15);
        assert_relative_eq!(p.base_offset, 0.05);
        assert_relative_eq!(p.effector_offset, 0.05);
        // A full link must fit the 444.54 mm folded envelope.
        assert!(2.0 * p.half_link_length < 0.44454);
    }

    #[test]
    fn calibration_small_case() {
        let p = calibrate_from_envelope(1.0, 4, 0.1).unwrap();
        assert_eq!(p.pair_count, 2);
        assert_relative_eq!(p.half_link_length, 0.9 / 7.0, max_relative = 1e-15);
    }

    #[test]
    fn calibration_rejects_degenerate() {
        assert!(matches!(
            calibrate_from_envelope(0.1, 24, 0.1),
            Err(SimError::Calibration(_))
        ));
        assert!(calibrate_from_envelope(5.0, 3, 0.1).is_err());
        assert!(calibrate_from_envelope(5.0, 2, 0.1).is_err());
    }

    #[test]
    fn extension_endpoints() {
        let p = calibrated();
        assert_eq!(extension_from_actuation(0.0, &p).unwrap(), 5.026);
        assert_relative_eq!(
            extension_from_actuation(p.half_link_length, &p).unwrap(),
            0.1,
            max_relative = 1e-15
        );
    }

    #[test]
    fn extension_interior_point() {
        let p = calibrated();
        // Frozen from oracle_extension(0.1).
        let x = extension_from_actuation(0.1, &p).unwrap();
        assert_relative_eq!(x, 4.220130580454944, max_relative = 1e-14);
        assert_relative_eq!(x, oracle_extension(0.1, &p), max_relative = 1e-15);
    }

    #[test]
    fn extension_domain_errors() {
        let p = calibrated();
        assert!(extension_from_actuation(-1e-6, &p).is_err());
        assert!(extension_from_actuation(p.half_link_length * 1.001, &p).is_err());
        assert!(actuation_from_extension(0.09, &p).is_err());
        assert!(actuation_from_extension(5.03, &p).is_err());
    }

    #[test]
    fn inverse_examples() {
        let p = calibrated();
        assert_relative_eq!(
            actuation_from_extension(0.1, &p).unwrap(),
            p.half_link_length,
            max_relative = 1e-12
        );
        assert_eq!(actuation_from_extension(5.026, &p).unwrap(), 0.0);
        assert_relative_eq!(
            actuation_from_extension(4.220130580454944, &p).unwrap(),
            0.1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn jacobian_examples() {
        let p = calibrated();
        assert_eq!(extension_jacobian(0.0, &p).unwrap(), 0.0);
        let half = p.half_link_length / 2.0;
        // Frozen from central_difference at y = L_L/2 and y = 0.1.
        assert_relative_eq!(extension_jacobian(half, &p).unwrap(), -15.588457268119896, max_relative = 1e-12);
        assert_relative_eq!(
            extension_jacobian(half, &p).unwrap(),
            central_difference(half, &p, 1e-6),
            max_relative = 1e-8
        );
        assert_relative_eq!(extension_jacobian(0.1, &p).unwrap(), -17.6936139713, max_relative = 1e-9);
        assert!(matches!(
            extension_jacobian(p.half_link_length, &p),
            Err(SimError::Singularity { .. })
        ));
    }

    #[test]
    fn effector_pose_folded_and_panned() {
        let p = calibrated();
        let base = RigidBodyState::default();
        let mount = MountFrame::identity();
        let folded = EhsJointState {
            actuation: p.half_link_length,
            ..Default::default()
        };
        let pose = end_effector_pose(&folded, &p, &mount, &base).unwrap();
        assert_relative_eq!(pose.position, Vec3::new(0.1, 0.0, 0.0), epsilon = 1e-15);

        let panned = EhsJointState { pan: FRAC_PI_2, ..folded };
        let pose = end_effector_pose(&panned, &p, &mount, &base).unwrap();
        assert_relative_eq!(pose.position, Vec3::new(0.0, 0.1, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn effector_pose_deployed_geometry() {
        let p = calibrated();
        let pan = 135f64.to_radians();
        let x = p.folded_extension() + 4.5;
        let y = actuation_from_extension(x, &p).unwrap();
        let joints = EhsJointState { pan, actuation: y, ..Default::default() };
        let pose = end_effector_pose(&joints, &p, &MountFrame::identity(), &RigidBodyState::default()).unwrap();
        assert_relative_eq!(pose.position, Vec3::new(x * pan.cos(), x * pan.sin(), 0.0), epsilon = 1e-12);
    }
}
