//! Scissor boom geometry: calibration from the stowed envelope, forward and
//! inverse kinematics, the extension Jacobian, and the effector pose for a
//! panned and pitched boom.

use ehs_sim::scissor::{
    actuation_from_extension, calibrate_from_envelope, end_effector_pose, extension_from_actuation,
    extension_jacobian, EhsJointState, MountFrame,
};
use ehs_sim::spatial::{rotation_to_euler, RigidBodyState};

fn main() -> ehs_sim::Result<()> {
    let p = calibrate_from_envelope(5.026, 24, 0.1)?;
    println!(
        "N = {} pairs, L_L = {:.6} m, end offsets {:.4} m, stowed x = {:.4} m, full x = {} m",
        p.pair_count,
        p.half_link_length,
        p.folded_extension(),
        extension_from_actuation(p.y_max(), &p)?,
        extension_from_actuation(0.0, &p)?
    );

    println!("{:>10} {:>10} {:>10} {:>12}", "y (m)", "x (m)", "dx/dy", "ik error");
    for k in 0..=10 {
        let y = p.y_min() + (p.y_max() - p.y_min()) * k as f64 / 10.0;
        let x = extension_from_actuation(y, &p)?;
        let back = actuation_from_extension(x, &p)?;
        println!("{y:>10.5} {x:>10.5} {:>10.3} {:>12.2e}", extension_jacobian(y, &p)?, back - y);
    }

    let joints = EhsJointState {
        pan: 45f64.to_radians(),
        pitch: 30f64.to_radians(),
        actuation: actuation_from_extension(3.0, &p)?,
        ..Default::default()
    };
    let tip = end_effector_pose(&joints, &p, &MountFrame::identity(), &RigidBodyState::default())?;
    let (a, b, g) = rotation_to_euler(&tip.attitude);
    println!(
        "pan 45 deg, pitch 30 deg, x = 3 m: tip at {:.4?} m, euler {:.1?} deg",
        tip.position.as_slice(),
        [a.to_degrees(), b.to_degrees(), g.to_degrees()]
    );
    Ok(())
}
