//! Wrench a deploying boom exerts on a base held still, sampled along a
//! rest-to-rest extension move.

use ehs_sim::ehs::{reaction_wrench, EhsMassModel, MassSplit};
use ehs_sim::scissor::{calibrate_from_envelope, EhsJointState, MountFrame};
use ehs_sim::spatial::RigidBodyState;
use ehs_sim::trajectory::{joint_trajectory_eval, TrapezoidProfile};

fn main() -> ehs_sim::Result<()> {
    let p = calibrate_from_envelope(5.026, 24, 0.1)?;
    let model = EhsMassModel::from_split(2.41, MassSplit::default(), &p)?;
    let mount = MountFrame::identity();
    let base = RigidBodyState::default();

    let start = EhsJointState::folded(&p);
    let goal = EhsJointState {
        pan: 90f64.to_radians(),
        actuation: p.y_min(),
        ..Default::default()
    };
    let profile = TrapezoidProfile::new(1.0, 200.0, 50.0)?;

    println!("{:>6} {:>8} {:>30} {:>30}", "t (s)", "x (m)", "force (mN)", "torque (mN m)");
    let mut t = 0.0;
    while t <= 200.0 {
        let r = joint_trajectory_eval(&start, &goal, &profile, &p, t)?;
        let w = reaction_wrench(&r.joints, r.accels, &p, &model, &mount, &base)?;
        let f = w.force * 1e3;
        let tq = w.torque * 1e3;
        println!(
            "{t:>6.0} {:>8.3} [{:>8.4} {:>8.4} {:>8.4}] [{:>8.4} {:>8.4} {:>8.4}]",
            r.extension.position, f.x, f.y, f.z, tq.x, tq.y, tq.z
        );
        t += 20.0;
    }
    Ok(())
}
