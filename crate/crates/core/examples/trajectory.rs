//! Trapezoidal velocity profile and the straight-line pose reference built on it.

use ehs_sim::checks::trajectory_check;
use ehs_sim::spatial::{Pose, Vec3};
use ehs_sim::trajectory::{PoseTrajectory, TrapezoidProfile};

fn main() -> ehs_sim::Result<()> {
    let goal = Pose::from_tuple([25.0, 25.0, -10.0, 0.0, 0.0, 0.0]);
    let d = goal.position.norm();
    let profile = TrapezoidProfile::new(d, 500.0, 153.0)?;
    let traj = PoseTrajectory::new(Pose::identity(), goal, profile);
    println!("distance {d:.4} m, plateau rate {:.6} m/s, accel {:.3e} m/s^2", profile.plateau_rate(), profile.accel());

    println!("{:>6} {:>10} {:>10} {:>12}   position (m)", "t (s)", "s (m)", "v (m/s)", "a (m/s^2)");
    for t in [0.0, 50.0, 153.0, 250.0, 347.0, 450.0, 500.0, 520.0] {
        let s = profile.eval(t);
        let r = traj.eval(t);
        let p: Vec3 = r.state.position;
        println!("{t:>6.0} {:>10.4} {:>10.6} {:>12.3e}   [{:.3}, {:.3}, {:.3}]", s.position, s.rate, s.accel, p.x, p.y, p.z);
    }

    let check = trajectory_check(&profile, 1e-3);
    println!(
        "sampled at 1 ms: endpoint error {:e} m, largest relative rate step {:.2e}",
        check.endpoint_error, check.max_rate_jump
    );
    Ok(())
}
