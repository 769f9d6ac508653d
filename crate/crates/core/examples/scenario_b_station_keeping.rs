//! Boom pan and deployment while the base holds station using reaction
//! feedforward. Compares the hold against a run without feedforward.

use std::path::PathBuf;

use ehs_sim::engine::run;
use ehs_sim::scenario::{Overrides, Scenario};

fn main() -> ehs_sim::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scenario_b.toml");
    let scenario = Scenario::load(&path, &Overrides::default())?;
    let folded = scenario.params().expect("one boom").folded_extension();

    let mut without = scenario.clone();
    without.sim.reaction_feedforward = false;

    for (label, sc) in [("feedforward", &scenario), ("feedback only", &without)] {
        let (_, s) = run(sc)?;
        println!("{label}:");
        println!(
            "  pan {:.3} deg, pitch {:.3} deg, deployed +{:.4} m",
            s.final_joints[0][0].to_degrees(),
            s.final_joints[0][1].to_degrees(),
            s.final_extension_m[0] - folded
        );
        println!(
            "  worst base drift {:.3e} m, {:.3e} deg",
            s.max_position_error_m,
            s.max_attitude_error_rad.to_degrees()
        );
        println!(
            "  peak base force {:.3?} mN, unsigned impulse {:.3?} mN s",
            s.max_abs_force_n.map(|f| f * 1e3),
            s.impulse_unsigned_n_s.map(|f| f * 1e3)
        );
        println!(
            "  peak joint effort pan {:.4} N m, pitch {:.4} N m, actuation {:.3} N",
            s.max_joint_effort[0], s.max_joint_effort[1], s.max_joint_effort[2]
        );
    }
    Ok(())
}
