//! Tracks a constant-rate extension ramp with and without Jacobian gain
//! scheduling and prints the extension error along the stroke.

use ehs_sim::checks::{gain_scheduling_check, RampSettings};
use ehs_sim::ehs::{EhsMassModel, MassSplit};
use ehs_sim::scissor::{calibrate_from_envelope, extension_jacobian, MountFrame};
use ehs_sim::vehicle::{EhsUnit, JointFriction};

fn main() -> ehs_sim::Result<()> {
    let params = calibrate_from_envelope(5.026, 24, 0.1)?;
    let unit = EhsUnit {
        mount: MountFrame::identity(),
        mass: EhsMassModel::from_split(2.41, MassSplit::default(), &params)?,
        params,
        friction: JointFriction::default(),
    };
    let settings = RampSettings::default();
    let report = gain_scheduling_check(&unit, &settings)?;
    println!("{:>8} {:>10} {:>14} {:>14}", "y/L_L", "dx/dy", "scheduled", "unscheduled");
    for ((g, s), u) in report.grid.iter().zip(&report.scheduled).zip(&report.unscheduled) {
        let j = extension_jacobian(g * params.half_link_length, &params)?;
        println!("{g:>8.2} {j:>10.3} {s:>14.6e} {u:>14.6e}");
    }
    println!("spread: scheduled {:.2}x, unscheduled {:.2}x", report.scheduled_spread(), report.unscheduled_spread());
    Ok(())
}
