//! Large-distance translation and reorientation with the boom stowed.
//!
//! Usage: `cargo run --release --example scenario_a_traverse [scenario.toml]`

use std::path::PathBuf;

use ehs_sim::engine::run;
use ehs_sim::scenario::{Overrides, Scenario};

fn main() -> ehs_sim::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scenario_a.toml"));
    let scenario = Scenario::load(&path, &Overrides::default())?;
    let (telemetry, s) = run(&scenario)?;

    println!("{} samples over {} s", telemetry.rows.len(), s.duration_s);
    println!("final pose {:.5?}", s.final_pose);
    println!(
        "final error {:.3e} m, {:.3e} deg",
        s.final_position_error_m,
        s.final_attitude_error_rad.to_degrees()
    );
    println!("unsigned impulse {:.4?} N s", s.impulse_unsigned_n_s);
    println!("net impulse      {:.4?} N s", s.impulse_net_n_s);
    println!("peak force {:.4?} N, peak torque {:.4?} N m", s.max_abs_force_n, s.max_abs_torque_n_m);
    for e in s.events.iter().take(10) {
        println!("event t = {:.3} s {:?} {}", e.t_s, e.kind, e.detail);
    }
    Ok(())
}
