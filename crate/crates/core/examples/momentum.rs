//! Free-floating deployment: with the base controller off, the boom joints
//! move the base but total linear and angular momentum and the combined
//! centre of mass stay fixed.

use std::path::PathBuf;

use ehs_sim::checks::momentum_check;
use ehs_sim::scenario::{Overrides, Scenario};

fn main() -> ehs_sim::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scenario_b.toml");
    let scenario = Scenario::load(&path, &Overrides::default())?;
    let r = momentum_check(&scenario)?;
    println!("{} steps, final extension {:.4} m", r.steps, r.final_extension);
    println!("max |P - P0| = {:.3e} N s", r.max_linear_drift);
    println!("max |H - H0| = {:.3e} N m s", r.max_angular_drift);
    println!("max CoM drift = {:.3e} m", r.max_com_drift);
    Ok(())
}
