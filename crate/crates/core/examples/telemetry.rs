//! Runs a short scenario, writes telemetry to CSV, reads it back and
//! prints a few channels. The CSV round trip is bit-exact.

use std::path::PathBuf;

use ehs_sim::engine::{run, Telemetry, COLUMNS};
use ehs_sim::scenario::{Overrides, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/null.toml");
    let scenario = Scenario::load(&path, &Overrides { dt_s: None, duration_s: Some(2.0) })?;
    let (telemetry, _) = run(&scenario)?;

    let file = std::env::temp_dir().join("ehs_sim_telemetry.csv");
    telemetry.save(&file)?;
    let back = Telemetry::load(&file)?;
    let exact = telemetry
        .rows
        .iter()
        .flatten()
        .zip(back.rows.iter().flatten())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{} columns, {} rows -> {} (bit-exact: {exact})", COLUMNS.len(), back.rows.len(), file.display());

    let t = back.column("t_s").unwrap();
    let x = back.column("pos_x_m").unwrap();
    let fx = back.column("app_fx").unwrap();
    for i in (0..t.len()).step_by(5) {
        println!("t = {:>4.1} s  x = {:.9} m  applied fx = {:+.3e} N", t[i], x[i], fx[i]);
    }
    Ok(())
}
