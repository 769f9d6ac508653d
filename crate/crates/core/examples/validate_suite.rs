//! Compares a fresh run against a stored reference summary with field
//! tolerances and upper bounds, the same way the `validate` subcommand does.

use std::path::PathBuf;

use ehs_sim::engine::{compare_summary, run, RunSummary, Tolerance, Tolerances};
use ehs_sim::scenario::{Overrides, Scenario};

fn main() -> ehs_sim::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let scenario = Scenario::load(&dir.join("null.toml"), &Overrides::default())?;
    let reference = RunSummary::load(dir.join("references/null.json"))?;
    let (_, result) = run(&scenario)?;

    let mut tolerances = Tolerances::default();
    tolerances.fields.insert("final_pose".into(), Tolerance { abs: 1e-9, rel: 0.0 });
    tolerances.fields.insert("impulse_unsigned_n_s".into(), Tolerance { abs: 1e-9, rel: 1e-6 });
    tolerances.fields.insert("impulse_net_n_s".into(), Tolerance { abs: 1e-9, rel: 1e-6 });
    tolerances.upper.insert("max_abs_force_n".into(), 0.1);

    let report = compare_summary(&result, &reference, &tolerances);
    println!("{} fields checked, passed: {}", report.checked, report.passed());
    for v in &report.violations {
        println!("  {}: {} vs {} (allowed {})", v.field, v.result, v.expected, v.allowed);
    }
    for key in &report.unmatched {
        println!("  tolerance key {key} matched no field");
    }

    // A bound the run cannot meet: the vehicle holds x = 1 m.
    tolerances.upper.insert("final_pose.x".into(), 0.5);
    let strict = compare_summary(&result, &reference, &tolerances);
    println!("with final_pose.x <= 0.5: passed {}", strict.passed());
    for v in &strict.violations {
        println!("  {}: {} exceeds bound {}", v.field, v.result, v.expected);
    }
    Ok(())
}
