use std::path::{Path, PathBuf};
use std::process::Command;

use ehs_sim::engine::{RunSummary, Telemetry, COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ehs-sim"))
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

fn simulate(scenario: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin()
        .arg("simulate")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn null_scenario_writes_outputs_with_zero_impulse() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenarios().join("null.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let echoed = RunSummary::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let saved = RunSummary::load(dir.path().join("summary.json")).unwrap();
    assert_eq!(echoed, saved);
    assert_eq!(saved.impulse_unsigned_n_s, [0.0; 3]);
    assert_eq!(saved.impulse_net_n_s, [0.0; 3]);

    let text = std::fs::read_to_string(dir.path().join("telemetry.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    let t = Telemetry::load(dir.path().join("telemetry.csv")).unwrap();
    assert_eq!(t.rows.len(), 101);
    let time = t.column("t_s").unwrap();
    assert!(time.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(t.rows.first().unwrap()[1..14], t.rows.last().unwrap()[1..14]);
}

#[test]
fn negative_dt_is_rejected_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenarios().join("null.toml"), dir.path(), &["--dt=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim.dt_s"));
}

#[test]
fn duration_override_and_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenarios().join("null.toml"), dir.path(), &["--duration", "2", "--quiet", "--seedless"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(RunSummary::load(dir.path().join("summary.json")).unwrap().steps, 2000);
}

#[test]
fn missing_or_bad_scenario_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&dir.path().join("nope.toml"), dir.path(), &[]).status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenarios().join("null.toml")).unwrap();
    std::fs::write(&bad, text.replace("dims_m", "dim_m")).unwrap();
    let out = simulate(&bad, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim_m"));
}

#[test]
fn numerical_fault_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("null.toml")).unwrap();
    let path = dir.path().join("nan.toml");
    std::fs::write(&path, text.replace("mass_kg = 27.7", "mass_kg = 1e-300")).unwrap();
    let out = simulate(&path, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn plot_data_round_trips_channels() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&scenarios().join("null.toml"), dir.path(), &["--duration", "1", "--quiet"]).status.code(), Some(0));
    let csv = dir.path().join("telemetry.csv");
    let plot = dir.path().join("plot");
    let status = code(bin().arg("plot-data").arg(&csv).args(["--channels", "q_w,imp_uy,force_x"]).arg("--out").arg(&plot));
    assert_eq!(status, 0);
    let t = Telemetry::load(&csv).unwrap();
    for (file, col) in [("q_w", "q_w"), ("imp_uy", "imp_uy"), ("force_x", "app_fx")] {
        let text = std::fs::read_to_string(plot.join(format!("{file}.dat"))).unwrap();
        let values: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        let expect = t.column(col).unwrap();
        assert_eq!(values.len(), expect.len());
        assert!(values.iter().zip(&expect).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn plot_data_rejects_unknown_or_empty_channels() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&scenarios().join("null.toml"), dir.path(), &["--duration", "1", "--quiet"]).status.code(), Some(0));
    let csv = dir.path().join("telemetry.csv");
    let out = bin().arg("plot-data").arg(&csv).args(["--channels", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pos_x_m"));
    assert_eq!(code(bin().arg("plot-data").arg(&csv)), 1);
    assert_eq!(code(bin().arg("plot-data").arg(&csv).args(["--channels", ""])), 1);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(bin().arg("validate").arg(&empty)), 1);

    let null = scenarios().join("null.toml");
    let reference = scenarios().join("references/null.json");
    let suite = |tol: &str| {
        format!(
            "[[entry]]\nscenario = {:?}\nreference = {:?}\n[entry.tolerances.fields]\n{tol}\n\n[[check]]\nkind = \"kinematics\"\n",
            null.display().to_string(),
            reference.display().to_string()
        )
    };
    let pass = dir.path().join("pass.toml");
    std::fs::write(&pass, suite("final_pose = { abs = 0.0 }")).unwrap();
    assert_eq!(code(bin().arg("validate").arg(&pass).arg("--quiet")), 0);

    // A tolerance key that matches nothing is a failure, not a silent pass.
    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, suite("final_pos = { abs = 0.0 }")).unwrap();
    assert_eq!(code(bin().arg("validate").arg(&typo).arg("--quiet")), 3);
}
