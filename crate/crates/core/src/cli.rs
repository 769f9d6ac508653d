//! Command-line front end: `simulate`, `validate` and `plot-data`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical fault, 3 validation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::checks::{
    gain_scheduling_check, jacobian_check, kinematics_check, momentum_check, trajectory_check, CheckResult,
    RampSettings,
};
use crate::engine::{compare_summary, run, RunSummary, Telemetry, Tolerances, ALIASES, COLUMNS};
use crate::error::SimError;
use crate::scenario::{Overrides, Scenario};
use crate::trajectory::PoseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Invalid = 1,
    NumericalFault = 2,
    ValidationFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_error(e: &SimError) -> Self {
        match e {
            SimError::NumericalFault { .. } => ExitStatus::NumericalFault,
            _ => ExitStatus::Invalid,
        }
    }
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> Self {
        ExitCode::from(s.code())
    }
}

#[derive(Debug, Parser)]
#[command(name = "ehs-sim", version, about = "Cubesat with scissor-boom hook system: scenario simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, writing telemetry.csv and summary.json.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        duration: Option<f64>,
        /// Accepted for compatibility; the simulator uses no random numbers.
        #[arg(long)]
        seedless: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Run a validation suite and compare against reference summaries.
    Validate {
        suite: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Extract telemetry channels as two-column `t value` series files.
    PlotData {
        telemetry: PathBuf,
        /// Comma-separated channel names.
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
        #[arg(long, default_value = "plot")]
        out: PathBuf,
    },
}

pub fn main_with_args<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Invalid } else { ExitStatus::Success };
        }
    };
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            dt,
            duration,
            seedless: _,
            quiet,
        } => cmd_simulate(&scenario, &out, &Overrides { dt_s: dt, duration_s: duration }, quiet),
        Command::Validate { suite, quiet } => cmd_validate(&suite, quiet),
        Command::PlotData { telemetry, channels, out } => cmd_plotdata(&telemetry, &channels, &out),
    }
}

fn report(e: &SimError) -> ExitStatus {
    eprintln!("error: {e}");
    ExitStatus::from_error(e)
}

pub fn cmd_simulate(path: &Path, out: &Path, overrides: &Overrides, quiet: bool) -> ExitStatus {
    let scenario = match Scenario::load(path, overrides) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    let (telemetry, summary) = match run(&scenario) {
        Ok(r) => r,
        Err(e) => return report(&e),
    };
    let written = std::fs::create_dir_all(out)
        .map_err(SimError::from)
        .and_then(|_| telemetry.save(out.join("telemetry.csv")))
        .and_then(|_| std::fs::write(out.join("summary.json"), summary.to_json()).map_err(SimError::from));
    if let Err(e) = written {
        return report(&e);
    }
    if !quiet {
        println!("{}", summary.to_json());
    }
    ExitStatus::Success
}

/// Validation suite file.
///
/// ```toml
/// [[entry]]
/// scenario = "scenario_a.toml"              # relative to the suite file
/// reference = "references/scenario_a.json"
/// [entry.tolerances.fields]
/// impulse_unsigned_n_s = { rel = 0.05 }
/// [entry.tolerances.upper]
/// max_abs_force_n = 0.1
///
/// [[check]]
/// kind = "gain_scheduling"                   # kinematics | jacobian | momentum | gain_scheduling | trajectory
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub entry: Vec<SuiteEntry>,
    #[serde(default)]
    pub check: Vec<SuiteCheck>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: PathBuf,
    pub reference: PathBuf,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Kinematics,
    Jacobian,
    Momentum,
    GainScheduling,
    Trajectory,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteCheck {
    pub kind: CheckKind,
    /// Scenario providing the vehicle and boom; required for momentum and
    /// trajectory, optional otherwise.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
}

impl Suite {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let suite: Suite = toml::from_str(&text).map_err(|e| SimError::config("suite", e.message()))?;
        if suite.entry.is_empty() && suite.check.is_empty() {
            return Err(SimError::config("suite", "no entries or checks"));
        }
        for e in &suite.entry {
            if e.tolerances.is_empty() {
                return Err(SimError::config("entry.tolerances", format!("empty for {}", e.scenario.display())));
            }
        }
        Ok(suite)
    }
}

pub fn run_check(check: &SuiteCheck, base: &Path) -> crate::Result<CheckResult> {
    let scenario = match &check.scenario {
        Some(p) => Some(Scenario::load(base.join(p), &Overrides::default())?),
        None => None,
    };
    let need = |what: &str| {
        scenario
            .clone()
            .ok_or_else(|| SimError::config("check.scenario", format!("required for {what}")))
    };
    let default_unit = || -> crate::Result<crate::vehicle::EhsUnit> {
        match scenario.as_ref().and_then(|s| s.vehicle.units.first().cloned()) {
            Some(u) => Ok(u),
            None => {
                let params = crate::scissor::calibrate_from_envelope(5.026, 24, 0.1)?;
                Ok(crate::vehicle::EhsUnit {
                    mount: crate::scissor::MountFrame::identity(),
                    mass: crate::ehs::EhsMassModel::from_split(2.41, Default::default(), &params)?,
                    params,
                    friction: Default::default(),
                })
            }
        }
    };
    let (name, passed, detail) = match check.kind {
        CheckKind::Kinematics => {
            let u = default_unit()?;
            let r = kinematics_check(&u.params, u.params.max_extension(), 1000)?;
            (
                "kinematics",
                r.full_extension_error.abs() <= 4.0 * f64::EPSILON * u.params.max_extension()
                    && r.max_round_trip_error < 1e-9,
                format!(
                    "x(0) - max = {:e} m, round trip {:e} m",
                    r.full_extension_error, r.max_round_trip_error
                ),
            )
        }
        CheckKind::Jacobian => {
            let u = default_unit()?;
            let e = jacobian_check(&u.params, 0.01, 0.95, 500)?;
            ("jacobian", e < 1e-6, format!("max relative error {e:e}"))
        }
        CheckKind::Momentum => {
            let r = momentum_check(&need("momentum")?)?;
            (
                "momentum",
                r.max_linear_drift < 1e-9 && r.max_com_drift < 1e-6 && r.max_angular_drift < 1e-5,
                format!(
                    "dP {:e} N s, dCoM {:e} m, dH {:e} N m s",
                    r.max_linear_drift, r.max_com_drift, r.max_angular_drift
                ),
            )
        }
        CheckKind::GainScheduling => {
            let r = gain_scheduling_check(&default_unit()?, &RampSettings::default())?;
            let (s, u) = (r.scheduled_spread(), r.unscheduled_spread());
            (
                "gain_scheduling",
                s < 2.0 && u > 5.0,
                format!("error spread scheduled {s:.3}x, unscheduled {u:.3}x"),
            )
        }
        CheckKind::Trajectory => {
            let sc = need("trajectory")?;
            let profile = sc
                .maneuver
                .profile
                .ok_or_else(|| SimError::config("maneuver.profile", "required for the trajectory check"))?;
            let goal = sc.maneuver.pose_goal.unwrap_or_else(|| sc.initial.base.pose());
            let traj = PoseTrajectory::new(sc.initial.base.pose(), goal, profile);
            let p = profile.with_distance(traj.chord_length());
            let r = trajectory_check(&p, sc.sim.dt_s);
            (
                "trajectory",
                r.endpoint_error == 0.0 && r.max_rate_jump < 1e-2,
                format!(
                    "d = {:.4} m, endpoint error {:e}, max rate jump {:e}",
                    r.distance, r.endpoint_error, r.max_rate_jump
                ),
            )
        }
    };
    Ok(CheckResult {
        name: name.to_string(),
        passed,
        detail,
    })
}

pub fn cmd_validate(path: &Path, quiet: bool) -> ExitStatus {
    let suite = match Suite::load(path) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut failed = false;
    let mut rows: Vec<(String, bool, String)> = Vec::new();
    for entry in &suite.entry {
        let label = entry
            .name
            .clone()
            .unwrap_or_else(|| entry.scenario.display().to_string());
        let scenario = match Scenario::load(base.join(&entry.scenario), &Overrides::default()) {
            Ok(s) => s,
            Err(e) => return report(&e),
        };
        let reference = match RunSummary::load(base.join(&entry.reference)) {
            Ok(r) => r,
            Err(e) => return report(&e),
        };
        let summary = match run(&scenario) {
            Ok((_, s)) => s,
            Err(e) => return report(&e),
        };
        let cmp = compare_summary(&summary, &reference, &entry.tolerances);
        failed |= !cmp.passed();
        let mut detail = format!("{} fields checked", cmp.checked);
        for v in &cmp.violations {
            detail.push_str(&format!(
                "; {} = {} (expected {}, allowed {})",
                v.field, v.result, v.expected, v.allowed
            ));
        }
        for k in &cmp.unmatched {
            detail.push_str(&format!("; tolerance key {k} matches no field"));
        }
        rows.push((label, cmp.passed(), detail));
    }
    for check in &suite.check {
        match run_check(check, base) {
            Ok(r) => {
                failed |= !r.passed;
                rows.push((r.name, r.passed, r.detail));
            }
            Err(e) => return report(&e),
        }
    }
    if !quiet {
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        for (name, ok, detail) in &rows {
            println!("{:<width$}  {}  {}", name, if *ok { "PASS" } else { "FAIL" }, detail);
        }
    }
    if failed {
        ExitStatus::ValidationFailure
    } else {
        ExitStatus::Success
    }
}

pub fn cmd_plotdata(path: &Path, channels: &[String], out: &Path) -> ExitStatus {
    let channels: Vec<&str> = channels.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).collect();
    let valid = || {
        let aliases: Vec<&str> = ALIASES.iter().map(|(a, _)| *a).collect();
        format!("valid channels: {} (aliases: {})", COLUMNS.join(", "), aliases.join(", "))
    };
    if channels.is_empty() {
        eprintln!("error: no channels given; {}", valid());
        return ExitStatus::Invalid;
    }
    if let Some(bad) = channels.iter().find(|c| Telemetry::column_index(c).is_none()) {
        eprintln!("error: unknown channel {bad:?}; {}", valid());
        return ExitStatus::Invalid;
    }
    let telemetry = match Telemetry::load(path) {
        Ok(t) => t,
        Err(e) => return report(&e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return report(&e.into());
    }
    let time = telemetry.column("t_s").expect("time column");
    for c in channels {
        let values = telemetry.column(c).expect("checked above");
        let mut text = format!("# t_s {c}\n");
        for (t, v) in time.iter().zip(&values) {
            text.push_str(&format!("{t} {v}\n"));
        }
        if let Err(e) = std::fs::write(out.join(format!("{c}.dat")), text) {
            return report(&e.into());
        }
    }
    ExitStatus::Success
}
