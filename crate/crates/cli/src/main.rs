//! `tradewind`: multizone thermal-airflow simulation and prescription
//! checking for naturally ventilated tropical dwellings.
//!
//! Every subcommand loads its inputs, runs deterministically and writes a
//! fixed set of text artifacts into `--out`. Exit codes: 0 success, 1 input
//! error, 2 solver non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tradewind_core::scenario::{self, Scenario, ScenarioMode};

#[derive(Parser)]
#[command(
    name = "tradewind",
    version,
    about = "Multizone building thermal-airflow simulation and dwelling prescription checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Building description, JSON (see schema/building.schema.json).
    #[arg(long)]
    building: PathBuf,

    /// Directory the artifacts are written into (created if missing).
    #[arg(long)]
    out: PathBuf,

    /// Configuration override, repeatable: key=value with a numeric value.
    /// Keys: h_in, h_out_base, h_out_wind, substeps, nodes_per_layer,
    /// day_of_year, season_days, warmup_cycles, ach, cd, cp.<angle>.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Cooling-season length in days for seasonal energy scaling.
    #[arg(long, value_name = "N")]
    season_days: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Hourly simulation of a weather file (free-float or conditioned).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Hourly weather CSV: hour, dry_bulb_C, rh_pct, dni_wm2, dhi_wm2,
        /// wind_ms, wind_dir_deg.
        #[arg(long)]
        weather: PathBuf,
    },
    /// Seven scripted calm and trade-wind days built on the first weather day.
    Windstudy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        weather: PathBuf,
    },
    /// Grid of exterior x interior opening-to-wall permeability ratios.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        weather: PathBuf,
        /// Exterior permeability ratios, percent (15-40) or fractions,
        /// comma separated.
        #[arg(long = "ext", value_delimiter = ',', required = true)]
        exterior: Vec<f64>,
        /// Interior permeability ratios, same units as --ext.
        #[arg(long = "int", value_delimiter = ',', required = true)]
        interior: Vec<f64>,
    },
    /// Base versus improved dwelling with per-measure attribution.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        weather: PathBuf,
        /// Improved counterpart of --building; measures are matched by id.
        #[arg(long)]
        improved: PathBuf,
    },
    /// Prescription compliance report for a declared dwelling.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory of rule-table JSON files.
        #[arg(long)]
        rules: PathBuf,
    },
}

fn parse_override(raw: &str) -> Result<(String, f64), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("override {raw:?} is not key=value"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("override {raw:?}: {e}"))?;
    Ok((key.trim().to_string(), value))
}

fn to_scenario(command: &Command) -> Result<Scenario, String> {
    let (common, weather, rules, improved, mode) = match command {
        Command::Simulate { common, weather } => {
            (common, Some(weather), None, None, ScenarioMode::Simulate)
        }
        Command::Windstudy { common, weather } => {
            (common, Some(weather), None, None, ScenarioMode::WindStudy)
        }
        Command::Sweep {
            common,
            weather,
            exterior,
            interior,
        } => (
            common,
            Some(weather),
            None,
            None,
            ScenarioMode::Sweep {
                exterior: exterior.clone(),
                interior: interior.clone(),
            },
        ),
        Command::Compare {
            common,
            weather,
            improved,
        } => (common, Some(weather), None, Some(improved), ScenarioMode::Compare),
        Command::Check { common, rules } => (common, None, Some(rules), None, ScenarioMode::Check),
    };
    let overrides = common
        .overrides
        .iter()
        .map(|raw| parse_override(raw))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Scenario {
        building: common.building.clone(),
        weather: weather.cloned(),
        rules: rules.cloned(),
        improved: improved.cloned(),
        mode,
        overrides,
        season_days: common.season_days,
    })
}

fn out_dir(command: &Command) -> &PathBuf {
    match command {
        Command::Simulate { common, .. }
        | Command::Windstudy { common, .. }
        | Command::Sweep { common, .. }
        | Command::Compare { common, .. }
        | Command::Check { common, .. } => &common.out,
    }
}

fn execute(command: &Command) -> Result<(), (String, u8)> {
    let scenario = to_scenario(command).map_err(|message| (message, 1))?;
    let artifacts = scenario::run(&scenario).map_err(|err| {
        let code = if err.is_convergence_failure() { 2 } else { 1 };
        (err.to_string(), code)
    })?;
    let out = out_dir(command);
    std::fs::create_dir_all(out).map_err(|e| (format!("cannot create {}: {e}", out.display()), 1))?;
    for artifact in &artifacts {
        let path = out.join(&artifact.name);
        std::fs::write(&path, &artifact.contents)
            .map_err(|e| (format!("cannot write {}: {e}", path.display()), 1))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    // Clap reserves exit code 2 for usage errors; remap them onto the
    // documented input-error code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((message, code)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradewind_core::scenario::ScenarioError;

    #[test]
    fn override_parsing() {
        assert_eq!(
            parse_override("h_in=9.5").unwrap(),
            ("h_in".to_string(), 9.5)
        );
        assert_eq!(
            parse_override("cp.90 = -0.4").unwrap(),
            ("cp.90".to_string(), -0.4)
        );
        assert!(parse_override("broken").is_err());
        assert!(parse_override("ach=fast").is_err());
    }

    #[test]
    fn cli_shape_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommands_map_to_modes() {
        let cli = Cli::try_parse_from([
            "tradewind",
            "sweep",
            "--building",
            "b.json",
            "--weather",
            "w.csv",
            "--out",
            "out",
            "--ext",
            "15,25",
            "--int",
            "25",
        ])
        .unwrap();
        let scenario = to_scenario(&cli.command).unwrap();
        assert_eq!(
            scenario.mode,
            ScenarioMode::Sweep {
                exterior: vec![15.0, 25.0],
                interior: vec![25.0],
            }
        );

        let cli = Cli::try_parse_from([
            "tradewind",
            "check",
            "--building",
            "b.json",
            "--rules",
            "rules",
            "--out",
            "out",
        ])
        .unwrap();
        let scenario = to_scenario(&cli.command).unwrap();
        assert_eq!(scenario.mode, ScenarioMode::Check);
        assert_eq!(scenario.rules, Some(PathBuf::from("rules")));
    }

    #[test]
    fn scenario_error_codes_documented() {
        let err = ScenarioError::Invalid("x".into());
        assert!(!err.is_convergence_failure());
    }
}
