//! `agisim` — run, inspect, and stress the simulator from the shell.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agisim_core::analysis::{
    check_config, deviation_by_name, deviation_test, empirical_defection_rate, AnalysisError,
    CheckReport, DeviationReport, Verdict,
};
use agisim_core::config::{parse_config, ConfigError, SimulationConfig};
use agisim_core::engine::EngineError;
use agisim_core::output::{run_to_files, OutputFormat};

#[derive(Parser)]
#[command(
    name = "agisim",
    version,
    about = "Multi-agent simulator of a repeated technology-development game \
             with governance mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo ensemble; write trajectories, stats, and a manifest.
    Run {
        /// Config JSON (or a manifest from a previous run).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the episode count.
        #[arg(long)]
        episodes: Option<u32>,
        /// Trajectory format.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Evaluate the cooperation conditions, folk threshold, and deterrence
    /// bound for a config.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Also write check.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `text` (default) or `json` on stdout.
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Paired-seed unilateral deviation test for one player.
    Deviate {
        #[arg(long)]
        config: PathBuf,
        /// Founder index that deviates.
        #[arg(long)]
        deviant: u32,
        /// Deviation strategy: always-defect, defect-once-at-<t>,
        /// defect-share, or a plain strategy kind.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<u32>,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Sweep one parameter over a grid, measuring defection rates against
    /// the deterrence bound.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary (model coefficient or mechanism field).
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<u32>,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(inner) => CliError::Config(inner.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::NegativeArgument(_)
            | AnalysisError::InvalidDeviant { .. }
            | AnalysisError::UnknownDeviation(_) => CliError::Config(e.to_string()),
            AnalysisError::Engine(inner) => CliError::from(inner),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("runtime error: {message}");
            ExitCode::from(3)
        }
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    episodes: Option<u32>,
) -> Result<SimulationConfig, CliError> {
    let mut config = parse_config(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(episodes) = episodes {
        config.episodes = episodes;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            episodes,
            format,
        } => {
            let config = load_config(&config, seed, episodes)?;
            let format: OutputFormat = format.parse().map_err(CliError::Config)?;
            let output = run_to_files(&config, &out, format)?;
            println!("trajectories: {}", output.trajectory_path.display());
            println!("stats:        {}", output.stats_path.display());
            println!("manifest:     {}", output.manifest_path.display());
            Ok(())
        }
        Command::Check {
            config,
            out,
            format,
        } => {
            let config = load_config(&config, None, None)?;
            let report = check_config(&config)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            match format.as_str() {
                "json" => println!("{json}"),
                "text" => print!("{}", render_check(&report)),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown format `{other}` (expected text or json)"
                    )))
                }
            }
            if let Some(dir) = out {
                write_json(&dir, "check.json", &json)?;
            }
            Ok(())
        }
        Command::Deviate {
            config,
            deviant,
            strategy,
            out,
            seed,
            episodes,
            format,
        } => {
            let config = load_config(&config, seed, episodes)?;
            let deviation = deviation_by_name(&strategy)?;
            let report = deviation_test(&config, deviant, &deviation, &strategy)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            match format.as_str() {
                "json" => println!("{json}"),
                "text" => print!("{}", render_deviation(&report)),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown format `{other}` (expected text or json)"
                    )))
                }
            }
            if let Some(dir) = out {
                write_json(&dir, "deviate.json", &json)?;
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            seed,
            episodes,
        } => {
            let base = load_config(&config, seed, episodes)?;
            let grid: Vec<f64> = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad grid value `{v}`")))
                })
                .collect::<Result<_, _>>()?;
            if grid.is_empty() {
                return Err(CliError::Config("empty sweep grid".into()));
            }
            let mut csv = String::from("parameter,value,defection_rate,epsilon,verdict\n");
            for &value in &grid {
                let mut config = base.clone();
                set_parameter(&mut config, &param, value)?;
                config.validate()?;
                let report = empirical_defection_rate(&config)?;
                let verdict = if report.holds_at_95 { "holds" } else { "violated" };
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    param, value, report.rate.mean, report.epsilon, verdict
                ));
            }
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    let path = dir.join("sweep.csv");
                    std::fs::write(&path, &csv).map_err(|e| CliError::Runtime(e.to_string()))?;
                    println!("sweep: {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn write_json(dir: &Path, name: &str, json: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join(name), format!("{json}\n"))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Route a sweep parameter name to its config field.
fn set_parameter(config: &mut SimulationConfig, name: &str, value: f64) -> Result<(), CliError> {
    agisim_core::config::set_parameter(config, name, value).map_err(CliError::from)
}

fn render_condition(name: &str, check: &agisim_core::analysis::ConditionCheck) -> String {
    let status = if check.holds { "satisfied" } else { "violated " };
    match check.margin {
        Some(margin) => format!("  [{status}] {name} (margin {margin:+.6})\n"),
        None => format!("  [{status}] {name} (margin undefined)\n"),
    }
}

fn render_check(report: &CheckReport) -> String {
    let c = &report.conditions;
    let mut text = String::from("cooperation conditions\n");
    text.push_str(&render_condition(
        "network effects dominate:    beta > gamma + xi/mu",
        &c.cond1_network_effects,
    ));
    text.push_str(&render_condition(
        "verification is affordable:  theta <= mu*beta/delta",
        &c.cond2_verification_affordable,
    ));
    text.push_str(&render_condition(
        "punishments are credible:    xi >= lambda_econ*alpha/delta",
        &c.cond3_punishment_credible,
    ));
    text.push_str(&format!(
        "per-period proxies: cooperate {:.6}, defect {:.6}, punishment {:.6}\n",
        c.pi_cooperate, c.pi_defect, c.pi_punishment
    ));
    match c.folk_delta_min {
        Some(delta_min) if !c.degenerate_threshold => text.push_str(&format!(
            "folk threshold: delta_min {:.6}, delta {:.6} -> {}\n",
            delta_min,
            c.delta,
            if c.folk_satisfied { "satisfied" } else { "violated" }
        )),
        _ => text.push_str(&format!(
            "folk threshold degenerate (defect proxy <= punishment proxy); \
             credibility inequality {} at delta {:.6}\n",
            if c.folk_satisfied { "satisfied" } else { "violated" },
            c.delta
        )),
    }
    text.push_str(&format!(
        "deterrence: audit frequency {:.4}, tau {}, defection bound epsilon {:.6}\n",
        report.effective_audit_frequency, report.effective_tau, report.defection_epsilon
    ));
    text
}

fn render_deviation(report: &DeviationReport) -> String {
    let verdict = match report.verdict {
        Verdict::NoProfitableDeviation => "no profitable deviation",
        Verdict::ProfitableDeviation => "PROFITABLE deviation",
        Verdict::Inconclusive => "inconclusive",
    };
    format!(
        "deviation `{}` by player {} over {} paired episodes\n\
         baseline utility: {:.6} [{:.6}, {:.6}]\n\
         deviant utility:  {:.6} [{:.6}, {:.6}]\n\
         difference:       {:.6} [{:.6}, {:.6}]\n\
         verdict: {verdict}\n\
         max tail bound: {:.3e}\n",
        report.deviation_name,
        report.deviant,
        report.episodes,
        report.baseline_utility.mean,
        report.baseline_utility.ci95_low,
        report.baseline_utility.ci95_high,
        report.deviant_utility.mean,
        report.deviant_utility.ci95_low,
        report.deviant_utility.ci95_high,
        report.difference.mean,
        report.difference.ci95_low,
        report.difference.ci95_high,
        report.max_tail_bound,
    )
}
