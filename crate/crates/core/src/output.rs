//! Result serialization: trajectory CSV/JSON, stats JSON, run manifests.
//!
//! One trajectory row per `(episode, t, player)`, with the time-`t` state,
//! the effective choice made at `t`, and the step's audit outcome. Floats
//! are written in Rust's shortest round-trip form, so re-aggregating the
//! CSV reproduces the stats exactly. Full column reference: `docs/formats.md`.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{Manifest, ManifestOutputs, SimulationConfig};
use crate::engine::{
    aggregate, run_episode, summarize_episode, EngineError, EpisodeSummary, Trajectory,
};

/// One CSV/JSON trajectory row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub episode: u32,
    pub t: u32,
    pub player: u32,
    pub action: String,
    pub r: f64,
    pub s: u8,
    #[serde(rename = "T")]
    pub capability: f64,
    #[serde(rename = "K")]
    pub knowledge: f64,
    #[serde(rename = "S")]
    pub security: f64,
    #[serde(rename = "V")]
    pub verification: u8,
    pub sanction_level: String,
    pub stage_utility: f64,
    pub audited: u8,
    pub flagged: u8,
}

/// Flatten one episode's trajectory into rows.
pub fn trajectory_rows(episode: u32, trajectory: &Trajectory) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for step in &trajectory.steps {
        let state = &step.state;
        for id in state.player_ids() {
            let i = id.index();
            rows.push(TrajectoryRow {
                episode,
                t: state.t,
                player: id.0,
                action: step.choices[i].action.to_string(),
                r: step.choices[i].resource_fraction,
                s: step.choices[i].sharing,
                capability: state.capabilities[i],
                knowledge: state.knowledge,
                security: state.security,
                verification: state.verification[i],
                sanction_level: state.sanctions[i].level.to_string(),
                stage_utility: step.utilities[i].total,
                audited: u8::from(step.audited[i]),
                flagged: u8::from(step.flagged[i]),
            });
        }
    }
    rows
}

/// Paths written by a run, plus the manifest that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trajectory_path: PathBuf,
    pub stats_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Trajectory serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Run the configured ensemble, writing the trajectory file, stats JSON,
/// and manifest into `out_dir`. Episodes are processed in chunks so memory
/// stays bounded; rows appear in `(episode, t, player)` order regardless of
/// internal scheduling.
pub fn run_to_files(
    config: &SimulationConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunOutput, EngineError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(crate::config::ConfigError::from)?;
    let trajectory_name = match format {
        OutputFormat::Csv => "trajectories.csv",
        OutputFormat::Json => "trajectories.json",
    };
    let trajectory_path = out_dir.join(trajectory_name);
    let stats_path = out_dir.join("stats.json");
    let manifest_path = out_dir.join("manifest.json");

    let io_err = crate::config::ConfigError::from;
    let file = std::fs::File::create(&trajectory_path).map_err(io_err)?;
    let buffered = std::io::BufWriter::new(file);
    let mut summaries: Vec<EpisodeSummary> = Vec::with_capacity(config.episodes as usize);

    enum TrajectoryWriter {
        Csv(csv::Writer<std::io::BufWriter<std::fs::File>>),
        Json(std::io::BufWriter<std::fs::File>, Vec<TrajectoryRow>),
    }
    let mut sink = match format {
        OutputFormat::Csv => TrajectoryWriter::Csv(csv::Writer::from_writer(buffered)),
        OutputFormat::Json => TrajectoryWriter::Json(buffered, Vec::new()),
    };

    use rayon::prelude::*;
    const CHUNK: u32 = 64;
    let mut start = 0u32;
    while start < config.episodes {
        let end = (start + CHUNK).min(config.episodes);
        let chunk: Vec<(Trajectory, u32)> = (start..end)
            .into_par_iter()
            .map(|episode| run_episode(config, episode).map(|t| (t, episode)))
            .collect::<Result<_, _>>()?;
        for (trajectory, episode) in &chunk {
            summaries.push(summarize_episode(trajectory, *episode, &config.params));
            let rows = trajectory_rows(*episode, trajectory);
            match &mut sink {
                TrajectoryWriter::Csv(w) => {
                    for row in &rows {
                        w.serialize(row).map_err(|e| {
                            crate::config::ConfigError::Invalid(format!("csv write: {e}"))
                        })?;
                    }
                }
                TrajectoryWriter::Json(_, collected) => collected.extend(rows),
            }
        }
        start = end;
    }
    match sink {
        TrajectoryWriter::Csv(w) => {
            let mut inner = w
                .into_inner()
                .map_err(|e| crate::config::ConfigError::Invalid(format!("csv flush: {e}")))?;
            inner.flush().map_err(io_err)?;
        }
        TrajectoryWriter::Json(mut writer, rows) => {
            serde_json::to_writer_pretty(&mut writer, &rows)
                .map_err(crate::config::ConfigError::from)?;
            writer.write_all(b"\n").map_err(io_err)?;
            writer.flush().map_err(io_err)?;
        }
    }

    let stats = aggregate(&summaries, &config.params);
    let stats_text =
        serde_json::to_string_pretty(&stats).map_err(crate::config::ConfigError::from)?;
    std::fs::write(&stats_path, stats_text + "\n").map_err(io_err)?;

    let manifest = Manifest::new(
        config.clone(),
        ManifestOutputs {
            trajectory: trajectory_name.to_string(),
            stats: "stats.json".to_string(),
        },
    );
    let manifest_text =
        serde_json::to_string_pretty(&manifest).map_err(crate::config::ConfigError::from)?;
    std::fs::write(&manifest_path, manifest_text + "\n").map_err(io_err)?;

    Ok(RunOutput {
        trajectory_path,
        stats_path,
        manifest_path,
    })
}
