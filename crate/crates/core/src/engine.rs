//! Episode driver and Monte Carlo ensembles.
//!
//! A step runs in a fixed order: strategies decide from public history,
//! sanctions adjust the effective choices, audit targets are drawn,
//! detection runs, the state transitions, stage utilities are recorded from
//! the pre-transition state, sanction ladders advance, entrants arrive, and
//! the public history is extended with the new stocks and any announced
//! violations. All randomness comes from per-purpose streams derived from
//! `(master seed, episode)`, so a config and seed pin every trajectory byte
//! and episodes can run in any order or in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimulationConfig;
use crate::dynamics::{self, DynamicsError};
use crate::mechanisms::{advance_sanction, apply_sanctions, SanctionLevel};
use crate::model::{
    init_state, sample_entrant, sample_player, Action, GameState, JointChoice, ModelError, Player,
    PlayerId,
};
use crate::params::Parameters;
use crate::payoff::{self, PayoffError, UtilityBreakdown};
use crate::rng::{derive_rng, episode_label, SimRng};
use crate::strategy::{
    decide, detect, select_audit_targets, DetectionOutcome, PublicHistory, StrategyContext,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// Everything that happened at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// State at time `t`, before the transition.
    pub state: GameState,
    /// Effective choices (after sanction adjustments), indexed by player.
    pub choices: Vec<JointChoice>,
    pub audited: Vec<bool>,
    pub flagged: Vec<bool>,
    /// Stage utilities from the pre-transition state.
    pub utilities: Vec<UtilityBreakdown>,
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub final_state: GameState,
    pub history: PublicHistory,
    /// Truncation bound `delta^horizon * max|U| / (1 - delta)`.
    pub tail_bound: f64,
    /// Players that arrived during the episode.
    pub entrants: u32,
}

impl Trajectory {
    /// Discounted utility of one player over this episode.
    pub fn discounted_utility(
        &self,
        player: PlayerId,
        params: &Parameters,
    ) -> Result<f64, PayoffError> {
        payoff::discounted_utility(self, player, params)
    }
}

/// Sample this step's entrants: a Poisson-distributed count, then traits and
/// an initial capability per entrant. Entrants act from the next step.
pub fn spawn_entrants(
    rng: &mut SimRng,
    params: &Parameters,
    first_id: u32,
    entry_time: u32,
) -> Vec<(Player, f64)> {
    let count = rng.poisson(params.lambda_entry);
    (0..count)
        .map(|k| sample_entrant(rng, params, PlayerId(first_id + k), entry_time))
        .collect()
}

fn founders(config: &SimulationConfig, rng: &mut SimRng) -> Vec<Player> {
    match &config.founders {
        Some(specs) => specs
            .iter()
            .enumerate()
            .map(|(i, f)| Player {
                id: PlayerId(i as u32),
                compute: f.compute,
                expertise: f.expertise,
                risk_tolerance: f.risk_tolerance,
                entry_time: 0,
            })
            .collect(),
        None => (0..config.params.n_initial)
            .map(|i| sample_player(rng, &config.params, PlayerId(i), 0))
            .collect(),
    }
}

/// Run one episode. Deterministic in `(config, episode)`.
pub fn run_episode(config: &SimulationConfig, episode: u32) -> Result<Trajectory, EngineError> {
    let params = &config.params;
    let mechanisms = &config.mechanisms;
    let audit_frequency = mechanisms.effective_audit_frequency();
    let ctx = StrategyContext {
        params,
        effective_audit_frequency: audit_frequency,
        tau: f64::from(mechanisms.effective_tau()),
    };

    let mut population_rng = derive_rng(config.seed, &episode_label(episode, "pop"));
    let mut audit_rng = derive_rng(config.seed, &episode_label(episode, "audit"));
    let mut verify_rng = derive_rng(config.seed, &episode_label(episode, "verify"));
    let mut detect_rng = derive_rng(config.seed, &episode_label(episode, "detect"));
    let mut entry_rng = derive_rng(config.seed, &episode_label(episode, "entry"));
    let mut strategy_rng = derive_rng(config.seed, &episode_label(episode, "strategy"));

    let mut state = init_state(founders(config, &mut population_rng), config.initial_capability)?;
    let mut history = PublicHistory::genesis(state.knowledge, state.security);
    let mut steps = Vec::with_capacity(params.horizon as usize);
    let mut entrants_total = 0u32;
    let mut u_max = 0.0f64;

    for t in 0..params.horizon {
        // 1. Strategies decide; excluded players are outside the consortium
        //    and race privately (Defect, no sharing) under the compute cap.
        let choices: Vec<JointChoice> = state
            .players
            .iter()
            .map(|player| {
                let spec = config.strategy_for(player.id.0);
                if state.sanctions[player.id.index()].level == SanctionLevel::Excluded {
                    JointChoice::new(Action::Defect, spec.r_defect, 0)
                } else {
                    decide(spec, &history, player, &ctx, &mut strategy_rng)
                }
            })
            .collect();

        // 2. Sanctions reshape what the choices do.
        let effective = apply_sanctions(&state, &choices, mechanisms);

        // 3-4. Audits and detection.
        let active: Vec<PlayerId> = state.player_ids().collect();
        let selection = select_audit_targets(&mut audit_rng, &active, audit_frequency);
        let detections: Vec<DetectionOutcome> = state
            .player_ids()
            .map(|id| {
                detect(
                    id,
                    &effective[id.index()].choice,
                    selection.contains(id),
                    &mut detect_rng,
                    params,
                )
            })
            .collect();

        // 5. State transition.
        let mut next_state = dynamics::transition(
            &state,
            &effective,
            &selection,
            &mut verify_rng,
            params,
            config.security_timing,
        )?;

        // 6. Stage utilities from the time-t state.
        let utilities: Vec<UtilityBreakdown> = state
            .player_ids()
            .map(|id| payoff::stage_utility(&state, id, &effective[id.index()].choice, params))
            .collect::<Result<_, _>>()?;
        for u in &utilities {
            u_max = u_max.max(u.total.abs());
        }

        // 7. Sanction ladders advance; "verified compliant" means the audit
        //    both succeeded and found no violation.
        for id in state.player_ids() {
            let i = id.index();
            let violated = detections[i].flagged;
            let verified_compliant = next_state.verification[i] == 1 && !violated;
            next_state.sanctions[i] =
                advance_sanction(&state.sanctions[i], violated, verified_compliant, t, mechanisms);
        }

        // 8. Entrants join, acting from the next step; none arrive after the
        //    last step (they would never act or be observed).
        if t + 1 < params.horizon {
            for (player, initial_capability) in spawn_entrants(
                &mut entry_rng,
                params,
                next_state.player_count() as u32,
                t + 1,
            ) {
                next_state.admit(player, initial_capability);
                entrants_total += 1;
            }
        }

        // 9. Publish the new stocks and any announced violations.
        let violations: Vec<(PlayerId, u32)> = detections
            .iter()
            .filter(|d| d.flagged)
            .map(|d| (d.player, t))
            .collect();
        history.append(t + 1, next_state.knowledge, next_state.security, violations);

        steps.push(StepRecord {
            state: state.clone(),
            choices: effective.iter().map(|e| e.choice).collect(),
            audited: active.iter().map(|id| selection.contains(*id)).collect(),
            flagged: detections.iter().map(|d| d.flagged).collect(),
            utilities,
        });
        state = next_state;
    }

    Ok(Trajectory {
        steps,
        final_state: state,
        history,
        tail_bound: payoff::tail_bound(params, u_max),
        entrants: entrants_total,
    })
}

/// Mean, sample variance, and normal-approximation 95% CI of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub variance: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: u64,
}

const Z_95: f64 = 1.959963984540054;

impl SummaryStat {
    pub fn from_samples(samples: &[f64]) -> SummaryStat {
        let n = samples.len();
        assert!(n > 0, "summary of an empty sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let half_width = Z_95 * (variance / n as f64).sqrt();
        SummaryStat {
            mean,
            variance,
            ci95_low: mean - half_width,
            ci95_high: mean + half_width,
            n: n as u64,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci95_high - self.ci95_low
    }
}

/// Per-episode aggregates kept by ensembles (trajectories are dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: u32,
    pub founder_utilities: Vec<f64>,
    pub entrant_utilities: Vec<f64>,
    pub defection_rate: f64,
    pub detections: u64,
    pub entrants: u32,
    pub tail_bound: f64,
}

/// Reduce one trajectory to its ensemble-level numbers.
pub fn summarize_episode(
    trajectory: &Trajectory,
    episode: u32,
    params: &Parameters,
) -> EpisodeSummary {
    let n_initial = params.n_initial as usize;
    let total_players = trajectory.final_state.player_count();
    let mut discounted = vec![0.0f64; total_players];
    let mut discount = 1.0;
    let mut defection_steps = 0u64;
    let mut player_steps = 0u64;
    let mut detections = 0u64;
    for step in &trajectory.steps {
        for (i, u) in step.utilities.iter().enumerate() {
            discounted[i] += discount * u.total;
        }
        for choice in &step.choices {
            player_steps += 1;
            if choice.action == Action::Defect {
                defection_steps += 1;
            }
        }
        detections += step.flagged.iter().filter(|&&f| f).count() as u64;
        discount *= params.delta;
    }
    EpisodeSummary {
        episode,
        founder_utilities: discounted[..n_initial].to_vec(),
        entrant_utilities: discounted[n_initial..].to_vec(),
        defection_rate: if player_steps > 0 {
            defection_steps as f64 / player_steps as f64
        } else {
            0.0
        },
        detections,
        entrants: trajectory.entrants,
        tail_bound: trajectory.tail_bound,
    }
}

/// Ensemble-level statistics with 95% confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub schema_version: u32,
    pub episodes: u32,
    /// Discounted utility per founder id, across episodes.
    pub founder_discounted_utility: Vec<SummaryStat>,
    /// Discounted utility pooled over all entrants of all episodes.
    pub entrant_discounted_utility: Option<SummaryStat>,
    /// Fraction of player-steps whose action was Defect, per episode.
    pub defection_rate: SummaryStat,
    /// Verified detections per episode.
    pub detections: SummaryStat,
    /// Arrivals per episode.
    pub entrants: SummaryStat,
    pub max_tail_bound: f64,
}

/// Aggregate per-episode summaries; associative and order-independent
/// (summaries are keyed by episode index, not completion order).
pub fn aggregate(summaries: &[EpisodeSummary], params: &Parameters) -> EnsembleStats {
    let n_initial = params.n_initial as usize;
    let founder_discounted_utility = (0..n_initial)
        .map(|i| {
            let samples: Vec<f64> = summaries.iter().map(|s| s.founder_utilities[i]).collect();
            SummaryStat::from_samples(&samples)
        })
        .collect();
    let entrant_samples: Vec<f64> = summaries
        .iter()
        .flat_map(|s| s.entrant_utilities.iter().copied())
        .collect();
    let per_episode = |f: fn(&EpisodeSummary) -> f64| -> Vec<f64> {
        summaries.iter().map(f).collect()
    };
    EnsembleStats {
        schema_version: 1,
        episodes: summaries.len() as u32,
        founder_discounted_utility,
        entrant_discounted_utility: if entrant_samples.is_empty() {
            None
        } else {
            Some(SummaryStat::from_samples(&entrant_samples))
        },
        defection_rate: SummaryStat::from_samples(&per_episode(|s| s.defection_rate)),
        detections: SummaryStat::from_samples(&per_episode(|s| s.detections as f64)),
        entrants: SummaryStat::from_samples(&per_episode(|s| f64::from(s.entrants))),
        max_tail_bound: summaries.iter().fold(0.0, |m, s| m.max(s.tail_bound)),
    }
}

/// Run the configured ensemble and aggregate. Episodes are independent and
/// scheduled in parallel; results are identical under any scheduling.
pub fn run_ensemble(config: &SimulationConfig) -> Result<EnsembleStats, EngineError> {
    config.validate()?;
    let summaries = run_episode_summaries(config)?;
    Ok(aggregate(&summaries, &config.params))
}

/// Per-episode summaries for the configured ensemble, in episode order.
pub fn run_episode_summaries(
    config: &SimulationConfig,
) -> Result<Vec<EpisodeSummary>, EngineError> {
    (0..config.episodes)
        .into_par_iter()
        .map(|episode| {
            run_episode(config, episode)
                .map(|trajectory| summarize_episode(&trajectory, episode, &config.params))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{StrategyKind, StrategySpec};

    fn base_config() -> SimulationConfig {
        let mut config = SimulationConfig::with_seed(11);
        config.params.horizon = 3;
        config.params.lambda_entry = 0.0;
        config.params.n_initial = 3;
        config
    }

    #[test]
    fn all_cooperate_has_no_violations_and_growing_knowledge() {
        let mut config = base_config();
        config.default_strategy = StrategySpec::of_kind(StrategyKind::AlwaysCooperate);
        config.initial_capability = 1.0;
        let trajectory = run_episode(&config, 0).unwrap();
        assert!(trajectory.steps.iter().all(|s| s.flagged.iter().all(|&f| !f)));
        let knowledge: Vec<f64> = trajectory.steps.iter().map(|s| s.state.knowledge).collect();
        for w in knowledge.windows(2) {
            assert!(w[1] > w[0], "knowledge should grow once capabilities exist");
        }
    }

    #[test]
    fn all_defect_freezes_knowledge() {
        let mut config = base_config();
        config.default_strategy = StrategySpec::of_kind(StrategyKind::AlwaysDefect);
        config.initial_capability = 5.0;
        let trajectory = run_episode(&config, 0).unwrap();
        assert_eq!(trajectory.final_state.knowledge, 0.0);
    }

    #[test]
    fn same_config_and_seed_replays_bit_identically() {
        let mut config = base_config();
        config.params.lambda_entry = 0.3;
        config.params.horizon = 20;
        let a = run_episode(&config, 5).unwrap();
        let b = run_episode(&config, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_episodes_differ() {
        let config = base_config();
        let a = run_episode(&config, 0).unwrap();
        let b = run_episode(&config, 1).unwrap();
        assert_ne!(a.steps[0].state.players, b.steps[0].state.players);
    }

    #[test]
    fn zero_entry_rate_spawns_nobody() {
        let config = base_config();
        let trajectory = run_episode(&config, 0).unwrap();
        assert_eq!(trajectory.entrants, 0);
        assert_eq!(trajectory.final_state.player_count(), 3);
    }

    #[test]
    fn population_grows_by_entrants_only() {
        let mut config = base_config();
        config.params.lambda_entry = 0.5;
        config.params.horizon = 30;
        let trajectory = run_episode(&config, 2).unwrap();
        assert_eq!(
            trajectory.final_state.player_count(),
            3 + trajectory.entrants as usize
        );
        // Entrants observe and act from their arrival step onward.
        for step in &trajectory.steps {
            assert_eq!(step.utilities.len(), step.state.player_count());
            assert_eq!(step.choices.len(), step.state.player_count());
        }
    }

    #[test]
    fn discounted_utility_matches_geometric_sum() {
        // Freeze a trajectory whose stage utilities are all 1, delta = 0.5,
        // horizon 3: 1 + 0.5 + 0.25 = 1.75.
        let mut config = base_config();
        config.params.delta = 0.5;
        let mut trajectory = run_episode(&config, 0).unwrap();
        for step in &mut trajectory.steps {
            for u in &mut step.utilities {
                *u = UtilityBreakdown {
                    economic: 1.0,
                    security: 0.0,
                    costs: 0.0,
                    total: 1.0,
                };
            }
        }
        let total = trajectory
            .discounted_utility(PlayerId(0), &config.params)
            .unwrap();
        assert!((total - 1.75).abs() < 1e-12);
    }

    #[test]
    fn absent_player_is_an_error() {
        let config = base_config();
        let trajectory = run_episode(&config, 0).unwrap();
        assert!(matches!(
            trajectory.discounted_utility(PlayerId(99), &config.params),
            Err(PayoffError::PlayerAbsent(_))
        ));
    }

    #[test]
    fn ensemble_of_one_has_degenerate_cis() {
        let mut config = base_config();
        config.episodes = 1;
        let stats = run_ensemble(&config).unwrap();
        assert_eq!(stats.episodes, 1);
        assert_eq!(stats.defection_rate.ci95_low, stats.defection_rate.ci95_high);
        assert_eq!(stats.defection_rate.variance, 0.0);
    }

    #[test]
    fn aggregation_is_order_independent() {
        let mut config = base_config();
        config.episodes = 8;
        config.params.lambda_entry = 0.2;
        let mut summaries = run_episode_summaries(&config).unwrap();
        let forward = aggregate(&summaries, &config.params);
        summaries.reverse();
        summaries.sort_by_key(|s| s.episode);
        let reordered = aggregate(&summaries, &config.params);
        assert_eq!(forward, reordered);
    }

    #[test]
    fn ensemble_replays_identically() {
        let mut config = base_config();
        config.episodes = 4;
        let a = run_ensemble(&config).unwrap();
        let b = run_ensemble(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_master_seeds_agree_statistically() {
        // Two seeds estimate the same population quantities: their 95% CIs
        // for the first founder's discounted utility overlap.
        let mut config = base_config();
        config.params.horizon = 30;
        config.episodes = 200;
        let a = run_ensemble(&config).unwrap();
        config.seed = 999;
        let b = run_ensemble(&config).unwrap();
        let (sa, sb) = (
            a.founder_discounted_utility[0],
            b.founder_discounted_utility[0],
        );
        assert_ne!(sa.mean, sb.mean, "different seeds sample different runs");
        assert!(
            sa.ci95_low <= sb.ci95_high && sb.ci95_low <= sa.ci95_high,
            "CIs [{}, {}] and [{}, {}] should overlap",
            sa.ci95_low,
            sa.ci95_high,
            sb.ci95_low,
            sb.ci95_high
        );
        for stat in [a.defection_rate, a.entrants, a.detections] {
            assert!(stat.ci95_low <= stat.ci95_high);
        }
        assert!((0.0..=1.0).contains(&a.defection_rate.mean));
    }

    #[test]
    fn accounting_is_conserved_per_step() {
        let mut config = base_config();
        config.params.horizon = 10;
        config.initial_capability = 2.0;
        let trajectory = run_episode(&config, 3).unwrap();
        for step in &trajectory.steps {
            let components: f64 = step
                .utilities
                .iter()
                .map(|u| u.economic + u.security - u.costs)
                .sum();
            let totals: f64 = step.utilities.iter().map(|u| u.total).sum();
            assert!((components - totals).abs() < 1e-9);
        }
    }

    #[test]
    fn poisson_entry_matches_rate() {
        // Oracle: a Poisson(0.05) count summed over 1000 steps has mean 50
        // and variance 50 (dispersion ratio 1).
        let params = Parameters {
            lambda_entry: 0.05,
            ..Parameters::default()
        };
        let episodes = 600;
        let mut totals = Vec::with_capacity(episodes);
        for e in 0..episodes {
            let mut rng = derive_rng(99, &episode_label(e as u32, "entry"));
            let mut count = 0u32;
            for t in 0..1000 {
                count += spawn_entrants(&mut rng, &params, 0, t).len() as u32;
            }
            totals.push(f64::from(count));
        }
        let stat = SummaryStat::from_samples(&totals);
        assert!((stat.mean - 50.0).abs() / 50.0 < 0.05, "mean {}", stat.mean);
        let dispersion = stat.variance / stat.mean;
        assert!((dispersion - 1.0).abs() < 0.15, "dispersion {dispersion}");
    }

    #[test]
    fn spawned_entrants_get_sequential_ids_and_entry_time() {
        let params = Parameters {
            lambda_entry: 3.0,
            ..Parameters::default()
        };
        let mut rng = derive_rng(1, "entry");
        let entrants = spawn_entrants(&mut rng, &params, 4, 9);
        for (k, (player, cap)) in entrants.iter().enumerate() {
            assert_eq!(player.id, PlayerId(4 + k as u32));
            assert_eq!(player.entry_time, 9);
            assert!(*cap >= 0.0 && *cap <= params.t_bar);
        }
    }
}
