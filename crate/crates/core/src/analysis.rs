//! Equilibrium diagnostics: cooperative-equilibrium conditions, the
//! deterrence bound on defection probability, empirical deviation tests
//! with common random numbers, and the supermodularity of information
//! sharing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimulationConfig;
use crate::dynamics::{self, AuditSelection, SecurityTiming};
use crate::engine::{run_episode, EngineError, SummaryStat};
use crate::mechanisms::EffectiveChoice;
use crate::model::{Action, GameState, JointChoice, Player, PlayerId};
use crate::params::Parameters;
use crate::payoff::stage_utility;
use crate::rng::{derive_rng, SimRng};
use crate::strategy::{StrategyKind, StrategySpec};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("argument `{0}` must be nonnegative")]
    NegativeArgument(&'static str),
    #[error("deviant index {index} is not a founder (n_initial = {n_initial})")]
    InvalidDeviant { index: u32, n_initial: u32 },
    #[error(
        "difference CI width {width:.3e} exceeds the requested precision {requested:.3e}; \
         increase episodes"
    )]
    InsufficientEpisodes { width: f64, requested: f64 },
    #[error(
        "truncation tail bound {bound:.3e} exceeds the tolerance {tolerance:.3e}; \
         raise the horizon or lower delta"
    )]
    TailBoundExceeded { bound: f64, tolerance: f64 },
    #[error("unknown deviation strategy `{0}`")]
    UnknownDeviation(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One inequality with its signed margin (positive iff it holds, up to
/// boundary cases counted as satisfied). `margin` is `None` when the printed
/// form is not finite (e.g. `mu = 0` in condition 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub margin: Option<f64>,
}

fn condition(holds: bool, margin: f64) -> ConditionCheck {
    ConditionCheck {
        holds,
        margin: margin.is_finite().then_some(margin),
    }
}

/// Truth values and margins for the three cooperative-equilibrium
/// conditions, plus the folk-theorem threshold diagnostics.
///
/// The per-period proxies are `pi_cooperate = mu*beta`, `pi_defect =
/// lambda_econ*alpha`, `pi_punishment = xi`. The printed threshold
/// `delta_min = (pi_defect - pi_cooperate) / (pi_defect - pi_punishment)`
/// only orders discount factors when `pi_defect > pi_punishment`; otherwise
/// it is reported with `degenerate_threshold` set. `folk_satisfied` always
/// evaluates the underlying credibility inequality
/// `delta*(pi_defect - pi_punishment) >= pi_defect - pi_cooperate`, which
/// reduces to `delta >= delta_min` in the non-degenerate case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Network effects dominate: `beta > gamma + xi / mu`.
    pub cond1_network_effects: ConditionCheck,
    /// Verification is affordable: `theta <= mu * beta / delta`.
    pub cond2_verification_affordable: ConditionCheck,
    /// Punishments are credible: `xi >= lambda_econ * alpha / delta`.
    pub cond3_punishment_credible: ConditionCheck,
    pub pi_cooperate: f64,
    pub pi_defect: f64,
    pub pi_punishment: f64,
    pub folk_delta_min: Option<f64>,
    pub degenerate_threshold: bool,
    pub folk_satisfied: bool,
    pub delta: f64,
}

/// Evaluate the three conditions and the folk threshold. Pure arithmetic.
pub fn cooperation_conditions(params: &Parameters) -> ConditionReport {
    let cond1_margin = params.beta - (params.gamma + params.xi / params.mu);
    let cond1 = condition(
        params.beta > params.gamma + params.xi / params.mu,
        cond1_margin,
    );
    let theta_max = params.mu * params.beta / params.delta;
    let cond2 = condition(params.theta <= theta_max, theta_max - params.theta);
    let xi_min = params.lambda_econ * params.alpha / params.delta;
    let cond3 = condition(params.xi >= xi_min, params.xi - xi_min);

    let pi_cooperate = params.mu * params.beta;
    let pi_defect = params.lambda_econ * params.alpha;
    let pi_punishment = params.xi;
    let degenerate_threshold = pi_defect <= pi_punishment;
    let ratio = (pi_defect - pi_cooperate) / (pi_defect - pi_punishment);
    let folk_delta_min = ratio.is_finite().then_some(ratio);
    let folk_satisfied =
        params.delta * (pi_defect - pi_punishment) >= pi_defect - pi_cooperate;

    ConditionReport {
        cond1_network_effects: cond1,
        cond2_verification_affordable: cond2,
        cond3_punishment_credible: cond3,
        pi_cooperate,
        pi_defect,
        pi_punishment,
        folk_delta_min,
        degenerate_threshold,
        folk_satisfied,
        delta: params.delta,
    }
}

impl ConditionReport {
    pub fn all_conditions_hold(&self) -> bool {
        self.cond1_network_effects.holds
            && self.cond2_verification_affordable.holds
            && self.cond3_punishment_credible.holds
    }
}

/// Deterrence bound `epsilon = 1 / (1 + p * xi * tau)` on the defection
/// probability.
pub fn defection_bound(
    p_audit_freq: f64,
    xi: f64,
    tau: f64,
) -> Result<f64, AnalysisError> {
    if !(p_audit_freq >= 0.0) {
        return Err(AnalysisError::NegativeArgument("p_audit_freq"));
    }
    if !(xi >= 0.0) {
        return Err(AnalysisError::NegativeArgument("xi"));
    }
    if !(tau >= 0.0) {
        return Err(AnalysisError::NegativeArgument("tau"));
    }
    Ok(1.0 / (1.0 + p_audit_freq * xi * tau))
}

/// Combined mechanism snapshot for one config: the Theorem-1 style
/// condition report plus the deterrence bound under the configured
/// mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub conditions: ConditionReport,
    pub effective_audit_frequency: f64,
    pub effective_tau: u32,
    pub defection_epsilon: f64,
}

pub fn check_config(config: &SimulationConfig) -> Result<CheckReport, AnalysisError> {
    let frequency = config.mechanisms.effective_audit_frequency();
    let tau = config.mechanisms.effective_tau();
    Ok(CheckReport {
        conditions: cooperation_conditions(&config.params),
        effective_audit_frequency: frequency,
        effective_tau: tau,
        defection_epsilon: defection_bound(frequency, config.params.xi, f64::from(tau))?,
    })
}

// ---------------------------------------------------------------------------
// Deviation tests
// ---------------------------------------------------------------------------

/// Outcome of a unilateral-deviation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NoProfitableDeviation,
    ProfitableDeviation,
    Inconclusive,
}

/// Paired-ensemble comparison of the deviant's discounted utility under the
/// baseline profile vs. the deviation. Arms share all random streams
/// (common random numbers), so a null deviation yields exactly zero
/// difference and the paired CI isolates the strategic effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub deviant: u32,
    pub deviation_name: String,
    pub baseline_utility: SummaryStat,
    pub deviant_utility: SummaryStat,
    /// Per-episode paired difference (deviation minus baseline).
    pub difference: SummaryStat,
    pub verdict: Verdict,
    pub episodes: u32,
    pub max_tail_bound: f64,
}

/// Run the paired deviation experiment for one named deviation strategy.
pub fn deviation_test(
    config: &SimulationConfig,
    deviant: u32,
    deviation: &StrategySpec,
    deviation_name: &str,
) -> Result<DeviationReport, AnalysisError> {
    config.validate().map_err(EngineError::from)?;
    if deviant >= config.params.n_initial {
        return Err(AnalysisError::InvalidDeviant {
            index: deviant,
            n_initial: config.params.n_initial,
        });
    }
    let mut deviation_config = config.clone();
    deviation_config
        .player_strategies
        .insert(deviant, deviation.clone());

    let player = PlayerId(deviant);
    let per_episode: Vec<(f64, f64, f64)> = (0..config.episodes)
        .into_par_iter()
        .map(|episode| -> Result<(f64, f64, f64), AnalysisError> {
            let baseline = run_episode(config, episode)?;
            let deviated = run_episode(&deviation_config, episode)?;
            let u_base = baseline
                .discounted_utility(player, &config.params)
                .map_err(EngineError::from)?;
            let u_dev = deviated
                .discounted_utility(player, &config.params)
                .map_err(EngineError::from)?;
            Ok((u_base, u_dev, baseline.tail_bound.max(deviated.tail_bound)))
        })
        .collect::<Result<_, _>>()?;

    let baseline_samples: Vec<f64> = per_episode.iter().map(|r| r.0).collect();
    let deviant_samples: Vec<f64> = per_episode.iter().map(|r| r.1).collect();
    let differences: Vec<f64> = per_episode.iter().map(|r| r.1 - r.0).collect();
    let max_tail_bound = per_episode.iter().fold(0.0f64, |m, r| m.max(r.2));

    if max_tail_bound > config.tail_tolerance {
        return Err(AnalysisError::TailBoundExceeded {
            bound: max_tail_bound,
            tolerance: config.tail_tolerance,
        });
    }
    let difference = SummaryStat::from_samples(&differences);
    if let Some(requested) = config.target_ci_width {
        if difference.ci_width() > requested {
            return Err(AnalysisError::InsufficientEpisodes {
                width: difference.ci_width(),
                requested,
            });
        }
    }
    let verdict = if difference.ci95_low > 0.0 {
        Verdict::ProfitableDeviation
    } else if difference.ci95_high <= 0.0 {
        Verdict::NoProfitableDeviation
    } else {
        Verdict::Inconclusive
    };
    Ok(DeviationReport {
        deviant,
        deviation_name: deviation_name.to_string(),
        baseline_utility: SummaryStat::from_samples(&baseline_samples),
        deviant_utility: SummaryStat::from_samples(&deviant_samples),
        difference,
        verdict,
        episodes: config.episodes,
        max_tail_bound,
    })
}

/// The standard unilateral deviations tried against a cooperative baseline:
/// permanent defection, a single early defection, and defection with
/// sharing left on.
pub fn deviation_library() -> Vec<(String, StrategySpec)> {
    let mut defect_once = StrategySpec::of_kind(StrategyKind::DefectOnce);
    defect_once.params.insert("t".into(), 0.0);
    let mut defect_share = StrategySpec::of_kind(StrategyKind::AlwaysDefect);
    defect_share.params.insert("defect_s".into(), 1.0);
    vec![
        ("always-defect".into(), StrategySpec::of_kind(StrategyKind::AlwaysDefect)),
        ("defect-once-at-0".into(), defect_once),
        ("defect-share".into(), defect_share),
    ]
}

/// Resolve a deviation strategy by name: a library entry
/// (`defect-once-at-<t>` takes the step from the name) or a plain kind.
pub fn deviation_by_name(name: &str) -> Result<StrategySpec, AnalysisError> {
    if let Some(t) = name.strip_prefix("defect-once-at-") {
        let step: u32 = t
            .parse()
            .map_err(|_| AnalysisError::UnknownDeviation(name.to_string()))?;
        let mut spec = StrategySpec::of_kind(StrategyKind::DefectOnce);
        spec.params.insert("t".into(), f64::from(step));
        return Ok(spec);
    }
    match name {
        "always-defect" => Ok(StrategySpec::of_kind(StrategyKind::AlwaysDefect)),
        "defect-share" => {
            let mut spec = StrategySpec::of_kind(StrategyKind::AlwaysDefect);
            spec.params.insert("defect_s".into(), 1.0);
            Ok(spec)
        }
        "always-cooperate" => Ok(StrategySpec::of_kind(StrategyKind::AlwaysCooperate)),
        "grim-trigger" => Ok(StrategySpec::of_kind(StrategyKind::GrimTrigger)),
        "tit-for-tat" => Ok(StrategySpec::of_kind(StrategyKind::TitForTat)),
        "rational-defector" => Ok(StrategySpec::of_kind(StrategyKind::RationalDefector)),
        other => Err(AnalysisError::UnknownDeviation(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Supermodularity of information sharing
// ---------------------------------------------------------------------------

/// A sampled state for the increasing-differences check.
#[derive(Debug, Clone)]
pub struct SampledState {
    pub state: GameState,
    pub choices: Vec<JointChoice>,
    /// The player whose sharing incentive is measured.
    pub i: usize,
    /// The other player whose sharing is toggled.
    pub j: usize,
}

/// Draw a random state: capabilities and stocks uniform, random verification
/// bits, random resource fractions and sharing bits for everyone.
pub fn sample_check_state(rng: &mut SimRng, params: &Parameters, n_players: usize) -> SampledState {
    let players: Vec<Player> = (0..n_players)
        .map(|k| Player {
            id: PlayerId(k as u32),
            compute: rng.log_normal(params.mu_c, params.sigma_c),
            expertise: rng.uniform01(),
            risk_tolerance: rng.uniform01(),
            entry_time: 0,
        })
        .collect();
    let capabilities: Vec<f64> = (0..n_players).map(|_| rng.uniform(0.0, 10.0)).collect();
    let verification: Vec<u8> = (0..n_players).map(|_| u8::from(rng.bernoulli(0.5))).collect();
    let knowledge = rng.uniform(0.0, 10.0);
    let security = rng.uniform(0.0, 5.0);
    let choices: Vec<JointChoice> = (0..n_players)
        .map(|_| {
            JointChoice::new(
                Action::Cooperate,
                rng.uniform01(),
                u8::from(rng.bernoulli(0.5)),
            )
        })
        .collect();
    let i = rng.index(n_players);
    let j = (i + 1 + rng.index(n_players - 1)) % n_players;
    let state = GameState {
        t: 0,
        capabilities,
        knowledge,
        verification,
        security,
        sanctions: vec![crate::mechanisms::SanctionState::clear(); n_players],
        players,
    };
    SampledState {
        state,
        choices,
        i,
        j,
    }
}

/// Two-period payoff `W_i(s_i, s_j) = U_i(t) + delta * U_i(t+1)` with
/// player `i`'s sharing stance held for both periods, all other choices
/// fixed, and the next period's verification pinned to zero (any fixed
/// draw cancels from the increasing difference).
fn two_period_payoff(
    sample: &SampledState,
    s_i: u8,
    s_j: u8,
    params: &Parameters,
) -> f64 {
    let mut choices = sample.choices.clone();
    choices[sample.i].sharing = s_i;
    choices[sample.j].sharing = s_j;
    let effective: Vec<EffectiveChoice> = choices
        .iter()
        .map(|&c| EffectiveChoice::unsanctioned(c))
        .collect();
    let player = PlayerId(sample.i as u32);
    let now = stage_utility(&sample.state, player, &choices[sample.i], params)
        .expect("sampled player is in the sampled state");
    let selection = AuditSelection::none(sample.state.player_count());
    let mut silent_rng = derive_rng(0, "supermod/fixed-verification");
    let next_state = dynamics::transition(
        &sample.state,
        &effective,
        &selection,
        &mut silent_rng,
        params,
        SecurityTiming::Eq4,
    )
    .expect("choices cover all players");
    let next = stage_utility(&next_state, player, &choices[sample.i], params)
        .expect("sampled player persists");
    now.total + params.delta * next.total
}

/// Increasing difference of sharing:
/// `[W_i(1, s_j=1) - W_i(0, s_j=1)] - [W_i(1, s_j=0) - W_i(0, s_j=0)]`.
///
/// Expanding the knowledge and payoff updates term by term, every channel
/// cancels except the network bonus applied to `j`'s knowledge contribution,
/// leaving `delta * phi * beta * T_j(t)` exactly.
pub fn two_period_increasing_difference(sample: &SampledState, params: &Parameters) -> f64 {
    let gain_when_j_shares =
        two_period_payoff(sample, 1, 1, params) - two_period_payoff(sample, 0, 1, params);
    let gain_when_j_hoards =
        two_period_payoff(sample, 1, 0, params) - two_period_payoff(sample, 0, 0, params);
    gain_when_j_shares - gain_when_j_hoards
}

/// Summary of the sampled increasing-differences check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupermodularityReport {
    pub samples: u32,
    /// Fraction of samples where sharing incentives rise when the other
    /// player shares.
    pub fraction_nonnegative: f64,
    pub min_increasing_difference: f64,
    pub mean_increasing_difference: f64,
}

/// Sample `count` random states and measure the increasing difference in
/// each. Deterministic in `seed`.
pub fn supermodularity_check(
    params: &Parameters,
    n_players: usize,
    count: u32,
    seed: u64,
) -> SupermodularityReport {
    assert!(count >= 1, "sample count must be at least 1");
    assert!(n_players >= 2, "need at least two players");
    let mut rng = derive_rng(seed, "supermod/states");
    let mut nonnegative = 0u32;
    let mut min_diff = f64::INFINITY;
    let mut sum = 0.0;
    for _ in 0..count {
        let sample = sample_check_state(&mut rng, params, n_players);
        let diff = two_period_increasing_difference(&sample, params);
        if diff >= 0.0 {
            nonnegative += 1;
        }
        min_diff = min_diff.min(diff);
        sum += diff;
    }
    SupermodularityReport {
        samples: count,
        fraction_nonnegative: f64::from(nonnegative) / f64::from(count),
        min_increasing_difference: min_diff,
        mean_increasing_difference: sum / f64::from(count),
    }
}

// ---------------------------------------------------------------------------
// Empirical defection rate vs. the deterrence bound
// ---------------------------------------------------------------------------

/// Measured defection rate against the model-conditional bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectionRateReport {
    pub rate: SummaryStat,
    pub epsilon: f64,
    /// Whether the 95% upper confidence bound of the rate stays below
    /// epsilon.
    pub holds_at_95: bool,
    pub effective_audit_frequency: f64,
    pub xi: f64,
    pub effective_tau: u32,
    pub episodes: u32,
}

/// Run the configured ensemble and compare the player-step defection rate
/// with `defection_bound` under the configured mechanisms.
pub fn empirical_defection_rate(
    config: &SimulationConfig,
) -> Result<DefectionRateReport, AnalysisError> {
    let stats = crate::engine::run_ensemble(config)?;
    let frequency = config.mechanisms.effective_audit_frequency();
    let tau = config.mechanisms.effective_tau();
    let epsilon = defection_bound(frequency, config.params.xi, f64::from(tau))?;
    Ok(DefectionRateReport {
        holds_at_95: stats.defection_rate.ci95_high <= epsilon,
        rate: stats.defection_rate,
        epsilon,
        effective_audit_frequency: frequency,
        xi: config.params.xi,
        effective_tau: tau,
        episodes: stats.episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition1_margin_matches_hand_evaluation() {
        // beta - (gamma + xi/mu) = 1 - (0.2 + 0.3/1) = 0.5
        let params = Parameters {
            beta: 1.0,
            gamma: 0.2,
            xi: 0.3,
            mu: 1.0,
            ..Parameters::default()
        };
        let report = cooperation_conditions(&params);
        assert!(report.cond1_network_effects.holds);
        assert!((report.cond1_network_effects.margin.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn condition2_boundary_counts_as_satisfied() {
        let mut params = Parameters::default();
        params.theta = params.mu * params.beta / params.delta;
        let report = cooperation_conditions(&params);
        assert!(report.cond2_verification_affordable.holds);
        assert!(report.cond2_verification_affordable.margin.unwrap().abs() < 1e-12);
    }

    #[test]
    fn folk_threshold_matches_hand_evaluation() {
        // pi_defect = 1, pi_cooperate = 0.6, pi_punishment = 0.2
        // delta_min = (1 - 0.6) / (1 - 0.2) = 0.5
        let params = Parameters {
            lambda_econ: 1.0,
            alpha: 1.0,
            mu: 1.0,
            beta: 0.6,
            xi: 0.2,
            delta: 0.6,
            ..Parameters::default()
        };
        let report = cooperation_conditions(&params);
        assert!(!report.degenerate_threshold);
        assert!((report.folk_delta_min.unwrap() - 0.5).abs() < 1e-12);
        assert!(report.folk_satisfied, "delta 0.6 >= 0.5");
        let below = Parameters {
            delta: 0.4,
            ..params
        };
        assert!(!cooperation_conditions(&below).folk_satisfied);
    }

    #[test]
    fn degenerate_threshold_is_flagged_not_fatal() {
        // pi_defect = 0.01 <= pi_punishment = 0.05
        let report = cooperation_conditions(&Parameters::default());
        assert!(report.degenerate_threshold);
        assert!(report.folk_satisfied, "credibility inequality holds trivially");
    }

    #[test]
    fn zero_mu_disables_condition1_without_panicking() {
        let params = Parameters {
            mu: 0.0,
            xi: 0.1,
            ..Parameters::default()
        };
        let report = cooperation_conditions(&params);
        assert!(!report.cond1_network_effects.holds);
        assert!(report.cond1_network_effects.margin.is_none());
    }

    #[test]
    fn condition_report_is_pure() {
        let params = Parameters::default();
        assert_eq!(cooperation_conditions(&params), cooperation_conditions(&params));
    }

    #[test]
    fn defection_bound_matches_hand_values() {
        assert_eq!(defection_bound(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(defection_bound(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            defection_bound(-0.1, 1.0, 1.0),
            Err(AnalysisError::NegativeArgument("p_audit_freq"))
        ));
    }

    #[test]
    fn defection_bound_is_strictly_decreasing() {
        let base = defection_bound(0.5, 1.0, 2.0).unwrap();
        assert!(defection_bound(0.6, 1.0, 2.0).unwrap() < base);
        assert!(defection_bound(0.5, 1.2, 2.0).unwrap() < base);
        assert!(defection_bound(0.5, 1.0, 2.5).unwrap() < base);
    }

    fn small_config() -> SimulationConfig {
        let mut config = SimulationConfig::with_seed(5);
        config.params.horizon = 30;
        config.params.n_initial = 3;
        config.params.lambda_entry = 0.0;
        config.episodes = 40;
        // Short horizons leave a visible truncation tail; these tests are
        // not about the tail, so accept it.
        config.tail_tolerance = 1e3;
        config
    }

    #[test]
    fn null_deviation_has_exactly_zero_difference() {
        let config = small_config();
        let report = deviation_test(
            &config,
            0,
            &config.default_strategy.clone(),
            "null",
        )
        .unwrap();
        assert_eq!(report.difference.mean, 0.0);
        assert_eq!(report.difference.variance, 0.0);
        assert_eq!(report.verdict, Verdict::NoProfitableDeviation);
        assert_eq!(report.baseline_utility, report.deviant_utility);
    }

    #[test]
    fn invalid_deviant_is_rejected() {
        let config = small_config();
        let err = deviation_test(
            &config,
            7,
            &StrategySpec::of_kind(StrategyKind::AlwaysDefect),
            "always-defect",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidDeviant { index: 7, .. }));
    }

    #[test]
    fn tail_bound_violation_is_an_error() {
        let mut config = small_config();
        config.params.horizon = 5;
        config.params.delta = 0.99;
        config.initial_capability = 10.0;
        config.tail_tolerance = 1e-9;
        let err = deviation_test(
            &config,
            0,
            &StrategySpec::of_kind(StrategyKind::AlwaysDefect),
            "always-defect",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::TailBoundExceeded { .. }));
    }

    #[test]
    fn requested_precision_can_fail() {
        let mut config = small_config();
        config.episodes = 3;
        config.target_ci_width = Some(1e-12);
        let err = deviation_test(
            &config,
            0,
            &StrategySpec::of_kind(StrategyKind::AlwaysDefect),
            "always-defect",
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::InsufficientEpisodes { .. }));
    }

    #[test]
    fn deviation_names_resolve() {
        assert_eq!(
            deviation_by_name("always-defect").unwrap().kind,
            StrategyKind::AlwaysDefect
        );
        let once = deviation_by_name("defect-once-at-7").unwrap();
        assert_eq!(once.kind, StrategyKind::DefectOnce);
        assert_eq!(once.param("t", 0.0), 7.0);
        assert!(deviation_by_name("defect-sometimes").is_err());
    }

    #[test]
    fn library_has_the_three_standard_deviations() {
        let names: Vec<String> = deviation_library().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            vec!["always-defect", "defect-once-at-0", "defect-share"]
        );
    }

    #[test]
    fn increasing_difference_matches_closed_form() {
        let params = Parameters::default();
        let mut rng = derive_rng(21, "supermod/test");
        for _ in 0..200 {
            let sample = sample_check_state(&mut rng, &params, 4);
            let numeric = two_period_increasing_difference(&sample, &params);
            let closed_form =
                params.delta * params.phi * params.beta * sample.state.capabilities[sample.j];
            let scale = closed_form.abs().max(1e-12);
            assert!(
                (numeric - closed_form).abs() / scale < 1e-9,
                "numeric {numeric} vs closed form {closed_form}"
            );
        }
    }

    #[test]
    fn zero_phi_kills_the_network_channel() {
        let params = Parameters {
            phi: 0.0,
            ..Parameters::default()
        };
        let mut rng = derive_rng(22, "supermod/test");
        let sample = sample_check_state(&mut rng, &params, 3);
        let diff = two_period_increasing_difference(&sample, &params);
        assert!(diff.abs() < 1e-12, "diff {diff}");
    }

    #[test]
    fn zero_capability_kills_the_knowledge_flow() {
        let params = Parameters::default();
        let mut rng = derive_rng(23, "supermod/test");
        let mut sample = sample_check_state(&mut rng, &params, 3);
        sample.state.capabilities = vec![0.0; 3];
        let diff = two_period_increasing_difference(&sample, &params);
        assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn supermodularity_report_is_fully_nonnegative() {
        let report = supermodularity_check(&Parameters::default(), 4, 300, 77);
        assert_eq!(report.fraction_nonnegative, 1.0);
        assert!(report.min_increasing_difference >= 0.0);
    }

    #[test]
    fn cooperative_population_trivially_meets_any_bound() {
        let mut config = small_config();
        config.default_strategy = StrategySpec::of_kind(StrategyKind::AlwaysCooperate);
        config.episodes = 10;
        let report = empirical_defection_rate(&config).unwrap();
        assert_eq!(report.rate.mean, 0.0);
        assert!(report.holds_at_95);
    }

    #[test]
    fn mechanisms_off_give_trivial_bound() {
        let mut config = small_config();
        config.mechanisms.base_audit_frequency = 0.0;
        config.mechanisms.staged_deployment_enabled = false;
        config.default_strategy = StrategySpec::of_kind(StrategyKind::RationalDefector);
        config.episodes = 10;
        let report = empirical_defection_rate(&config).unwrap();
        assert_eq!(report.epsilon, 1.0);
        assert!(report.holds_at_95);
    }
}
