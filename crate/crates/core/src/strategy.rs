//! Strategies over public history, audit scheduling, and defection detection.
//!
//! Public history carries the commonly observed knowledge and security
//! stocks plus the deterrence system's published violation announcements;
//! trigger strategies condition on nothing else. Detection never flags a
//! cooperator: audits have a miss rate but no false positives.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dynamics::AuditSelection;
use crate::model::{Action, JointChoice, Player, PlayerId};
use crate::params::Parameters;
use crate::rng::SimRng;

/// One public-history entry: the observable stocks at time `t` and the
/// violations announced when this entry was published (detections from the
/// step that produced these stocks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: u32,
    pub knowledge: f64,
    pub security: f64,
    /// Pairs `(player, t_detected)` announced with this entry.
    pub violations: Vec<(PlayerId, u32)>,
}

/// Append-only public history `h^t`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PublicHistory {
    entries: Vec<HistoryEntry>,
}

impl PublicHistory {
    /// History at the start of a run: one entry for `t = 0`, no violations.
    pub fn genesis(knowledge: f64, security: f64) -> Self {
        PublicHistory {
            entries: vec![HistoryEntry {
                t: 0,
                knowledge,
                security,
                violations: Vec::new(),
            }],
        }
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    /// Time of the newest entry.
    pub fn current_t(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.t)
    }

    pub fn any_violation(&self) -> bool {
        self.entries.iter().any(|e| !e.violations.is_empty())
    }

    /// Newest entry time that carried a violation announcement, if any.
    pub fn last_violation_entry(&self) -> Option<u32> {
        self.entries
            .iter()
            .rev()
            .find(|e| !e.violations.is_empty())
            .map(|e| e.t)
    }

    /// Whether the newest entry announced any violation.
    pub fn violation_in_last_entry(&self) -> bool {
        self.entries
            .last()
            .is_some_and(|e| !e.violations.is_empty())
    }

    /// In-place append used by the engine's step loop.
    pub fn append(&mut self, t: u32, knowledge: f64, security: f64, violations: Vec<(PlayerId, u32)>) {
        debug_assert_eq!(t, self.current_t() + 1);
        self.entries.push(HistoryEntry {
            t,
            knowledge,
            security,
            violations,
        });
    }
}

/// Pure extension: returns a new history with one more entry; never rewrites
/// past entries.
pub fn update_history(
    history: &PublicHistory,
    knowledge: f64,
    security: f64,
    detections: &[DetectionOutcome],
    t_detected: u32,
) -> PublicHistory {
    let mut next = history.clone();
    let violations: Vec<(PlayerId, u32)> = detections
        .iter()
        .filter(|d| d.flagged)
        .map(|d| (d.player, t_detected))
        .collect();
    next.append(history.current_t() + 1, knowledge, security, violations);
    next
}

/// Available strategy kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Cooperate and share until any violation is announced, then punish.
    GrimTrigger,
    AlwaysCooperate,
    AlwaysDefect,
    /// Cooperate iff the newest history entry announced no violation.
    TitForTat,
    /// Myopic threshold agent: defects when the expected one-step capability
    /// gain outweighs the expected deterrence penalty.
    RationalDefector,
    /// Defect exactly once, at the step given by the `t` parameter.
    DefectOnce,
}

/// A strategy plus its tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    /// Resource fraction while cooperating.
    pub r_cooperate: f64,
    /// Resource fraction while defecting.
    pub r_defect: f64,
    /// Kind-specific knobs:
    /// `punishment_length` (GrimTrigger; 0 = permanent),
    /// `defect_s` (defect with sharing still on, for ablations),
    /// `t` (DefectOnce step), `rho_weight` (RationalDefector penalty scale).
    pub params: BTreeMap<String, f64>,
}

impl Default for StrategySpec {
    fn default() -> Self {
        StrategySpec {
            kind: StrategyKind::GrimTrigger,
            r_cooperate: 0.5,
            r_defect: 1.0,
            params: BTreeMap::new(),
        }
    }
}

impl StrategySpec {
    pub fn of_kind(kind: StrategyKind) -> Self {
        StrategySpec {
            kind,
            ..StrategySpec::default()
        }
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<(), crate::params::OutOfRange> {
        if !(0.0..=1.0).contains(&self.r_cooperate) {
            return Err(crate::params::OutOfRange {
                field: "r_cooperate",
                requirement: "must lie in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.r_defect) {
            return Err(crate::params::OutOfRange {
                field: "r_defect",
                requirement: "must lie in [0, 1]",
            });
        }
        Ok(())
    }

    fn cooperate_choice(&self) -> JointChoice {
        JointChoice::new(Action::Cooperate, self.r_cooperate, 1)
    }

    fn defect_choice(&self) -> JointChoice {
        let s = if self.param("defect_s", 0.0) >= 1.0 { 1 } else { 0 };
        JointChoice::new(Action::Defect, self.r_defect, s)
    }
}

/// Mechanism-derived quantities strategies may condition on.
#[derive(Debug, Clone, Copy)]
pub struct StrategyContext<'a> {
    pub params: &'a Parameters,
    /// Audit frequency after mechanism boosts.
    pub effective_audit_frequency: f64,
    /// Milestone period seen by the deterrence calculus.
    pub tau: f64,
}

/// Choose this step's action from the public history.
pub fn decide(
    spec: &StrategySpec,
    history: &PublicHistory,
    player: &Player,
    ctx: &StrategyContext<'_>,
    _rng: &mut SimRng,
) -> JointChoice {
    match spec.kind {
        StrategyKind::AlwaysCooperate => spec.cooperate_choice(),
        StrategyKind::AlwaysDefect => spec.defect_choice(),
        StrategyKind::GrimTrigger => {
            let punishment_length = spec.param("punishment_length", 0.0) as u32;
            let triggered = if punishment_length == 0 {
                history.any_violation()
            } else {
                history
                    .last_violation_entry()
                    .is_some_and(|t| history.current_t() < t + punishment_length)
            };
            if triggered {
                spec.defect_choice()
            } else {
                spec.cooperate_choice()
            }
        }
        StrategyKind::TitForTat => {
            if history.violation_in_last_entry() {
                spec.defect_choice()
            } else {
                spec.cooperate_choice()
            }
        }
        StrategyKind::DefectOnce => {
            if history.current_t() == spec.param("t", 0.0) as u32 {
                spec.defect_choice()
            } else {
                spec.cooperate_choice()
            }
        }
        StrategyKind::RationalDefector => {
            let p = ctx.params;
            let expected_gain = (1.0 - player.risk_tolerance)
                * p.lambda_econ
                * p.alpha
                * spec.r_defect
                * player.compute
                * player.expertise;
            let p_flag = ctx.effective_audit_frequency * p.p_detection;
            let expected_penalty = p_flag * p.xi * ctx.tau * spec.param("rho_weight", 1.0);
            if expected_gain > expected_penalty {
                spec.defect_choice()
            } else {
                spec.cooperate_choice()
            }
        }
    }
}

/// Uniform sample without replacement of `ceil(frequency * N)` players.
pub fn select_audit_targets(
    rng: &mut SimRng,
    active: &[PlayerId],
    audit_frequency: f64,
) -> AuditSelection {
    debug_assert!((0.0..=1.0).contains(&audit_frequency));
    let n = active.len();
    let k = (audit_frequency * n as f64).ceil() as usize;
    let chosen = rng.sample_without_replacement(active, k.min(n));
    AuditSelection::from_ids(&chosen, n)
}

/// Result of auditing (or not auditing) one player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub player: PlayerId,
    pub audited: bool,
    pub truly_defecting: bool,
    pub flagged: bool,
}

/// Audit a player's action. A true defector is flagged with probability
/// `p_detection`; cooperators are never flagged. When audited, exactly one
/// draw is consumed whatever the action, so paired runs that differ only in
/// chosen actions keep their detection streams aligned.
pub fn detect(
    player: PlayerId,
    choice: &JointChoice,
    audited: bool,
    rng: &mut SimRng,
    params: &Parameters,
) -> DetectionOutcome {
    let truly_defecting = choice.action == Action::Defect;
    let flagged = if audited {
        let hit = rng.bernoulli(params.p_detection);
        truly_defecting && hit
    } else {
        false
    };
    DetectionOutcome {
        player,
        audited,
        truly_defecting,
        flagged,
    }
}
