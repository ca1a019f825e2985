//! Governance mechanisms: pre-registration commitments, staged deployment,
//! automated graduated sanctions, and membership tiers.
//!
//! Mechanisms act on the simulation through three levers: the effective
//! audit frequency (pre-registration makes audits more frequent), the
//! milestone period `tau` (staged deployment synchronizes progress), and the
//! sanction ladder (automated deterrence with a redemption path).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use thiserror::Error;

use crate::model::{GameState, JointChoice, PlayerId};

/// Mechanism switches and their tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechanismConfig {
    /// Pre-registration of development plans (raises audit frequency).
    pub preregistration_enabled: bool,
    /// Fraction of players audited per step before mechanism boosts.
    pub base_audit_frequency: f64,
    /// Additive audit-frequency boost while pre-registration is on.
    pub prereg_audit_boost: f64,
    /// Staged deployment around agreed milestones.
    pub staged_deployment_enabled: bool,
    /// Timesteps until the next agreed capability milestone.
    pub tau: u32,
    /// Steps between a verified violation and the sanction taking effect
    /// (1 models "within 72 hours" at one step per review cycle).
    pub sanction_delay: u32,
    /// Whether violations move players down the sanction ladder at all.
    pub sanctions_enabled: bool,
    /// Consecutive verified-compliant steps required per de-escalation.
    pub redemption_steps: u32,
    /// Resource-fraction cap applied to excluded players.
    pub r_cap: f64,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            preregistration_enabled: false,
            base_audit_frequency: 0.5,
            prereg_audit_boost: 0.25,
            staged_deployment_enabled: false,
            tau: 4,
            sanction_delay: 1,
            sanctions_enabled: true,
            redemption_steps: 5,
            r_cap: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("mechanism field `{field}` out of range: {requirement}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("pre-registration plan must not be empty")]
    EmptyPlan,
    #[error("milestone period tau must be at least 1")]
    InvalidTau,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<(), MechanismError> {
        let fail = |field, requirement| Err(MechanismError::OutOfRange { field, requirement });
        if !(0.0..=1.0).contains(&self.base_audit_frequency) {
            return fail("base_audit_frequency", "must lie in [0, 1]");
        }
        if !(self.prereg_audit_boost >= 0.0 && self.prereg_audit_boost.is_finite()) {
            return fail("prereg_audit_boost", "must be nonnegative and finite");
        }
        if self.tau < 1 {
            return fail("tau", "must be at least 1");
        }
        if self.sanction_delay < 1 {
            return fail("sanction_delay", "must be at least 1");
        }
        if self.redemption_steps < 1 {
            return fail("redemption_steps", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.r_cap) {
            return fail("r_cap", "must lie in [0, 1]");
        }
        Ok(())
    }

    /// Audit frequency after mechanism boosts, clamped to [0, 1].
    pub fn effective_audit_frequency(&self) -> f64 {
        let boost = if self.preregistration_enabled {
            self.prereg_audit_boost
        } else {
            0.0
        };
        (self.base_audit_frequency + boost).clamp(0.0, 1.0)
    }

    /// Milestone period as seen by the deterrence bound: `tau` while staged
    /// deployment is active, otherwise 1 (no synchronization leverage).
    pub fn effective_tau(&self) -> u32 {
        if self.staged_deployment_enabled {
            self.tau
        } else {
            1
        }
    }
}

/// Milestone timesteps `tau, 2*tau, ... <= horizon`.
pub fn milestone_schedule(tau: u32, horizon: u32) -> Result<Vec<u32>, MechanismError> {
    if tau < 1 {
        return Err(MechanismError::InvalidTau);
    }
    Ok((1..=horizon / tau).map(|k| k * tau).collect())
}

// ---------------------------------------------------------------------------
// Graduated sanctions
// ---------------------------------------------------------------------------

/// Rung on the sanction ladder.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum SanctionLevel {
    None,
    Warning,
    Revoked,
    Excluded,
}

impl SanctionLevel {
    fn escalated(self) -> SanctionLevel {
        match self {
            SanctionLevel::None => SanctionLevel::Warning,
            SanctionLevel::Warning => SanctionLevel::Revoked,
            SanctionLevel::Revoked | SanctionLevel::Excluded => SanctionLevel::Excluded,
        }
    }

    fn deescalated(self) -> SanctionLevel {
        match self {
            SanctionLevel::None | SanctionLevel::Warning => SanctionLevel::None,
            SanctionLevel::Revoked => SanctionLevel::Warning,
            SanctionLevel::Excluded => SanctionLevel::Revoked,
        }
    }

    /// Revoked and Excluded players lose access to the shared pool.
    pub fn pool_revoked(self) -> bool {
        matches!(self, SanctionLevel::Revoked | SanctionLevel::Excluded)
    }
}

impl std::fmt::Display for SanctionLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SanctionLevel::None => write!(f, "None"),
            SanctionLevel::Warning => write!(f, "Warning"),
            SanctionLevel::Revoked => write!(f, "Revoked"),
            SanctionLevel::Excluded => write!(f, "Excluded"),
        }
    }
}

/// One player's position on the ladder plus the bookkeeping that drives it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanctionState {
    pub level: SanctionLevel,
    /// Timestep of the last level change.
    pub since: u32,
    /// Consecutive verified-compliant steps since the last violation.
    pub redemption_counter: u32,
    /// Violation timesteps whose escalation has not yet activated.
    pub pending: VecDeque<u32>,
}

impl SanctionState {
    pub fn clear() -> Self {
        SanctionState {
            level: SanctionLevel::None,
            since: 0,
            redemption_counter: 0,
            pending: VecDeque::new(),
        }
    }
}

/// Advance one player's sanction state at the end of step `t`.
///
/// A violation queues an escalation that activates `sanction_delay` steps
/// after the violating step (delay 1 = in force from the next step, the
/// swift-sanction default). Verified compliance feeds the redemption
/// counter; `redemption_steps` consecutive compliant steps walk the player
/// back down one rung. Steps that are neither (no audit, or audit without a
/// verdict) leave the state untouched.
pub fn advance_sanction(
    state: &SanctionState,
    violated: bool,
    verified_compliant: bool,
    t: u32,
    config: &MechanismConfig,
) -> SanctionState {
    debug_assert!(!(violated && verified_compliant));
    let mut next = state.clone();
    if !config.sanctions_enabled {
        return next;
    }
    if violated {
        next.redemption_counter = 0;
        next.pending.push_back(t);
    }
    while let Some(&violation_t) = next.pending.front() {
        if t + 1 >= violation_t + config.sanction_delay {
            next.pending.pop_front();
            let escalated = next.level.escalated();
            if escalated != next.level {
                next.level = escalated;
                next.since = t;
            }
        } else {
            break;
        }
    }
    if verified_compliant && !violated {
        next.redemption_counter += 1;
        if next.redemption_counter >= config.redemption_steps && next.level != SanctionLevel::None
        {
            next.level = next.level.deescalated();
            next.since = t;
            next.redemption_counter = 0;
        }
    }
    next
}

/// How a player's chosen [`JointChoice`] actually enters the dynamics after
/// sanctions. The chosen sharing bit still earns the transparency bonus in
/// the capability equation, but pool-revoked players neither feed the shared
/// knowledge stock nor draw economic benefit from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChoice {
    pub choice: JointChoice,
    /// Whether the player's sharing reaches the knowledge pool.
    pub shares_to_pool: bool,
    /// Whether the player still draws `mu*K` and `phi*s*K` benefits.
    pub pool_access: bool,
}

impl EffectiveChoice {
    /// A choice untouched by sanctions.
    pub fn unsanctioned(choice: JointChoice) -> Self {
        EffectiveChoice {
            choice,
            shares_to_pool: choice.shares(),
            pool_access: true,
        }
    }
}

/// Apply current sanction statuses to the step's raw choices.
pub fn apply_sanctions(
    state: &GameState,
    choices: &[JointChoice],
    config: &MechanismConfig,
) -> Vec<EffectiveChoice> {
    choices
        .iter()
        .enumerate()
        .map(|(i, &choice)| {
            let level = state.sanctions[i].level;
            let mut effective = EffectiveChoice::unsanctioned(choice);
            if level.pool_revoked() {
                effective.shares_to_pool = false;
                effective.pool_access = false;
            }
            if level == SanctionLevel::Excluded {
                effective.choice.resource_fraction =
                    effective.choice.resource_fraction.min(config.r_cap);
            }
            effective
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Pre-registration commitments
// ---------------------------------------------------------------------------

/// A cryptographic commitment to a development plan.
///
/// The digest is SHA-256 over the canonical plan encoding (for JSON plans:
/// UTF-8 bytes of the compact serialization with lexicographically sorted
/// keys). The plan itself stays private until reveal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub player: PlayerId,
    pub t_committed: u32,
    /// SHA-256 digest of the committed plan bytes.
    pub digest: [u8; 32],
    /// Plan bytes, present only after a reveal.
    pub revealed: Option<Vec<u8>>,
}

/// Commit to a plan encoding without storing it.
pub fn commit_preregistration(
    plan: &[u8],
    player: PlayerId,
    t: u32,
) -> Result<Commitment, MechanismError> {
    if plan.is_empty() {
        return Err(MechanismError::EmptyPlan);
    }
    Ok(Commitment {
        player,
        t_committed: t,
        digest: Sha256::digest(plan).into(),
        revealed: None,
    })
}

/// Check a revealed plan against the commitment digest.
pub fn verify_commitment(commitment: &Commitment, revealed: &[u8]) -> bool {
    let digest: [u8; 32] = Sha256::digest(revealed).into();
    digest == commitment.digest
}

/// Canonical encoding for JSON plans: compact, keys sorted.
pub fn canonical_plan_bytes(plan: &serde_json::Value) -> Vec<u8> {
    // serde_json's default map representation is key-ordered, so compact
    // serialization is already canonical.
    serde_json::to_vec(plan).expect("JSON value serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Membership tiers
// ---------------------------------------------------------------------------

/// Consortium membership tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipTier {
    Core,
    Associate,
    Observer,
}

/// Two-factor thresholds, as fractions of the current population maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TierThresholds {
    pub compute_fraction_min: f64,
    pub capability_fraction_min: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            compute_fraction_min: 0.20,
            capability_fraction_min: 0.80,
        }
    }
}

/// Classify a player against the current maxima: Core needs both factors,
/// Associate exactly one, Observer neither.
pub fn classify_membership(
    compute: f64,
    capability: f64,
    max_compute: f64,
    max_capability: f64,
    thresholds: &TierThresholds,
) -> MembershipTier {
    let compute_ok = compute >= thresholds.compute_fraction_min * max_compute;
    let capability_ok = capability >= thresholds.capability_fraction_min * max_capability;
    match (compute_ok, capability_ok) {
        (true, true) => MembershipTier::Core,
        (true, false) | (false, true) => MembershipTier::Associate,
        (false, false) => MembershipTier::Observer,
    }
}
