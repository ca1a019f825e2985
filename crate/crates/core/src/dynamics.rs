//! One-step state transition: capability, knowledge, verification, security.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::EffectiveChoice;
use crate::model::{GameState, PlayerId};
use crate::params::Parameters;
use crate::rng::SimRng;

/// Players selected for a verification audit this step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditSelection {
    selected: Vec<bool>,
}

impl AuditSelection {
    /// Empty selection over `n` players.
    pub fn none(n: usize) -> Self {
        AuditSelection {
            selected: vec![false; n],
        }
    }

    pub fn from_ids(ids: &[PlayerId], n: usize) -> Self {
        let mut selected = vec![false; n];
        for id in ids {
            selected[id.index()] = true;
        }
        AuditSelection { selected }
    }

    pub fn contains(&self, player: PlayerId) -> bool {
        self.selected.get(player.index()).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.selected.iter().any(|&s| s)
    }

    /// Selected ids in increasing order (the order audit draws are consumed).
    pub fn ids(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.selected
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| PlayerId(i as u32))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("no choice supplied for player {0}")]
    MissingChoice(PlayerId),
    #[error("capability and verification maps cover different players")]
    KeyMismatch,
}

/// Which indices the security stock update reads.
///
/// `Eq4` uses the post-update capability and verification (the numbered
/// model equation); `Sec24` uses the pre-update values (the restated
/// security-commitments form). The two disagree in the source model, so both
/// are kept behind this switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SecurityTiming {
    #[default]
    Eq4,
    Sec24,
}

fn require_choices(state: &GameState, choices: &[EffectiveChoice]) -> Result<(), DynamicsError> {
    if choices.len() < state.player_count() {
        return Err(DynamicsError::MissingChoice(PlayerId(choices.len() as u32)));
    }
    Ok(())
}

/// Capability update: `T_i' = T_i + alpha * r_i * c_i * e_i * (1 + gamma * s_i)`.
pub fn step_capability(
    state: &GameState,
    choices: &[EffectiveChoice],
    params: &Parameters,
) -> Result<Vec<f64>, DynamicsError> {
    require_choices(state, choices)?;
    Ok(state
        .capabilities
        .iter()
        .zip(&state.players)
        .zip(choices)
        .map(|((&t_i, player), effective)| {
            let c = effective.choice;
            t_i + params.alpha
                * c.resource_fraction
                * player.compute
                * player.expertise
                * (1.0 + params.gamma * f64::from(c.sharing))
        })
        .collect())
}

/// Knowledge update: `K' = K + beta * sum_i s_i * T_i`, using pre-update
/// capabilities. Pool-revoked players contribute nothing.
pub fn step_knowledge(
    state: &GameState,
    choices: &[EffectiveChoice],
    params: &Parameters,
) -> Result<f64, DynamicsError> {
    require_choices(state, choices)?;
    let shared: f64 = state
        .capabilities
        .iter()
        .zip(choices)
        .filter(|(_, effective)| effective.shares_to_pool && effective.choice.shares())
        .map(|(&t_i, _)| t_i)
        .sum();
    Ok(state.knowledge + params.beta * shared)
}

/// Verification update: audited players verify with probability `p_audit`,
/// everyone else resets to 0. One draw is consumed per audited player in
/// increasing id order.
pub fn step_verification(
    state: &GameState,
    selection: &AuditSelection,
    rng: &mut SimRng,
    params: &Parameters,
) -> Vec<u8> {
    state
        .player_ids()
        .map(|id| {
            if selection.contains(id) {
                u8::from(rng.bernoulli(params.p_audit))
            } else {
                0
            }
        })
        .collect()
}

/// Security stock: `S = sum_i V_i * T_i` over the supplied snapshots.
pub fn step_security(
    capabilities: &[f64],
    verification: &[u8],
    _params: &Parameters,
) -> Result<f64, DynamicsError> {
    if capabilities.len() != verification.len() {
        return Err(DynamicsError::KeyMismatch);
    }
    Ok(capabilities
        .iter()
        .zip(verification)
        .map(|(&t_i, &v_i)| f64::from(v_i) * t_i)
        .sum())
}

/// Compose the four updates into the next state. Sanction statuses are
/// copied untouched; the engine advances them separately.
pub fn transition(
    state: &GameState,
    choices: &[EffectiveChoice],
    selection: &AuditSelection,
    rng: &mut SimRng,
    params: &Parameters,
    timing: SecurityTiming,
) -> Result<GameState, DynamicsError> {
    let capabilities = step_capability(state, choices, params)?;
    let knowledge = step_knowledge(state, choices, params)?;
    let verification = step_verification(state, selection, rng, params);
    let security = match timing {
        SecurityTiming::Eq4 => step_security(&capabilities, &verification, params)?,
        SecurityTiming::Sec24 => step_security(&state.capabilities, &state.verification, params)?,
    };
    Ok(GameState {
        t: state.t + 1,
        capabilities,
        knowledge,
        verification,
        security,
        sanctions: state.sanctions.clone(),
        players: state.players.clone(),
    })
}
