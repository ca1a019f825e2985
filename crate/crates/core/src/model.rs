//! Domain types: players, choices, and the public/private game state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::SanctionState;
use crate::params::Parameters;
use crate::rng::SimRng;

/// Stable player identity. Ids are assigned densely from zero (founders
/// first, entrants in arrival order) and double as indices into the
/// per-player vectors of [`GameState`]; players never exit.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PlayerId(pub u32);

impl PlayerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for PlayerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One developer's immutable traits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    /// Compute resources, abstract units, strictly positive.
    pub compute: f64,
    /// Technical expertise in [0, 1]; 1 is cutting-edge.
    pub expertise: f64,
    /// Risk tolerance in [0, 1].
    pub risk_tolerance: f64,
    /// Timestep of arrival; 0 for founders.
    pub entry_time: u32,
}

/// Development stance chosen each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Cooperate,
    Defect,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Cooperate => write!(f, "Cooperate"),
            Action::Defect => write!(f, "Defect"),
        }
    }
}

/// One player's simultaneous choice at a timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointChoice {
    pub action: Action,
    /// Fraction of own compute committed, in [0, 1].
    pub resource_fraction: f64,
    /// Information sharing indicator, 0 or 1.
    pub sharing: u8,
}

impl JointChoice {
    pub fn new(action: Action, resource_fraction: f64, sharing: u8) -> Self {
        debug_assert!((0.0..=1.0).contains(&resource_fraction));
        debug_assert!(sharing <= 1);
        JointChoice {
            action,
            resource_fraction,
            sharing,
        }
    }

    pub fn shares(&self) -> bool {
        self.sharing == 1
    }
}

/// Time-indexed state of the whole system. Per-player vectors are indexed
/// by [`PlayerId`]; all four stay the same length as `players`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    /// Timestep.
    pub t: u32,
    /// Technical capability per player, nonnegative.
    pub capabilities: Vec<f64>,
    /// Shared knowledge stock, nonnegative.
    pub knowledge: f64,
    /// Verification status per player, 0/1.
    pub verification: Vec<u8>,
    /// Collective security stock, nonnegative.
    pub security: f64,
    /// Sanction ladder position per player.
    pub sanctions: Vec<SanctionState>,
    /// Immutable traits of every player seen so far (all remain active).
    pub players: Vec<Player>,
}

impl GameState {
    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn player_ids(&self) -> impl Iterator<Item = PlayerId> + '_ {
        (0..self.players.len() as u32).map(PlayerId)
    }

    pub fn contains(&self, player: PlayerId) -> bool {
        player.index() < self.players.len()
    }

    /// Sum of rivals' capabilities, `sum_{j != i} T_j`.
    pub fn rival_capability(&self, player: PlayerId) -> f64 {
        let total: f64 = self.capabilities.iter().sum();
        total - self.capabilities[player.index()]
    }

    /// Append a newly arrived player with the given initial capability.
    pub fn admit(&mut self, player: Player, initial_capability: f64) {
        debug_assert_eq!(player.id.index(), self.players.len());
        self.capabilities.push(initial_capability);
        self.verification.push(0);
        self.sanctions.push(SanctionState::clear());
        self.players.push(player);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("need at least 2 players to start a game, got {0}")]
    TooFewPlayers(usize),
}

/// Sample a player's immutable traits. Draw order is fixed as part of the
/// reproducibility contract: compute (two uniforms via Box-Muller), then
/// expertise, then risk tolerance.
pub fn sample_player(rng: &mut SimRng, params: &Parameters, id: PlayerId, entry_time: u32) -> Player {
    let compute = rng.log_normal(params.mu_c, params.sigma_c);
    let expertise = rng.uniform01();
    let risk_tolerance = rng.uniform01();
    Player {
        id,
        compute,
        expertise,
        risk_tolerance,
        entry_time,
    }
}

/// Sample an entrant: traits as [`sample_player`], then the initial
/// capability drawn Uniform(0, t_bar) as the fourth draw.
pub fn sample_entrant(
    rng: &mut SimRng,
    params: &Parameters,
    id: PlayerId,
    entry_time: u32,
) -> (Player, f64) {
    let player = sample_player(rng, params, id, entry_time);
    let initial_capability = rng.uniform(0.0, params.t_bar);
    (player, initial_capability)
}

/// Build the initial state: `t = 0`, `K = S = 0`, nobody verified, no
/// sanctions, every founder at `initial_capability`.
pub fn init_state(
    players: Vec<Player>,
    initial_capability: f64,
) -> Result<GameState, ModelError> {
    if players.len() < 2 {
        return Err(ModelError::TooFewPlayers(players.len()));
    }
    let n = players.len();
    Ok(GameState {
        t: 0,
        capabilities: vec![initial_capability; n],
        knowledge: 0.0,
        verification: vec![0; n],
        security: 0.0,
        sanctions: vec![SanctionState::clear(); n],
        players,
    })
}
