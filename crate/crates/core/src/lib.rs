//! Deterministic multi-agent simulator of a repeated AGI-development game.
//!
//! Developers (nation-states and labs) repeatedly choose whether to cooperate
//! or defect, how much compute to commit, and whether to share information.
//! Capability, shared knowledge, verification status, and collective security
//! evolve step by step; governance mechanisms (pre-registration, staged
//! deployment, automated graduated sanctions, membership tiers) reshape the
//! incentives. The [`analysis`] module checks the cooperative-equilibrium
//! conditions empirically: deviation tests with common random numbers,
//! defection-probability bounds, and supermodularity of information sharing.
//!
//! Every run is reproducible: all randomness flows from a master seed through
//! named ChaCha12 streams (see [`rng`] and `docs/rng.md` for test vectors).

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod engine;
pub mod mechanisms;
pub mod model;
pub mod output;
pub mod params;
pub mod payoff;
pub mod rng;
pub mod strategy;

pub use config::{Manifest, SimulationConfig};
pub use engine::{EnsembleStats, SummaryStat, Trajectory};
pub use model::{Action, GameState, JointChoice, Player, PlayerId};
pub use params::Parameters;
