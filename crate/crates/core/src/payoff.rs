//! Stage utility and finite-horizon discounted utility.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Trajectory;
use crate::model::{GameState, JointChoice, PlayerId};
use crate::params::Parameters;

/// Stage utility split into its three braces.
///
/// `economic = lambda*T_i + mu*K + phi*s_i*K` (the knowledge terms are zeroed
/// for pool-revoked players), `security = sigma*S - xi*sum_{j!=i} T_j`,
/// `costs = eta*r_i^2 + theta*(1 - V_i)`, and `total` is their signed sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub economic: f64,
    pub security: f64,
    pub costs: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayoffError {
    #[error("player {0} is not part of the state")]
    UnknownPlayer(PlayerId),
    #[error("player {0} never appears in the trajectory")]
    PlayerAbsent(PlayerId),
}

/// Evaluate the stage utility of `player` in the time-`t` state, under the
/// choice it made at `t`. Sanction status is read from the state: revoked or
/// excluded players draw no benefit from the shared knowledge stock.
pub fn stage_utility(
    state: &GameState,
    player: PlayerId,
    choice: &JointChoice,
    params: &Parameters,
) -> Result<UtilityBreakdown, PayoffError> {
    if !state.contains(player) {
        return Err(PayoffError::UnknownPlayer(player));
    }
    let i = player.index();
    let pool_access = !state.sanctions[i].level.pool_revoked();
    let knowledge_benefit = if pool_access {
        params.mu * state.knowledge
            + params.phi * f64::from(choice.sharing) * state.knowledge
    } else {
        0.0
    };
    let economic = params.lambda_econ * state.capabilities[i] + knowledge_benefit;
    let security = params.sigma * state.security - params.xi * state.rival_capability(player);
    let costs = params.eta * choice.resource_fraction * choice.resource_fraction
        + params.theta * (1.0 - f64::from(state.verification[i]));
    Ok(UtilityBreakdown {
        economic,
        security,
        costs,
        total: economic + security - costs,
    })
}

/// Discounted utility `sum_t delta^t * U_i(t)` over the steps where the
/// player is active. The infinite tail beyond the horizon is dropped; the
/// trajectory's recorded tail bound quantifies the truncation error.
pub fn discounted_utility(
    trajectory: &Trajectory,
    player: PlayerId,
    params: &Parameters,
) -> Result<f64, PayoffError> {
    let mut present = false;
    let mut total = 0.0;
    let mut discount = 1.0;
    for step in &trajectory.steps {
        if let Some(u) = step.utilities.get(player.index()) {
            total += discount * u.total;
            present = true;
        }
        discount *= params.delta;
    }
    if !present {
        return Err(PayoffError::PlayerAbsent(player));
    }
    Ok(total)
}

/// Truncation-error bound `delta^horizon * u_max / (1 - delta)` for a run
/// whose largest observed stage-utility magnitude is `u_max`.
pub fn tail_bound(params: &Parameters, u_max: f64) -> f64 {
    params.delta.powi(params.horizon as i32) * u_max / (1.0 - params.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::SanctionLevel;
    use crate::model::{init_state, Action, Player};

    fn two_player_state() -> GameState {
        let players = (0..2)
            .map(|i| Player {
                id: PlayerId(i),
                compute: 1.0,
                expertise: 0.5,
                risk_tolerance: 0.5,
                entry_time: 0,
            })
            .collect();
        init_state(players, 0.0).unwrap()
    }

    #[test]
    fn zero_state_costs_only_theta() {
        let params = Parameters {
            theta: 0.7,
            ..Parameters::default()
        };
        let state = two_player_state();
        let choice = JointChoice::new(Action::Cooperate, 0.0, 0);
        let u = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        assert_eq!(u.economic, 0.0);
        assert_eq!(u.security, 0.0);
        assert_eq!(u.costs, 0.7);
        assert_eq!(u.total, -0.7);
    }

    #[test]
    fn stage_utility_matches_hand_evaluation() {
        // U = (2 + 3 + 0.3) + (4 - 3) - (0.5 + 0) = 5.8
        let params = Parameters {
            lambda_econ: 1.0,
            mu: 1.0,
            phi: 0.1,
            sigma: 1.0,
            xi: 0.5,
            eta: 2.0,
            theta: 1.0,
            ..Parameters::default()
        };
        let mut state = two_player_state();
        state.capabilities = vec![2.0, 6.0];
        state.knowledge = 3.0;
        state.security = 4.0;
        state.verification = vec![1, 0];
        let choice = JointChoice::new(Action::Cooperate, 0.5, 1);
        let u = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        assert!((u.economic - 5.3).abs() < 1e-12);
        assert!((u.security - 1.0).abs() < 1e-12);
        assert!((u.costs - 0.5).abs() < 1e-12);
        assert!((u.total - 5.8).abs() < 1e-12);
    }

    #[test]
    fn sharing_premium_is_phi_k() {
        let params = Parameters {
            phi: 0.25,
            ..Parameters::default()
        };
        let mut state = two_player_state();
        state.knowledge = 8.0;
        let shared = stage_utility(
            &state,
            PlayerId(0),
            &JointChoice::new(Action::Cooperate, 0.4, 1),
            &params,
        )
        .unwrap();
        let secret = stage_utility(
            &state,
            PlayerId(0),
            &JointChoice::new(Action::Cooperate, 0.4, 0),
            &params,
        )
        .unwrap();
        assert!((shared.total - secret.total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn revoked_player_loses_knowledge_benefit() {
        let params = Parameters::default();
        let mut state = two_player_state();
        state.knowledge = 5.0;
        let choice = JointChoice::new(Action::Cooperate, 0.5, 1);
        let clean = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        state.sanctions[0].level = SanctionLevel::Revoked;
        let revoked = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        let expected_loss = (params.mu + params.phi) * 5.0;
        assert!((clean.total - revoked.total - expected_loss).abs() < 1e-12);
        assert!(revoked.total < clean.total);
    }

    #[test]
    fn unknown_player_is_rejected() {
        let state = two_player_state();
        let choice = JointChoice::new(Action::Cooperate, 0.5, 1);
        assert_eq!(
            stage_utility(&state, PlayerId(9), &choice, &Parameters::default()).unwrap_err(),
            PayoffError::UnknownPlayer(PlayerId(9))
        );
    }

    #[test]
    fn rival_capability_strictly_decreases_utility() {
        let params = Parameters {
            xi: 0.5,
            ..Parameters::default()
        };
        let mut state = two_player_state();
        let choice = JointChoice::new(Action::Cooperate, 0.0, 0);
        let before = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        state.capabilities[1] += 1.0;
        let after = stage_utility(&state, PlayerId(0), &choice, &params).unwrap();
        assert!((before.total - after.total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn breakdown_total_is_consistent() {
        let params = Parameters::default();
        let mut state = two_player_state();
        state.capabilities = vec![3.0, 1.5];
        state.knowledge = 2.0;
        state.security = 1.0;
        let choice = JointChoice::new(Action::Defect, 0.9, 0);
        let u = stage_utility(&state, PlayerId(1), &choice, &params).unwrap();
        let reconstructed = u.economic + u.security - u.costs;
        assert!((u.total - reconstructed).abs() <= 1e-12 * u.total.abs().max(1.0));
    }

    #[test]
    fn tail_bound_shrinks_with_horizon() {
        let mut params = Parameters {
            delta: 0.9,
            ..Parameters::default()
        };
        params.horizon = 10;
        let short = tail_bound(&params, 1.0);
        params.horizon = 100;
        let long = tail_bound(&params, 1.0);
        assert!(long < short);
        assert!((short - 0.9f64.powi(10) / 0.1).abs() < 1e-12);
    }
}
