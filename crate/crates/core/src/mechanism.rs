//! Client selection by mechanism design.
//!
//! Clients self-filter on individual rationality (u > 0), the gateway keeps
//! those whose post-task energy stays above ε and whose reported value clears
//! θ, then an exact 0/1 knapsack over communication-round costs picks the set
//! with the largest total normalized quality. Social welfare Σu of the chosen
//! set is recorded but never optimized directly: the gateway does not observe
//! utilities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{EnergyConstants, Position};
use crate::flmodel::quality_weights;

/// Expected normalized energy for one round: training |D|·r·P_load/E_S plus
/// LoRa distance Dis·E_T.
pub fn expected_energy_cost(
    client: Position,
    gateway: Position,
    shard_size: usize,
    energy: &EnergyConstants,
) -> f64 {
    let e_rpis = energy.rpi_load_w / energy.full_charge_j;
    shard_size as f64 * energy.train_rate_s_per_sample * e_rpis
        + client.distance(&gateway) * energy.e_t_per_m
}

/// u = e − ec. Depends on energy terms only, never on what is reported.
pub fn client_utility(e_now: f64, ec: f64) -> f64 {
    e_now - ec
}

/// What a client knows when a gateway asks for an update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientBid {
    pub client_id: usize,
    pub energy: f64,
    pub expected_cost: f64,
    pub reported_v: f64,
    pub cost_c: u32,
}

impl ClientBid {
    pub fn utility(&self) -> f64 {
        client_utility(self.energy, self.expected_cost)
    }

    pub fn projected_energy(&self) -> f64 {
        self.energy - self.expected_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub client_id: usize,
    pub reported_v: f64,
    pub cost_c: u32,
    pub utility_u: f64,
    /// Min-max normalized reported value over the surviving pool.
    pub quality_q: f64,
    pub projected_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub round_index: usize,
    pub gateway_id: usize,
    pub budget_b: u32,
    pub pool: Vec<Candidate>,
    /// Ascending client ids.
    pub selected: Vec<usize>,
    pub total_value: f64,
    pub budget_spent: u32,
    pub social_welfare: f64,
}

impl SelectionOutcome {
    pub fn empty(round_index: usize, gateway_id: usize, budget_b: u32) -> Self {
        Self {
            round_index,
            gateway_id,
            budget_b,
            pool: Vec::new(),
            selected: Vec::new(),
            total_value: 0.0,
            budget_spent: 0,
            social_welfare: 0.0,
        }
    }
}

/// Builds the candidate pool: u > 0, post-task energy ≥ ε, v ≥ θ.
pub fn filter_candidates(bids: &[ClientBid], epsilon_min_energy: f64, theta: f64) -> Vec<Candidate> {
    let survivors: Vec<&ClientBid> = bids
        .iter()
        .filter(|b| b.utility() > 0.0)
        .filter(|b| b.projected_energy() >= epsilon_min_energy)
        .filter(|b| b.reported_v >= theta)
        .collect();
    let q = quality_weights(&survivors.iter().map(|b| b.reported_v).collect::<Vec<_>>());
    survivors
        .into_iter()
        .zip(q)
        .map(|(b, quality_q)| Candidate {
            client_id: b.client_id,
            reported_v: b.reported_v,
            cost_c: b.cost_c,
            utility_u: b.utility(),
            quality_q,
            projected_energy: b.projected_energy(),
        })
        .collect()
}

/// Exact 0/1 knapsack maximizing Σq subject to Σc ≤ B, O(N·B).
///
/// Among equal-value optima the backtrack prefers higher q, then lower id.
pub fn select_knapsack(pool: &[Candidate], budget_b: u32, round_index: usize, gateway_id: usize) -> SelectionOutcome {
    let mut order: Vec<&Candidate> = pool.iter().collect();
    // Lowest priority first, so the backtrack meets the preferred items first.
    order.sort_by(|a, b| {
        a.quality_q.total_cmp(&b.quality_q).then(b.client_id.cmp(&a.client_id))
    });
    let n = order.len();
    let cap = budget_b as usize;
    let mut best = vec![vec![0.0f64; cap + 1]; n + 1];
    for (i, c) in order.iter().enumerate() {
        let cost = c.cost_c as usize;
        for b in 0..=cap {
            let skip = best[i][b];
            best[i + 1][b] = if cost <= b { skip.max(best[i][b - cost] + c.quality_q) } else { skip };
        }
    }

    let mut selected = Vec::new();
    let mut b = cap;
    for i in (0..n).rev() {
        let c = order[i];
        let cost = c.cost_c as usize;
        if cost <= b && best[i + 1][b] == best[i][b - cost] + c.quality_q {
            selected.push(c);
            b -= cost;
        }
    }
    selected.sort_by_key(|c| c.client_id);

    SelectionOutcome {
        round_index,
        gateway_id,
        budget_b,
        pool: pool.to_vec(),
        selected: selected.iter().map(|c| c.client_id).collect(),
        total_value: selected.iter().map(|c| c.quality_q).sum(),
        budget_spent: selected.iter().map(|c| c.cost_c).sum(),
        social_welfare: selected.iter().map(|c| c.utility_u).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismViolation {
    #[error("budget balance violated: spent {spent} > budget {budget}")]
    BudgetExceeded { spent: u32, budget: u32 },
    #[error("client {0} selected but not in the candidate pool")]
    NotInPool(usize),
    #[error("individual rationality violated: client {client} has u = {utility}")]
    NotIndividuallyRational { client: usize, utility: f64 },
    #[error("client {client} would end below the energy floor ({projected})")]
    BelowEnergyFloor { client: usize, projected: f64 },
    #[error("client {0}'s utility changed with its report")]
    ReportDependentUtility(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub budget_balanced: bool,
    pub individually_rational: bool,
    pub report_invariant: bool,
}

/// Verifies budget balance, individual rationality (with the ε floor) and
/// report-invariance of every bidder's utility.
pub fn check_mechanism_properties(
    outcome: &SelectionOutcome,
    bids: &[ClientBid],
    epsilon_min_energy: f64,
) -> Result<PropertyReport, MechanismViolation> {
    if outcome.budget_spent > outcome.budget_b {
        return Err(MechanismViolation::BudgetExceeded { spent: outcome.budget_spent, budget: outcome.budget_b });
    }
    for &id in &outcome.selected {
        let c = outcome
            .pool
            .iter()
            .find(|c| c.client_id == id)
            .ok_or(MechanismViolation::NotInPool(id))?;
        if !(c.utility_u > 0.0) {
            return Err(MechanismViolation::NotIndividuallyRational { client: id, utility: c.utility_u });
        }
        if c.projected_energy < epsilon_min_energy {
            return Err(MechanismViolation::BelowEnergyFloor { client: id, projected: c.projected_energy });
        }
    }
    for bid in bids {
        let u = bid.utility();
        for v in [bid.reported_v * 10.0, bid.reported_v - 1.0, 0.0, f64::MIN] {
            let lie = ClientBid { reported_v: v, ..*bid };
            if lie.utility().to_bits() != u.to_bits() {
                return Err(MechanismViolation::ReportDependentUtility(bid.client_id));
            }
            let pool = filter_candidates(&[lie], epsilon_min_energy, f64::NEG_INFINITY);
            if pool.first().is_some_and(|c| c.utility_u.to_bits() != u.to_bits()) {
                return Err(MechanismViolation::ReportDependentUtility(bid.client_id));
            }
        }
    }
    Ok(PropertyReport { budget_balanced: true, individually_rational: true, report_invariant: true })
}
