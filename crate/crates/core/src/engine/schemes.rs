//! Per-gateway client selection for every scheme.

use rand::Rng;

use super::SchemeId;
use crate::flmodel::quality_weights;
use crate::mechanism::{filter_candidates, select_knapsack, Candidate, ClientBid, SelectionOutcome};

/// What a gateway sees when it requests updates.
pub struct PoolContext<'a> {
    pub round: usize,
    pub gateway_id: usize,
    pub budget_b: u32,
    pub epsilon_min_energy: f64,
    pub theta: f64,
    pub bids: &'a [ClientBid],
    /// Last local update of each bidder, aligned with `bids`.
    pub gradients: &'a [&'a [f64]],
}

pub fn select_scheme(scheme: SchemeId, ctx: &PoolContext<'_>, rng: &mut impl Rng) -> SelectionOutcome {
    if scheme == SchemeId::Susfl {
        let pool = filter_candidates(ctx.bids, ctx.epsilon_min_energy, ctx.theta);
        return select_knapsack(&pool, ctx.budget_b, ctx.round, ctx.gateway_id);
    }

    // Baselines: everyone with charge left is eligible.
    let eligible: Vec<usize> = (0..ctx.bids.len()).filter(|&i| ctx.bids[i].energy > 0.0).collect();
    let q = quality_weights(&eligible.iter().map(|&i| ctx.bids[i].reported_v).collect::<Vec<_>>());
    let pool: Vec<Candidate> = eligible
        .iter()
        .zip(q)
        .map(|(&i, quality_q)| {
            let b = &ctx.bids[i];
            Candidate {
                client_id: b.client_id,
                reported_v: b.reported_v,
                cost_c: b.cost_c,
                utility_u: b.utility(),
                quality_q,
                projected_energy: b.projected_energy(),
            }
        })
        .collect();
    let k = (ctx.budget_b as usize).min(pool.len());
    let chosen: Vec<usize> = match scheme {
        SchemeId::FedavgFull | SchemeId::FedproxFull => (0..pool.len()).collect(),
        SchemeId::RandomTopk => rand::seq::index::sample(rng, pool.len(), k).into_vec(),
        SchemeId::DivflGreedy => {
            let grads: Vec<&[f64]> = eligible.iter().map(|&i| ctx.gradients[i]).collect();
            divfl_greedy(&grads, k)
        }
        SchemeId::Susfl => unreachable!(),
    };

    let mut picked: Vec<&Candidate> = chosen.iter().map(|&i| &pool[i]).collect();
    picked.sort_by_key(|c| c.client_id);
    SelectionOutcome {
        round_index: ctx.round,
        gateway_id: ctx.gateway_id,
        budget_b: ctx.budget_b,
        selected: picked.iter().map(|c| c.client_id).collect(),
        total_value: picked.iter().map(|c| c.quality_q).sum(),
        budget_spent: picked.iter().map(|c| c.cost_c).sum(),
        social_welfare: picked.iter().map(|c| c.utility_u).sum(),
        pool,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Facility-location objective Σ_i max_{s∈S} (D − ‖g_i − g_s‖), with D the
/// largest pairwise distance.
pub fn facility_coverage(gradients: &[&[f64]], set: &[usize]) -> f64 {
    let d = pairwise(gradients);
    let dmax = d.iter().flatten().copied().fold(0.0, f64::max);
    (0..gradients.len())
        .map(|i| set.iter().map(|&s| dmax - d[i][s]).fold(0.0, f64::max))
        .sum()
}

fn pairwise(g: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            d[i][j] = dist(g[i], g[j]);
            d[j][i] = d[i][j];
        }
    }
    d
}

/// Greedy facility-location selection of `k` indices. Seeds with the most
/// isolated vector (largest distance to its nearest neighbour), then adds
/// the largest marginal coverage gain; ties go to the lower index.
pub fn divfl_greedy(gradients: &[&[f64]], k: usize) -> Vec<usize> {
    let n = gradients.len();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let d = pairwise(gradients);
    let dmax = d.iter().flatten().copied().fold(0.0, f64::max);

    let isolation = |i: usize| (0..n).filter(|&j| j != i).map(|j| d[i][j]).fold(f64::INFINITY, f64::min);
    let mut seed = 0;
    for i in 1..n {
        if isolation(i) > isolation(seed) {
            seed = i;
        }
    }
    let mut chosen = vec![seed];
    // cover[i] = current max similarity of i to the chosen set
    let mut cover: Vec<f64> = (0..n).map(|i| dmax - d[i][seed]).collect();
    while chosen.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for c in (0..n).filter(|c| !chosen.contains(c)) {
            let gain: f64 = (0..n).map(|i| ((dmax - d[i][c]) - cover[i]).max(0.0)).sum();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, c));
            }
        }
        let (_, c) = best.expect("k <= n");
        for i in 0..n {
            cover[i] = cover[i].max(dmax - d[i][c]);
        }
        chosen.push(c);
    }
    chosen.sort_unstable();
    chosen
}
