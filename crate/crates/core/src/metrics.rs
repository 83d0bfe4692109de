//! Accuracy, energy consumption, MTBF and social welfare.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Per-gateway slice of a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewaySummary {
    pub gateway_id: usize,
    pub pool_size: usize,
    pub n_selected: usize,
    pub budget_spent: u32,
    pub total_value: f64,
    pub social_welfare: f64,
}

/// Metrics at one update tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub t_s: f64,
    pub global_accuracy: f64,
    pub com_e: f64,
    pub comp_e: f64,
    pub ec_total: f64,
    pub social_welfare: f64,
    pub mean_node_energy: f64,
    pub n_selected: usize,
    /// MTBF over the failures observed up to `t_s`.
    pub mtbf_s: f64,
    pub gateways: Vec<GatewaySummary>,
}

pub const ROUNDS_CSV_HEADER: [&str; 10] = [
    "round",
    "t_s",
    "global_accuracy",
    "com_e",
    "comp_e",
    "ec_total",
    "social_welfare",
    "mean_node_energy",
    "n_selected",
    "mtbf_s",
];

pub fn write_rounds_csv<W: Write>(rounds: &[RoundRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUNDS_CSV_HEADER)?;
    for r in rounds {
        w.write_record([
            r.round.to_string(),
            format!("{}", r.t_s),
            format!("{:?}", r.global_accuracy),
            format!("{:?}", r.com_e),
            format!("{:?}", r.comp_e),
            format!("{:?}", r.ec_total),
            format!("{:?}", r.social_welfare),
            format!("{:?}", r.mean_node_energy),
            r.n_selected.to_string(),
            format!("{:?}", r.mtbf_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// COMP_E for one round: |S*|·e_TC/E_S + (T_u/E_S)·P̄_depl, where e_TC is the
/// mean per-selected-client joules (train + transmit) and P̄_depl the mean
/// per-node depletion power over the interval.
pub fn compute_comp_e(selected_count: usize, e_tc_j: f64, mean_depletion_w: f64, t_u_s: f64, full_charge_j: f64) -> f64 {
    selected_count as f64 * e_tc_j / full_charge_j + t_u_s / full_charge_j * mean_depletion_w
}

/// Downtime intervals: the fleet is down while its mean energy is below ε.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureIntervals {
    /// Closed (down_start, up_start) pairs.
    pub intervals: Vec<(f64, f64)>,
    /// Start of a downtime still open.
    pub open_since: Option<f64>,
}

impl FailureIntervals {
    pub fn observe(&mut self, t_s: f64, mean_energy: f64, epsilon: f64) {
        match self.open_since {
            None if mean_energy < epsilon => self.open_since = Some(t_s),
            Some(d) if mean_energy >= epsilon => {
                self.intervals.push((d, t_s));
                self.open_since = None;
            }
            _ => {}
        }
    }

    pub fn is_down(&self) -> bool {
        self.open_since.is_some()
    }

    pub fn failure_count(&self) -> usize {
        self.intervals.len() + usize::from(self.open_since.is_some())
    }

    /// Intervals as of `t_s`, closing an open one at `t_s`.
    pub fn censored_at(&self, t_s: f64) -> Vec<(f64, f64)> {
        let mut v = self.intervals.clone();
        if let Some(d) = self.open_since {
            v.push((d, t_s));
        }
        v
    }
}

/// Σ(u − d)/|F|, with the horizon reported when there were no failures.
pub fn compute_mtbf(intervals: &[(f64, f64)], horizon_s: f64) -> f64 {
    if intervals.is_empty() {
        return horizon_s;
    }
    intervals.iter().map(|(d, u)| u - d).sum::<f64>() / intervals.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds: usize,
    pub mean_accuracy: f64,
    pub final_accuracy: f64,
    pub mean_ec: f64,
    pub total_ec: f64,
    pub mean_social_welfare: f64,
    pub total_social_welfare: f64,
    pub mtbf_s: f64,
    pub failures: usize,
    pub mean_selected: f64,
    pub mean_node_energy: f64,
    /// Time integral of the fleet mean energy (normalized·s).
    pub energy_auc: f64,
    /// Normalized energy drained per node over the run (all causes).
    pub energy_per_node: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(
    rounds: &[RoundRecord],
    failures: &FailureIntervals,
    horizon_s: f64,
    energy_per_node: f64,
    t_u_s: f64,
) -> RunSummary {
    let total_ec = rounds.iter().map(|r| r.ec_total).sum();
    let total_social_welfare = rounds.iter().map(|r| r.social_welfare).sum();
    RunSummary {
        rounds: rounds.len(),
        mean_accuracy: mean(rounds.iter().map(|r| r.global_accuracy)),
        final_accuracy: rounds.last().map_or(0.0, |r| r.global_accuracy),
        mean_ec: mean(rounds.iter().map(|r| r.ec_total)),
        total_ec,
        mean_social_welfare: mean(rounds.iter().map(|r| r.social_welfare)),
        total_social_welfare,
        mtbf_s: compute_mtbf(&failures.censored_at(horizon_s), horizon_s),
        failures: failures.failure_count(),
        mean_selected: mean(rounds.iter().map(|r| r.n_selected as f64)),
        mean_node_energy: mean(rounds.iter().map(|r| r.mean_node_energy)),
        energy_auc: rounds.iter().map(|r| r.mean_node_energy * t_u_s).sum(),
        energy_per_node,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comp_e_examples() {
        assert_eq!(compute_comp_e(0, 0.9, 0.05, 3600.0, 5000.0), 3600.0 / 5000.0 * 0.05);
        let first = compute_comp_e(5, 0.858, 0.0, 3600.0, 5000.0);
        assert!((first - 8.58e-4).abs() < 1e-15);
        let a = compute_comp_e(0, 0.0, 0.03, 3600.0, 5000.0);
        let b = compute_comp_e(0, 0.0, 0.03, 7200.0, 5000.0);
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn mtbf_examples() {
        assert_eq!(compute_mtbf(&[(10_000.0, 11_000.0)], 172_800.0), 1000.0);
        assert_eq!(compute_mtbf(&[], 172_800.0), 172_800.0);
        assert_eq!(compute_mtbf(&[(100.0, 1100.0), (5000.0, 8000.0)], 172_800.0), 2000.0);
    }

    #[test]
    fn failure_tracking() {
        let mut f = FailureIntervals::default();
        for (t, e) in [(0.0, 0.5), (30.0, 0.1), (60.0, 0.12), (90.0, 0.15), (120.0, 0.1)] {
            f.observe(t, e, 0.15);
        }
        assert_eq!(f.intervals, vec![(30.0, 90.0)]);
        assert_eq!(f.open_since, Some(120.0));
        assert!(f.is_down());
        assert_eq!(f.failure_count(), 2);
        assert_eq!(f.censored_at(200.0), vec![(30.0, 90.0), (120.0, 200.0)]);
    }

    #[test]
    fn summary_of_nothing() {
        let s = summarize(&[], &FailureIntervals::default(), 0.0, 0.0, 3600.0);
        assert_eq!(s.rounds, 0);
        assert_eq!(s.mtbf_s, 0.0);
        assert_eq!(s.mean_ec, 0.0);
    }

    #[test]
    fn rounds_csv_header() {
        let mut buf = Vec::new();
        write_rounds_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), ROUNDS_CSV_HEADER.join(","));
    }
}
