//! Per-node energy accounting in normalized units (fractions of a full
//! charge). Joules only appear in the conversion helpers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{EnergyConstants, NodeState};
use crate::error::Result;

pub const DAY_S: f64 = 86_400.0;
const HALF_DAY_S: f64 = DAY_S / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Ble,
    Lora,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Charge,
    BleTx,
    LoraTx,
    Train,
    Active,
    Sleep,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Charge => "charge",
            EventKind::BleTx => "ble_tx",
            EventKind::LoraTx => "lora_tx",
            EventKind::Train => "train",
            EventKind::Active => "active",
            EventKind::Sleep => "sleep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub t_s: f64,
    pub node: usize,
    pub kind: EventKind,
    /// Applied (post-clamp) change in normalized energy.
    pub delta: f64,
}

/// Half-sine day profile with a 24 h period; zero at night. The run starts
/// `sunrise_offset_s` before the first sunrise.
pub fn solar_irradiance(t_s: f64, k: &EnergyConstants) -> f64 {
    let phase = (t_s - k.sunrise_offset_s).rem_euclid(DAY_S);
    if phase >= HALF_DAY_S {
        0.0
    } else {
        k.solar_outdoor_w_per_cm2 * (std::f64::consts::PI * phase / HALF_DAY_S).sin()
    }
}

/// Joules to push `payload_bits` over a link.
pub fn tx_energy(payload_bits: f64, link: Link, k: &EnergyConstants) -> f64 {
    let (bps, watts) = match link {
        Link::Ble => (k.ble_bps, k.ble_tx_w),
        Link::Lora => (k.lora_bps, k.lora_tx_w),
    };
    payload_bits / bps * watts
}

/// Joules for `epochs` passes over `n_samples` at R-Pi load power.
pub fn train_energy(n_samples: usize, epochs: usize, k: &EnergyConstants) -> f64 {
    (n_samples * epochs) as f64 * k.train_rate_s_per_sample * k.rpi_load_w
}

/// Cumulative energy counters plus an optional per-event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    /// Cumulative communication energy COM_E (client→gateway LoRa).
    pub com_e: f64,
    /// Cumulative training energy.
    pub train_e: f64,
    pub ble_e: f64,
    pub active_e: f64,
    pub sleep_e: f64,
    pub charged_e: f64,
    /// One entry E_CR per client→gateway communication round.
    pub e_cr: Vec<f64>,
    /// Sum of applied deltas per node.
    pub net: Vec<f64>,
    pub events: Option<Vec<EnergyEvent>>,
}

impl EnergyLedger {
    pub fn new(n_nodes: usize, record_events: bool) -> Self {
        Self { net: vec![0.0; n_nodes], events: record_events.then(Vec::new), ..Default::default() }
    }

    /// Applies a signed change with clamping to [0,1]; returns the applied delta.
    pub fn apply(&mut self, node: &mut NodeState, kind: EventKind, delta: f64, t_s: f64) -> f64 {
        let before = node.energy;
        node.energy = (before + delta).clamp(0.0, 1.0);
        let applied = node.energy - before;
        self.net[node.id] += applied;
        match kind {
            EventKind::Charge => self.charged_e += applied,
            EventKind::BleTx => self.ble_e -= applied,
            EventKind::LoraTx => {
                self.com_e -= applied;
                self.e_cr.push(-applied);
            }
            EventKind::Train => self.train_e -= applied,
            EventKind::Active => self.active_e -= applied,
            EventKind::Sleep => self.sleep_e -= applied,
        }
        if let Some(log) = &mut self.events {
            log.push(EnergyEvent { t_s, node: node.id, kind, delta: applied });
        }
        applied
    }

    /// Solar harvest over `dt_s` at irradiance sampled at `t_s`; wakes a
    /// depleted node once it passes the wake threshold.
    pub fn charge_step(&mut self, node: &mut NodeState, dt_s: f64, t_s: f64, k: &EnergyConstants) -> f64 {
        let delta = solar_irradiance(t_s, k) * k.panel_area_cm2 * dt_s / k.full_charge_j;
        let applied = self.apply(node, EventKind::Charge, delta, t_s);
        if !node.awake && node.energy >= k.wake_threshold {
            node.awake = true;
        }
        applied
    }

    /// Baseline drain at active or sleep power; a node reaching zero falls
    /// asleep.
    pub fn depletion_step(&mut self, node: &mut NodeState, dt_s: f64, t_s: f64, k: &EnergyConstants) -> f64 {
        let (kind, watts) = if node.is_active() {
            (EventKind::Active, k.d_active_w)
        } else {
            (EventKind::Sleep, k.d_sleep_w)
        };
        let applied = self.apply(node, kind, -watts * dt_s / k.full_charge_j, t_s);
        if node.energy <= 0.0 {
            node.awake = false;
        }
        applied
    }

    /// Pays a radio transmission; returns the applied (negative) delta.
    pub fn transmit(&mut self, node: &mut NodeState, bits: f64, link: Link, t_s: f64, k: &EnergyConstants) -> f64 {
        let kind = match link {
            Link::Ble => EventKind::BleTx,
            Link::Lora => EventKind::LoraTx,
        };
        let applied = self.apply(node, kind, -tx_energy(bits, link, k) / k.full_charge_j, t_s);
        if node.energy <= 0.0 {
            node.awake = false;
        }
        applied
    }

    pub fn train(&mut self, node: &mut NodeState, n_samples: usize, epochs: usize, t_s: f64, k: &EnergyConstants) -> f64 {
        let applied = self.apply(node, EventKind::Train, -train_energy(n_samples, epochs, k) / k.full_charge_j, t_s);
        if node.energy <= 0.0 {
            node.awake = false;
        }
        applied
    }

    /// Total depletion (active + sleep) so far.
    pub fn depletion_e(&self) -> f64 {
        self.active_e + self.sleep_e
    }

    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "node", "kind", "delta_normalized"])?;
        for e in self.events.iter().flatten() {
            w.write_record([format!("{}", e.t_s), e.node.to_string(), e.kind.as_str().to_string(), format!("{:?}", e.delta)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Position, Role};
    use proptest::prelude::*;

    fn node(energy: f64, active: bool) -> NodeState {
        NodeState {
            id: 0,
            role: Role::Client,
            position: Position { x: 0.0, y: 0.0 },
            energy,
            compromised: false,
            p_move: 0.5,
            dataset_handle: 0,
            local_params: None,
            awake: energy > 0.0,
            participating: active,
        }
    }

    #[test]
    fn irradiance_profile() {
        let k = EnergyConstants::default();
        let sunrise = k.sunrise_offset_s;
        assert_eq!(solar_irradiance(0.0, &k), 0.0);
        assert!((solar_irradiance(sunrise + 6.0 * 3600.0, &k) - 0.010).abs() < 1e-15);
        assert_eq!(solar_irradiance(sunrise + 12.0 * 3600.0, &k), 0.0);
        assert_eq!(solar_irradiance(sunrise + 18.0 * 3600.0, &k), 0.0);
        assert!((solar_irradiance(sunrise + DAY_S + 6.0 * 3600.0, &k) - 0.010).abs() < 1e-15);
    }

    #[test]
    fn charge_examples() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, true);
        let mut n = node(0.4, false);
        assert_eq!(l.charge_step(&mut n, 500.0, 0.0, &k), 0.0);
        let noon = k.sunrise_offset_s + 6.0 * 3600.0;
        // 0.010 W/cm² · 10 cm² · 100 s = 10 J of 5000 J
        let d = l.charge_step(&mut n, 100.0, noon, &k);
        assert!((d - 0.002).abs() < 1e-15, "{d}");
        let mut full = node(1.0, false);
        l.charge_step(&mut full, 100.0, noon, &k);
        assert_eq!(full.energy, 1.0);
    }

    #[test]
    fn charge_wakes_depleted_node() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, false);
        let mut n = node(0.0, true);
        assert!(!n.awake);
        let noon = k.sunrise_offset_s + 6.0 * 3600.0;
        l.charge_step(&mut n, 1000.0, noon, &k);
        assert!(!n.awake, "0.02 is below the wake threshold");
        l.charge_step(&mut n, 2000.0, noon, &k);
        assert!(n.awake);
    }

    #[test]
    fn tx_examples() {
        let k = EnergyConstants::default();
        assert!((tx_energy(27_000.0, Link::Lora, &k) - 0.170).abs() < 1e-15);
        assert_eq!(tx_energy(0.0, Link::Ble, &k), 0.0);
        assert!((tx_energy(2_000_000.0, Link::Ble, &k) - 0.011).abs() < 1e-15);
    }

    #[test]
    fn train_examples() {
        let k = EnergyConstants::default();
        assert_eq!(train_energy(0, 10, &k), 0.0);
        assert!((train_energy(500, 4, &k) - 0.688).abs() < 1e-12);
        assert_eq!(train_energy(500, 8, &k), 2.0 * train_energy(500, 4, &k));
    }

    #[test]
    fn depletion_examples() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, false);
        let mut n = node(0.5, false);
        let d = l.depletion_step(&mut n, 1000.0, 0.0, &k);
        assert!((d + 0.002).abs() < 1e-15);
        let mut empty = node(0.0, true);
        assert_eq!(l.depletion_step(&mut empty, 30.0, 0.0, &k), 0.0);
        assert!(!empty.awake);
        let mut same = node(0.3, true);
        assert_eq!(l.depletion_step(&mut same, 0.0, 0.0, &k), 0.0);
        assert_eq!(same.energy, 0.3);
    }

    #[test]
    fn active_node_drains_at_active_power() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, false);
        let mut n = node(0.5, true);
        let d = l.depletion_step(&mut n, 1000.0, 0.0, &k);
        assert!((d + 0.117 * 1000.0 / 5000.0).abs() < 1e-15);
        assert!(l.active_e > 0.0 && l.sleep_e == 0.0);
    }

    #[test]
    fn com_e_is_sum_of_rounds() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, false);
        let mut n = node(0.9, true);
        for bits in [4128.0, 8000.0, 27_000.0] {
            l.transmit(&mut n, bits, Link::Lora, 0.0, &k);
        }
        assert_eq!(l.e_cr.len(), 3);
        assert!((l.com_e - l.e_cr.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn daily_charge_bound() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, false);
        let mut n = node(0.0, false);
        let mut total = 0.0;
        let dt = 30.0;
        let mut t = 0.0;
        while t < 172_800.0 {
            total += l.charge_step(&mut n, dt, t, &k);
            n.energy = 0.0;
            t += dt;
        }
        let bound = k.panel_area_cm2 * k.solar_outdoor_w_per_cm2 * 2.0 * HALF_DAY_S / k.full_charge_j;
        assert!(total > 0.0 && total <= bound, "{total} vs {bound}");
    }

    #[test]
    fn events_csv() {
        let k = EnergyConstants::default();
        let mut l = EnergyLedger::new(1, true);
        let mut n = node(0.5, true);
        l.depletion_step(&mut n, 30.0, 30.0, &k);
        let mut buf = Vec::new();
        l.write_events_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,node,kind,delta_normalized\n30,0,active,-0.000701999"));
    }

    proptest! {
        #[test]
        fn ledger_conserves_energy(
            e0 in 0.0f64..=1.0,
            steps in prop::collection::vec((0u8..4, 0.0f64..2000.0, 0.0f64..200_000.0), 1..60),
        ) {
            let k = EnergyConstants::default();
            let mut l = EnergyLedger::new(1, true);
            let mut n = node(e0, true);
            for (kind, dt, t) in steps {
                let before = n.energy;
                match kind {
                    0 => { l.charge_step(&mut n, dt, t, &k); }
                    1 => { l.depletion_step(&mut n, dt, t, &k); }
                    2 => { l.transmit(&mut n, dt * 100.0, Link::Lora, t, &k); }
                    _ => { l.train(&mut n, dt as usize, 3, t, &k); }
                }
                prop_assert!((0.0..=1.0).contains(&n.energy));
                let last = l.events.as_ref().unwrap().last().unwrap().delta;
                prop_assert!((before + last - n.energy).abs() <= 1e-12);
            }
            let logged: f64 = l.events.as_ref().unwrap().iter().map(|e| e.delta).sum();
            prop_assert!((e0 + logged - n.energy).abs() <= 1e-12);
            prop_assert!((l.net[0] - logged).abs() <= 1e-12);
            prop_assert!(l.com_e >= 0.0 && l.train_e >= 0.0 && l.depletion_e() >= 0.0 && l.charged_e >= 0.0);
        }
    }
}
