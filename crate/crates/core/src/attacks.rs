//! Adversarial behaviour of compromised clients.
//!
//! P_A is the per-round attempt probability. Every draw comes from the
//! dedicated attack stream, keyed by (client, round) or by round for the
//! shared coordination coin, so enabling attacks never shifts data, mobility
//! or training randomness.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datagen::{poison_labels, Labeled};
use crate::domain::ModelParams;
use crate::error::Result;
use crate::rng::{substream, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    Byzantine,
    Backdoor,
    Collaborative,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Byzantine => "byzantine",
            AttackKind::Backdoor => "backdoor",
            AttackKind::Collaborative => "collaborative",
        }
    }
}

/// Attack parameters carried in the scenario file (P_A lives at top level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSettings {
    pub kind: AttackKind,
    pub byz_sigma: f64,
    pub backdoor_flip_fraction: f64,
    pub backdoor_target_class: u8,
    pub collab_scale_lambda: f64,
}

impl Default for AttackSettings {
    fn default() -> Self {
        Self {
            kind: AttackKind::Byzantine,
            byz_sigma: 1.0,
            backdoor_flip_fraction: 0.5,
            backdoor_target_class: 1,
            collab_scale_lambda: 3.0,
        }
    }
}

impl AttackSettings {
    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(self.byz_sigma > 0.0 && self.byz_sigma.is_finite()) {
            v.push(("byz_sigma", format!("must be > 0, got {}", self.byz_sigma)));
        }
        if !(0.0..=1.0).contains(&self.backdoor_flip_fraction) {
            v.push(("backdoor_flip_fraction", format!("probability out of [0,1]: {}", self.backdoor_flip_fraction)));
        }
        if self.backdoor_target_class > 1 {
            v.push(("backdoor_target_class", "must be 0 or 1".into()));
        }
        if !(self.collab_scale_lambda >= 1.0 && self.collab_scale_lambda.is_finite()) {
            v.push(("collab_scale_lambda", format!("must be >= 1, got {}", self.collab_scale_lambda)));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub p_attack: f64,
    pub settings: AttackSettings,
}

impl AttackConfig {
    pub fn new(settings: &AttackSettings, p_attack: f64) -> Self {
        Self { kind: settings.kind, p_attack, settings: settings.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub round: usize,
    pub client: usize,
    pub kind: AttackKind,
}

/// Per-(client, round) attack stream.
pub fn attack_rng(seed: u64, client: usize, round: usize) -> SimRng {
    substream(seed, Stream::Attacks, client as u64, round as u64)
}

/// The round's coordination coin, shared by all compromised clients.
pub fn coordination_coin(seed: u64, round: usize, p_attack: f64) -> bool {
    substream(seed, Stream::Attacks, u64::MAX, round as u64).random_bool(p_attack)
}

/// With probability P_A replaces every parameter by a Normal(0, σ²) draw.
/// Returns whether the attack fired.
pub fn byzantine_perturb(update: ModelParams, cfg: &AttackConfig, rng: &mut impl Rng) -> (ModelParams, bool) {
    if !rng.random_bool(cfg.p_attack) {
        return (update, false);
    }
    let noise = Normal::new(0.0, cfg.settings.byz_sigma).expect("sigma validated");
    let values = update.values.iter().map(|_| noise.sample(rng)).collect();
    (ModelParams { values, layout: update.layout }, true)
}

/// With probability P_A flips target-class labels of the shard.
pub fn backdoor_shard<T: Labeled>(shard: Vec<T>, cfg: &AttackConfig, rng: &mut impl Rng) -> Result<(Vec<T>, bool)> {
    if !rng.random_bool(cfg.p_attack) {
        return Ok((shard, false));
    }
    let s = &cfg.settings;
    Ok((poison_labels(shard, s.backdoor_flip_fraction, s.backdoor_target_class, rng)?, true))
}

/// In coordinated rounds the malicious update is anchor + λ·(w_poisoned − anchor).
pub fn collaborative_craft(update: ModelParams, anchor: &ModelParams, cfg: &AttackConfig, coordinated: bool) -> ModelParams {
    if !coordinated {
        return update;
    }
    let lambda = cfg.settings.collab_scale_lambda;
    let values = update.values.iter().zip(&anchor.values).map(|(w, a)| a + lambda * (w - a)).collect();
    ModelParams { values, layout: update.layout }
}
