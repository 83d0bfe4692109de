//! Synthetic mastitis health records, non-IID per-cow shards, CSV I/O.
//!
//! The generator is class-conditional Gaussian. Each cow gets a fixed additive
//! offset on its continuous features (std = 0.3 of the feature's healthy std),
//! which is what makes the per-cow shards non-IID. Each record is one
//! cow-episode with an independent Bernoulli(mastitis_rate) label.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 14;

pub const CSV_HEADER: [&str; 16] = [
    "serial",
    "size_udder_fl_in",
    "size_udder_fl_ex",
    "size_udder_fr_in",
    "size_udder_fr_ex",
    "size_udder_rl_in",
    "size_udder_rl_ex",
    "size_udder_rr_in",
    "size_udder_rr_ex",
    "avg_temperature",
    "hardness",
    "pain_level",
    "avg_activity",
    "battery_level",
    "timestamp",
    "label",
];

/// Generator constants: (healthy mean, healthy std, mastitis mean, mastitis std).
pub mod params {
    /// Inhale-limit udder quarter size (cm).
    pub const UDDER_IN: (f64, f64) = (12.0, 1.0);
    /// Exhale-limit udder quarter size (cm).
    pub const UDDER_EX: (f64, f64) = (10.0, 1.0);
    /// Swelling added to the infected quarter.
    pub const UDDER_SWELL: f64 = 1.5;
    pub const TEMPERATURE: (f64, f64, f64, f64) = (38.7, 0.4, 39.4, 0.5);
    /// Latent Gaussians, rounded and clamped to the ordinal scale.
    pub const HARDNESS: (f64, f64, f64, f64) = (0.4, 0.6, 1.2, 0.7);
    pub const PAIN: (f64, f64, f64, f64) = (0.6, 0.7, 1.6, 0.9);
    pub const ACTIVITY: (f64, f64, f64, f64) = (115.0, 20.0, 95.0, 20.0);
    pub const BATTERY: (f64, f64) = (0.2, 1.0);
    /// Seconds between consecutive records of one cow.
    pub const RECORD_SPACING_S: u64 = 7200;
    /// Per-cow offset std as a fraction of the feature's healthy std.
    pub const COW_OFFSET_FRACTION: f64 = 0.3;
    pub const TEMPERATURE_BOUNDS: (f64, f64) = (35.0, 43.0);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub records_per_cow: usize,
    /// Extra records per cow reserved for the shared global test set.
    pub test_records_per_cow: usize,
    pub mastitis_rate: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { records_per_cow: 20, test_records_per_cow: 10, mastitis_rate: 0.3 }
    }
}

impl DataConfig {
    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if self.records_per_cow == 0 {
            v.push(("records_per_cow", "must be >= 1".to_string()));
        }
        if self.test_records_per_cow == 0 {
            v.push(("test_records_per_cow", "must be >= 1".to_string()));
        }
        if !(0.0..=1.0).contains(&self.mastitis_rate) {
            v.push(("mastitis_rate", format!("probability out of [0,1]: {}", self.mastitis_rate)));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthRecord {
    pub serial: u32,
    /// fl_in, fl_ex, fr_in, fr_ex, rl_in, rl_ex, rr_in, rr_ex.
    pub udder_sizes: [f64; 8],
    pub avg_temperature_c: f64,
    pub hardness: u8,
    pub pain_level: u8,
    pub avg_activity: f64,
    pub battery_level: f64,
    pub timestamp: u64,
    pub label: u8,
}

impl HealthRecord {
    pub fn features(&self) -> [f64; N_FEATURES] {
        let mut f = [0.0; N_FEATURES];
        f[..8].copy_from_slice(&self.udder_sizes);
        f[8] = self.avg_temperature_c;
        f[9] = f64::from(self.hardness);
        f[10] = f64::from(self.pain_level);
        f[11] = self.avg_activity;
        f[12] = self.battery_level;
        f[13] = self.timestamp as f64;
        f
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.label > 1 {
            return Err(format!("label must be 0 or 1, got {}", self.label));
        }
        if self.hardness > 2 {
            return Err(format!("hardness must be 0..=2, got {}", self.hardness));
        }
        if self.pain_level > 3 {
            return Err(format!("pain_level must be 0..=3, got {}", self.pain_level));
        }
        let (lo, hi) = params::TEMPERATURE_BOUNDS;
        if !(lo..=hi).contains(&self.avg_temperature_c) {
            return Err(format!("avg_temperature {} outside [{lo}, {hi}]", self.avg_temperature_c));
        }
        if !(0.0..=1.0).contains(&self.battery_level) {
            return Err(format!("battery_level {} outside [0, 1]", self.battery_level));
        }
        let finite = self.udder_sizes.iter().chain([&self.avg_activity]).all(|v| v.is_finite());
        if !finite {
            return Err("non-finite feature".to_string());
        }
        Ok(())
    }
}

/// Anything carrying a binary label; lets poisoning work on raw records and
/// on normalized training samples alike.
pub trait Labeled {
    fn label(&self) -> u8;
    fn set_label(&mut self, label: u8);
}

impl Labeled for HealthRecord {
    fn label(&self) -> u8 {
        self.label
    }
    fn set_label(&mut self, label: u8) {
        self.label = label;
    }
}

/// A normalized feature vector with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: [f64; N_FEATURES],
    pub y: u8,
}

impl Labeled for Sample {
    fn label(&self) -> u8 {
        self.y
    }
    fn set_label(&mut self, label: u8) {
        self.y = label;
    }
}

fn draw(rng: &mut impl Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std).expect("generator std is positive").sample(rng)
}

fn ordinal(rng: &mut impl Rng, mean: f64, std: f64, max: u8) -> u8 {
    draw(rng, mean, std).round().clamp(0.0, f64::from(max)) as u8
}

/// `n_cows × records_per_cow` records, cow-major.
pub fn generate_dataset(
    n_cows: usize,
    records_per_cow: usize,
    mastitis_rate: f64,
    rng: &mut impl Rng,
) -> Result<Vec<HealthRecord>> {
    if !(0.0..=1.0).contains(&mastitis_rate) {
        return Err(Error::Domain(format!("mastitis_rate {mastitis_rate} outside [0,1]")));
    }
    use params::*;
    let mut out = Vec::with_capacity(n_cows * records_per_cow);
    for cow in 0..n_cows {
        let udder_off: [f64; 8] = std::array::from_fn(|q| {
            let std = if q % 2 == 0 { UDDER_IN.1 } else { UDDER_EX.1 };
            draw(rng, 0.0, COW_OFFSET_FRACTION * std)
        });
        let temp_off = draw(rng, 0.0, COW_OFFSET_FRACTION * TEMPERATURE.1);
        let act_off = draw(rng, 0.0, COW_OFFSET_FRACTION * ACTIVITY.1);

        for k in 0..records_per_cow {
            let sick = rng.random_bool(mastitis_rate);
            let infected = rng.random_range(0..4usize);
            let udder_sizes = std::array::from_fn(|q| {
                let (m, s) = if q % 2 == 0 { UDDER_IN } else { UDDER_EX };
                let swell = if sick && q / 2 == infected { UDDER_SWELL } else { 0.0 };
                draw(rng, m + swell + udder_off[q], s).max(0.0)
            });
            let (tm, ts) = if sick { (TEMPERATURE.2, TEMPERATURE.3) } else { (TEMPERATURE.0, TEMPERATURE.1) };
            let avg_temperature_c =
                draw(rng, tm + temp_off, ts).clamp(TEMPERATURE_BOUNDS.0, TEMPERATURE_BOUNDS.1);
            let (hm, hs) = if sick { (HARDNESS.2, HARDNESS.3) } else { (HARDNESS.0, HARDNESS.1) };
            let hardness = ordinal(rng, hm, hs, 2);
            let (pm, ps) = if sick { (PAIN.2, PAIN.3) } else { (PAIN.0, PAIN.1) };
            let pain_level = ordinal(rng, pm, ps, 3);
            let (am, as_) = if sick { (ACTIVITY.2, ACTIVITY.3) } else { (ACTIVITY.0, ACTIVITY.1) };
            let avg_activity = draw(rng, am + act_off, as_).max(0.0);
            let battery_level = rng.random_range(BATTERY.0..=BATTERY.1);
            out.push(HealthRecord {
                serial: cow as u32,
                udder_sizes,
                avg_temperature_c,
                hardness,
                pain_level,
                avg_activity,
                battery_level,
                timestamp: k as u64 * RECORD_SPACING_S,
                label: u8::from(sick),
            });
        }
    }
    Ok(out)
}

/// Flips exactly ⌊flip_fraction × |target-class records|⌋ labels of
/// `target_class`, chosen uniformly.
pub fn poison_labels<T: Labeled>(
    mut shard: Vec<T>,
    flip_fraction: f64,
    target_class: u8,
    rng: &mut impl Rng,
) -> Result<Vec<T>> {
    if !(0.0..=1.0).contains(&flip_fraction) {
        return Err(Error::Domain(format!("flip_fraction {flip_fraction} outside [0,1]")));
    }
    let targets: Vec<usize> =
        shard.iter().enumerate().filter(|(_, r)| r.label() == target_class).map(|(i, _)| i).collect();
    let n_flip = (flip_fraction * targets.len() as f64 + 1e-9).floor() as usize;
    if n_flip == 0 {
        return Ok(shard);
    }
    for k in sample(rng, targets.len(), n_flip) {
        shard[targets[k]].set_label(1 - target_class);
    }
    Ok(shard)
}

/// Per-feature standardization statistics, fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

impl NormStats {
    pub fn fit<'a>(records: impl IntoIterator<Item = &'a HealthRecord>) -> Self {
        let rows: Vec<[f64; N_FEATURES]> = records.into_iter().map(HealthRecord::features).collect();
        let n = rows.len().max(1) as f64;
        let mean: [f64; N_FEATURES] = std::array::from_fn(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n);
        let std = std::array::from_fn(|j| {
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        });
        Self { mean, std }
    }

    pub fn apply(&self, r: &HealthRecord) -> Sample {
        let f = r.features();
        Sample { x: std::array::from_fn(|j| (f[j] - self.mean[j]) / self.std[j]), y: r.label }
    }
}

/// Per-cow training shards, a shared test set and the normalization fitted on
/// the shards.
#[derive(Debug, Clone)]
pub struct DatasetPartition {
    pub train: Vec<Vec<HealthRecord>>,
    pub test: Vec<HealthRecord>,
    pub stats: NormStats,
}

impl DatasetPartition {
    /// Splits cow-major records: the last `test_per_cow` records of every cow
    /// go to the shared test set.
    pub fn split(records: Vec<HealthRecord>, n_cows: usize, test_per_cow: usize) -> Self {
        let mut train: Vec<Vec<HealthRecord>> = vec![Vec::new(); n_cows];
        let mut test = Vec::new();
        let mut by_cow: Vec<Vec<HealthRecord>> = vec![Vec::new(); n_cows];
        for r in records {
            by_cow[r.serial as usize].push(r);
        }
        for (cow, mut rs) in by_cow.into_iter().enumerate() {
            let cut = rs.len().saturating_sub(test_per_cow);
            test.extend(rs.drain(cut..));
            train[cow] = rs;
        }
        let stats = NormStats::fit(train.iter().flatten());
        Self { train, test, stats }
    }

    pub fn generate(n_cows: usize, cfg: &DataConfig, rng: &mut impl Rng) -> Result<Self> {
        let per_cow = cfg.records_per_cow + cfg.test_records_per_cow;
        let records = generate_dataset(n_cows, per_cow, cfg.mastitis_rate, rng)?;
        Ok(Self::split(records, n_cows, cfg.test_records_per_cow))
    }

    pub fn train_samples(&self, cow: usize) -> Vec<Sample> {
        self.train[cow].iter().map(|r| self.stats.apply(r)).collect()
    }

    pub fn test_samples(&self) -> Vec<Sample> {
        self.test.iter().map(|r| self.stats.apply(r)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    serial: u32,
    size_udder_fl_in: f64,
    size_udder_fl_ex: f64,
    size_udder_fr_in: f64,
    size_udder_fr_ex: f64,
    size_udder_rl_in: f64,
    size_udder_rl_ex: f64,
    size_udder_rr_in: f64,
    size_udder_rr_ex: f64,
    avg_temperature: f64,
    hardness: u8,
    pain_level: u8,
    avg_activity: f64,
    battery_level: f64,
    timestamp: u64,
    label: u8,
}

impl From<&HealthRecord> for CsvRow {
    fn from(r: &HealthRecord) -> Self {
        let u = r.udder_sizes;
        Self {
            serial: r.serial,
            size_udder_fl_in: u[0],
            size_udder_fl_ex: u[1],
            size_udder_fr_in: u[2],
            size_udder_fr_ex: u[3],
            size_udder_rl_in: u[4],
            size_udder_rl_ex: u[5],
            size_udder_rr_in: u[6],
            size_udder_rr_ex: u[7],
            avg_temperature: r.avg_temperature_c,
            hardness: r.hardness,
            pain_level: r.pain_level,
            avg_activity: r.avg_activity,
            battery_level: r.battery_level,
            timestamp: r.timestamp,
            label: r.label,
        }
    }
}

impl From<CsvRow> for HealthRecord {
    fn from(c: CsvRow) -> Self {
        Self {
            serial: c.serial,
            udder_sizes: [
                c.size_udder_fl_in,
                c.size_udder_fl_ex,
                c.size_udder_fr_in,
                c.size_udder_fr_ex,
                c.size_udder_rl_in,
                c.size_udder_rl_ex,
                c.size_udder_rr_in,
                c.size_udder_rr_ex,
            ],
            avg_temperature_c: c.avg_temperature,
            hardness: c.hardness,
            pain_level: c.pain_level,
            avg_activity: c.avg_activity,
            battery_level: c.battery_level,
            timestamp: c.timestamp,
            label: c.label,
        }
    }
}

pub fn write_csv<W: Write>(records: &[HealthRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<HealthRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    for h in headers.iter() {
        if !CSV_HEADER.contains(&h) {
            return Err(Error::Schema(format!("unknown column \"{h}\"")));
        }
    }
    for expected in CSV_HEADER {
        if !headers.iter().any(|h| h == expected) {
            return Err(Error::Schema(format!("missing column \"{expected}\"")));
        }
    }
    let mut out = Vec::new();
    for row in rd.deserialize::<CsvRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, message: e.to_string() }
        })?;
        let rec = HealthRecord::from(row);
        rec.check().map_err(|message| Error::Parse { line: out.len() + 2, message })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_csv(records: &[HealthRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn load_csv(path: &Path) -> Result<Vec<HealthRecord>> {
    read_csv(std::fs::File::open(path)?)
}
