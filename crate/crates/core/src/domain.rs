//! Scenario configuration, node/gateway state and farm topology.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::AttackSettings;
use crate::datagen::DataConfig;
use crate::engine::SchemeId;
use crate::error::{Error, Result};
use crate::flmodel::ModelConfig;
use crate::mechanism::SelectionOutcome;

/// Physical constants for radios, compute and solar harvesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConstants {
    pub lora_tx_w: f64,
    pub ble_tx_w: f64,
    pub rpi_idle_w: f64,
    pub rpi_load_w: f64,
    /// Full-charge energy E_S in joules.
    pub full_charge_j: f64,
    pub lora_bps: f64,
    pub ble_bps: f64,
    pub ble_range_m: f64,
    pub solar_outdoor_w_per_cm2: f64,
    /// Exposed for completeness; animals are modelled outdoors.
    pub solar_indoor_w_per_cm2: f64,
    pub panel_area_cm2: f64,
    pub d_active_w: f64,
    pub d_sleep_w: f64,
    pub train_rate_s_per_sample: f64,
    /// Normalized energy per metre of LoRa distance (E_T).
    pub e_t_per_m: f64,
    /// Seconds from simulation start until the first sunrise.
    pub sunrise_offset_s: f64,
    /// A depleted node wakes once it recharges above this level.
    pub wake_threshold: f64,
    /// Sensor reading sent over BLE every sensing tick.
    pub ble_payload_bits: f64,
    /// Bits per model parameter in a LoRa local update.
    pub bits_per_param: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self {
            lora_tx_w: 0.170,
            ble_tx_w: 0.011,
            rpi_idle_w: 0.117,
            rpi_load_w: 0.172,
            full_charge_j: 5000.0,
            lora_bps: 27_000.0,
            ble_bps: 2_000_000.0,
            ble_range_m: 100.0,
            solar_outdoor_w_per_cm2: 0.010,
            solar_indoor_w_per_cm2: 0.0001,
            panel_area_cm2: 10.0,
            d_active_w: 0.117,
            d_sleep_w: 0.01,
            train_rate_s_per_sample: 0.002,
            e_t_per_m: 2.5e-5,
            sunrise_offset_s: 6.0 * 3600.0,
            wake_threshold: 0.05,
            ble_payload_bits: 1000.0,
            bits_per_param: 32.0,
        }
    }
}

/// Engine knobs that are not scenario parameters proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    /// Keep the per-event energy log (large; off for sweeps).
    pub record_energy_events: bool,
    /// Communication-round cost c_i of every client.
    pub client_cost: u32,
    /// Test hook: every client reports the same quality value.
    pub force_equal_quality: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { record_energy_events: false, client_cost: 1, force_equal_quality: false }
    }
}

/// Single source of truth for one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_sensors: usize,
    pub n_clients: usize,
    pub n_gateways: usize,
    pub farm_side_m: f64,
    pub sim_horizon_s: u64,
    pub p_move_range: [f64; 2],
    /// Per-round attack probability P_A of a compromised client.
    pub p_attack: f64,
    /// Fraction P_C of clients compromised at start.
    pub p_compromised: f64,
    pub t_sense_s: u64,
    pub t_update_s: u64,
    pub t_global_s: u64,
    /// Initial energy range, half-open.
    pub e_init_range: [f64; 2],
    pub epsilon_min_energy: f64,
    pub budget_b: u32,
    pub theta_quality: f64,
    pub energy: EnergyConstants,
    pub model: ModelConfig,
    pub data: DataConfig,
    pub attack: AttackSettings,
    pub engine: EngineOptions,
    pub scheme: SchemeId,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_sensors: 30,
            n_clients: 20,
            n_gateways: 3,
            farm_side_m: 400.0,
            sim_horizon_s: 172_800,
            p_move_range: [0.3, 0.7],
            p_attack: 0.1,
            p_compromised: 0.3,
            t_sense_s: 30,
            t_update_s: 3600,
            t_global_s: 3600,
            e_init_range: [0.3, 0.8],
            epsilon_min_energy: 0.15,
            budget_b: 5,
            theta_quality: -2.0,
            energy: EnergyConstants::default(),
            model: ModelConfig::default(),
            data: DataConfig::default(),
            attack: AttackSettings::default(),
            engine: EngineOptions::default(),
            scheme: SchemeId::Susfl,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Parses a TOML scenario file; missing keys take their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                Error::Config(format!("config not found: {}", path.display()))
            }
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn farm_diagonal_m(&self) -> f64 {
        self.farm_side_m * std::f64::consts::SQRT_2
    }
}

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigViolation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Default)]
struct Violations(Vec<ConfigViolation>);

impl Violations {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(ConfigViolation { field: field.to_string(), message: message.into() });
    }

    fn probability(&mut self, field: &str, p: f64) {
        if !(0.0..=1.0).contains(&p) {
            self.push(field, format!("probability out of [0,1]: {p}"));
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(field, format!("must be > 0, got {x}"));
        }
    }

    fn unit_range(&mut self, field: &str, r: [f64; 2]) {
        if !(0.0..=1.0).contains(&r[0]) || !(0.0..=1.0).contains(&r[1]) || r[0] > r[1] {
            self.push(field, format!("range must satisfy 0 <= lo <= hi <= 1, got [{}, {}]", r[0], r[1]));
        }
    }
}

/// Checks every invariant and returns the config unchanged, or the full list
/// of violations.
pub fn validate_config(cfg: ScenarioConfig) -> std::result::Result<ScenarioConfig, ConfigErrors> {
    let mut v = Violations::default();

    if cfg.n_sensors == 0 {
        v.push("n_sensors", "must be >= 1");
    }
    if cfg.n_clients > cfg.n_sensors {
        v.push("n_clients", format!("n_clients ({}) exceeds n_sensors ({})", cfg.n_clients, cfg.n_sensors));
    }
    if cfg.n_gateways == 0 {
        v.push("n_gateways", "must be >= 1");
    }
    v.positive("farm_side_m", cfg.farm_side_m);
    v.unit_range("p_move_range", cfg.p_move_range);
    v.probability("p_attack", cfg.p_attack);
    v.probability("p_compromised", cfg.p_compromised);
    for (field, t) in [
        ("t_sense_s", cfg.t_sense_s),
        ("t_update_s", cfg.t_update_s),
        ("t_global_s", cfg.t_global_s),
    ] {
        if t == 0 {
            v.push(field, "time interval must be > 0");
        }
    }
    if cfg.t_sense_s > 0 && !cfg.t_update_s.is_multiple_of(cfg.t_sense_s) {
        v.push(
            "t_update_s",
            format!("{} is not a multiple of t_sense_s ({})", cfg.t_update_s, cfg.t_sense_s),
        );
    }
    if cfg.t_sense_s > 0 && !cfg.t_global_s.is_multiple_of(cfg.t_sense_s) {
        v.push(
            "t_global_s",
            format!("{} is not a multiple of t_sense_s ({})", cfg.t_global_s, cfg.t_sense_s),
        );
    }
    v.unit_range("e_init_range", cfg.e_init_range);
    if !(cfg.epsilon_min_energy > 0.0 && cfg.epsilon_min_energy < 1.0) {
        v.push("epsilon_min_energy", format!("must lie in (0,1), got {}", cfg.epsilon_min_energy));
    }
    if !cfg.theta_quality.is_finite() {
        v.push("theta_quality", "must be finite");
    }

    let e = &cfg.energy;
    for (field, x) in [
        ("energy.lora_tx_w", e.lora_tx_w),
        ("energy.ble_tx_w", e.ble_tx_w),
        ("energy.rpi_idle_w", e.rpi_idle_w),
        ("energy.rpi_load_w", e.rpi_load_w),
        ("energy.full_charge_j", e.full_charge_j),
        ("energy.lora_bps", e.lora_bps),
        ("energy.ble_bps", e.ble_bps),
        ("energy.ble_range_m", e.ble_range_m),
        ("energy.solar_outdoor_w_per_cm2", e.solar_outdoor_w_per_cm2),
        ("energy.solar_indoor_w_per_cm2", e.solar_indoor_w_per_cm2),
        ("energy.panel_area_cm2", e.panel_area_cm2),
        ("energy.d_active_w", e.d_active_w),
        ("energy.d_sleep_w", e.d_sleep_w),
        ("energy.train_rate_s_per_sample", e.train_rate_s_per_sample),
        ("energy.e_t_per_m", e.e_t_per_m),
        ("energy.wake_threshold", e.wake_threshold),
        ("energy.ble_payload_bits", e.ble_payload_bits),
        ("energy.bits_per_param", e.bits_per_param),
    ] {
        v.positive(field, x);
    }
    if !(e.sunrise_offset_s >= 0.0 && e.sunrise_offset_s.is_finite()) {
        v.push("energy.sunrise_offset_s", "must be >= 0");
    }
    if e.wake_threshold >= 1.0 {
        v.push("energy.wake_threshold", "must be < 1");
    }
    if cfg.farm_side_m > 0.0 && e.ble_range_m >= cfg.farm_diagonal_m() {
        v.push("energy.ble_range_m", "must be smaller than the farm diagonal");
    }

    for (field, msg) in cfg.model.violations() {
        v.push(&format!("model.{field}"), msg);
    }
    for (field, msg) in cfg.data.violations() {
        v.push(&format!("data.{field}"), msg);
    }
    for (field, msg) in cfg.attack.violations() {
        v.push(&format!("attack.{field}"), msg);
    }
    if cfg.engine.client_cost == 0 {
        v.push("engine.client_cost", "cost must be >= 1");
    }

    if v.0.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(v.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Normal,
    Client,
}

/// Layout of a one-hidden-layer network (hidden_dim = 0 is logistic
/// regression).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl Layout {
    pub fn param_count(&self) -> usize {
        if self.hidden_dim == 0 {
            self.input_dim * self.output_dim + self.output_dim
        } else {
            self.input_dim * self.hidden_dim
                + self.hidden_dim
                + self.hidden_dim * self.output_dim
                + self.output_dim
        }
    }
}

/// Flat parameter vector shared by local, edge and global models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ModelParams {
    pub fn zeros(layout: Layout) -> Self {
        Self { values: vec![0.0; layout.param_count()], layout }
    }

    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        let p = Self { values, layout };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.layout.param_count() {
            return Err(Error::Layout(format!(
                "vector length {} does not match layout ({} parameters)",
                self.values.len(),
                self.layout.param_count()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn distance(&self, other: &ModelParams) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Checkpoint dump: a layout header line followed by one value per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input_dim,hidden_dim,output_dim\n");
        out.push_str(&format!(
            "{},{},{}\n",
            self.layout.input_dim, self.layout.hidden_dim, self.layout.output_dim
        ));
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("input_dim,hidden_dim,output_dim") {
            return Err(Error::Parse { line: 1, message: "missing layout header".into() });
        }
        let dims: Vec<usize> = lines
            .next()
            .ok_or(Error::Parse { line: 2, message: "missing layout row".into() })?
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 2, message: e.to_string() })?;
        let [input_dim, hidden_dim, output_dim] = dims[..] else {
            return Err(Error::Parse { line: 2, message: "expected three dimensions".into() });
        };
        let values = lines
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line: i + 3, message: e.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        ModelParams::new(values, Layout { input_dim, hidden_dim, output_dim })
    }
}

/// One animal-mounted sensor node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub role: Role,
    pub position: Position,
    /// Normalized energy e_t(i) in [0,1].
    pub energy: f64,
    pub compromised: bool,
    pub p_move: f64,
    /// Index of this cow's shard in the dataset partition.
    pub dataset_handle: usize,
    pub local_params: Option<ModelParams>,
    /// False once the battery hits zero, until it recharges past the wake
    /// threshold.
    pub awake: bool,
    /// Client R-Pi powered for the current update interval.
    pub participating: bool,
}

impl NodeState {
    pub fn is_client(&self) -> bool {
        self.role == Role::Client
    }

    /// The node draws active power only while awake with its compute
    /// powered; otherwise it sits at sleep power.
    pub fn is_active(&self) -> bool {
        self.awake && self.participating
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayState {
    pub id: usize,
    pub position: Position,
    pub edge_params: ModelParams,
    pub budget_b: u32,
    pub selection_log: Vec<SelectionOutcome>,
}

/// Fixed gateway sites: centroids of equal vertical strips across the farm.
pub fn gateway_positions(n_gateways: usize, side: f64) -> Vec<Position> {
    (0..n_gateways)
        .map(|j| Position { x: side * (2 * j + 1) as f64 / (2 * n_gateways) as f64, y: side / 2.0 })
        .collect()
}

fn uniform_in(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Lays out sensors, clients and gateways. Client ids are `0..n_clients`.
///
/// Compromised clients are the prefix of one random permutation of the
/// clients, so for a fixed seed the compromised sets are nested in P_C.
pub fn build_topology(
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
    initial_params: &ModelParams,
) -> (Vec<NodeState>, Vec<GatewayState>) {
    let side = cfg.farm_side_m;
    let mut nodes: Vec<NodeState> = (0..cfg.n_sensors)
        .map(|id| {
            let position = Position { x: rng.random_range(0.0..=side), y: rng.random_range(0.0..=side) };
            let energy = uniform_in(rng, cfg.e_init_range);
            let p_move = uniform_in(rng, cfg.p_move_range);
            let role = if id < cfg.n_clients { Role::Client } else { Role::Normal };
            NodeState {
                id,
                role,
                position,
                energy,
                compromised: false,
                p_move,
                dataset_handle: id,
                local_params: (role == Role::Client).then(|| initial_params.clone()),
                awake: energy > 0.0,
                participating: role == Role::Client,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..cfg.n_clients).collect();
    order.shuffle(rng);
    let n_bad = compromised_count(cfg.p_compromised, cfg.n_clients);
    for &id in &order[..n_bad] {
        nodes[id].compromised = true;
    }

    let gateways = gateway_positions(cfg.n_gateways, side)
        .into_iter()
        .enumerate()
        .map(|(id, position)| GatewayState {
            id,
            position,
            edge_params: initial_params.clone(),
            budget_b: cfg.budget_b,
            selection_log: Vec::new(),
        })
        .collect();
    (nodes, gateways)
}

/// ⌊P_C × n_clients⌋, robust to the representation error of products like
/// 0.3 × 20.
pub fn compromised_count(p_c: f64, n_clients: usize) -> usize {
    ((p_c * n_clients as f64) + 1e-9).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;

    fn params(cfg: &ScenarioConfig) -> ModelParams {
        ModelParams::zeros(cfg.model.layout())
    }

    fn topo(cfg: &ScenarioConfig, seed: u64) -> (Vec<NodeState>, Vec<GatewayState>) {
        build_topology(cfg, &mut stream(seed, Stream::Topology), &params(cfg))
    }

    #[test]
    fn default_config_is_valid() {
        assert!(validate_config(ScenarioConfig::default()).is_ok());
    }

    #[test]
    fn probability_out_of_range() {
        let cfg = ScenarioConfig { p_attack: 1.5, ..Default::default() };
        let errs = validate_config(cfg).unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].field, "p_attack");
        assert!(errs.0[0].message.contains("probability out of [0,1]"));
    }

    #[test]
    fn update_interval_must_divide() {
        let cfg = ScenarioConfig { t_update_s: 3601, ..Default::default() };
        let errs = validate_config(cfg).unwrap_err();
        assert!(errs.0.iter().any(|v| v.field == "t_update_s" && v.message.contains("not a multiple")));
    }

    #[test]
    fn reports_every_violation() {
        let cfg = ScenarioConfig {
            p_attack: -0.1,
            p_compromised: 2.0,
            n_clients: 40,
            epsilon_min_energy: 0.0,
            ..Default::default()
        };
        let errs = validate_config(cfg).unwrap_err();
        let fields: Vec<_> = errs.0.iter().map(|v| v.field.as_str()).collect();
        for f in ["p_attack", "p_compromised", "n_clients", "epsilon_min_energy"] {
            assert!(fields.contains(&f), "missing {f} in {fields:?}");
        }
    }

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
        let cfg = ScenarioConfig::from_toml_str("budget_b = 7\n[energy]\nd_sleep_w = 0.02\n").unwrap();
        assert_eq!(cfg.budget_b, 7);
        assert_eq!(cfg.energy.d_sleep_w, 0.02);
        assert!(ScenarioConfig::from_toml_str("no_such_key = 1").is_err());
        let round = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn default_topology_counts() {
        let cfg = ScenarioConfig::default();
        let (nodes, gws) = topo(&cfg, 1);
        assert_eq!(nodes.len(), 30);
        assert_eq!(nodes.iter().filter(|n| n.is_client()).count(), 20);
        assert_eq!(nodes.iter().filter(|n| n.compromised).count(), 6);
        assert_eq!(gws.len(), 3);
        assert_eq!(gws[0].position, Position { x: 400.0 / 6.0, y: 200.0 });
        assert_eq!(gws[2].position.x, 5.0 * 400.0 / 6.0);
    }

    #[test]
    fn zero_compromised() {
        let cfg = ScenarioConfig { p_compromised: 0.0, ..Default::default() };
        assert!(topo(&cfg, 3).0.iter().all(|n| !n.compromised));
    }

    #[test]
    fn topology_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = serde_json::to_vec(&topo(&cfg, 9)).unwrap();
        let b = serde_json::to_vec(&topo(&cfg, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compromised_sets_nest_in_fraction() {
        let mut prev: Vec<usize> = Vec::new();
        for p_c in [0.1, 0.3, 0.5] {
            let cfg = ScenarioConfig { p_compromised: p_c, ..Default::default() };
            let bad: Vec<usize> = topo(&cfg, 4).0.iter().filter(|n| n.compromised).map(|n| n.id).collect();
            assert!(prev.iter().all(|id| bad.contains(id)));
            prev = bad;
        }
    }

    #[test]
    fn params_checkpoint_roundtrip() {
        let layout = Layout { input_dim: 2, hidden_dim: 1, output_dim: 1 };
        let p = ModelParams::new(vec![0.1, -2.5, 1e-17, 3.0, 0.25], layout).unwrap();
        assert_eq!(ModelParams::from_csv(&p.to_csv()).unwrap(), p);
        assert!(ModelParams::new(vec![1.0], layout).is_err());
        assert!(ModelParams::new(vec![f64::NAN; 5], layout).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn generated_scalars_respect_ranges(seed in any::<u64>()) {
            let cfg = ScenarioConfig::default();
            let (nodes, _) = topo(&cfg, seed);
            for n in &nodes {
                prop_assert!((0.0..=cfg.farm_side_m).contains(&n.position.x));
                prop_assert!((0.0..=cfg.farm_side_m).contains(&n.position.y));
                prop_assert!(n.energy >= cfg.e_init_range[0] && n.energy < cfg.e_init_range[1]);
                prop_assert!(n.p_move >= cfg.p_move_range[0] && n.p_move < cfg.p_move_range[1]);
                prop_assert!(!n.compromised || n.is_client());
            }
            prop_assert_eq!(nodes.iter().filter(|n| n.compromised).count(), 6);
        }
    }
}
