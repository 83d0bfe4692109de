//! The discrete-event loop: sensing ticks every T_s, per-gateway update rounds
//! every T_u, cloud aggregation every T_g.
//!
//! Power model: a client's R-Pi stays in active mode (d_active) for the
//! update interval after it was selected and sleeps (d_sleep) otherwise;
//! normal nodes carry no R-Pi and always draw d_sleep.

mod output;
mod schemes;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use output::{write_run_dir, RUN_FILES};
pub use schemes::{divfl_greedy, facility_coverage, select_scheme, PoolContext};
pub use sweep::{
    apply_param, grid_points, parse_axis, plan, sweep, GridAxis, GridValue, PlannedRun, SweepRun,
};

use crate::attacks::{
    attack_rng, backdoor_shard, byzantine_perturb, collaborative_craft, coordination_coin, AttackConfig,
    AttackEvent, AttackKind,
};
use crate::datagen::{poison_labels, DatasetPartition, Sample};
use crate::domain::{build_topology, validate_config, GatewayState, ModelParams, NodeState, ScenarioConfig};
use crate::energy::{EnergyLedger, Link};
use crate::error::{Error, Result};
use crate::flmodel::{
    aggregate_fedavg, aggregate_quality, evaluate, init_params, quality_value, train_local, QualityReport,
    TrainMode,
};
use crate::mechanism::{expected_energy_cost, ClientBid, SelectionOutcome};
use crate::metrics::{
    compute_comp_e, compute_mtbf, summarize, FailureIntervals, GatewaySummary, RoundRecord, RunSummary,
};
use crate::par::{map_ordered, Execution};
use crate::rng::{stream, substream, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    #[default]
    Susfl,
    FedavgFull,
    FedproxFull,
    RandomTopk,
    DivflGreedy,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] =
        [SchemeId::Susfl, SchemeId::FedavgFull, SchemeId::FedproxFull, SchemeId::RandomTopk, SchemeId::DivflGreedy];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Susfl => "susfl",
            SchemeId::FedavgFull => "fedavg_full",
            SchemeId::FedproxFull => "fedprox_full",
            SchemeId::RandomTopk => "random_topk",
            SchemeId::DivflGreedy => "divfl_greedy",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL.into_iter().find(|id| id.as_str() == s.trim()).ok_or_else(|| {
            let known: Vec<&str> = SchemeId::ALL.iter().map(|s| s.as_str()).collect();
            Error::Config(format!("unknown scheme '{s}' (known: {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub failures: FailureIntervals,
    pub selections: Vec<SelectionOutcome>,
    pub attack_events: Vec<AttackEvent>,
    pub summary: RunSummary,
    pub final_params: ModelParams,
    /// Kept out of the serialized result; exported separately as a CSV.
    #[serde(skip)]
    pub ledger: EnergyLedger,
}

impl RunResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run results serialize")
    }
}

/// Runs one simulation. Training within a round fans out over rayon.
pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    run_with(cfg, seed, Execution::Parallel)
}

pub fn run_with(cfg: &ScenarioConfig, seed: u64, exec: Execution) -> Result<RunResult> {
    let cfg = validate_config(cfg.clone())?;
    let mut sim = Sim::new(&cfg, seed, exec)?;
    let n_ticks = cfg.sim_horizon_s / cfg.t_sense_s;
    for tick in 1..=n_ticks {
        sim.tick(tick)?;
    }
    Ok(sim.finish())
}

/// Post-aggregation deviation ‖w_attacked − w_clean‖ of the global model
/// after the first update round, with and without the configured attack.
/// Both branches share everything up to that round.
pub fn attack_deviation(cfg: &ScenarioConfig, seed: u64) -> Result<f64> {
    let cfg = validate_config(cfg.clone())?;
    let first_round_tick = cfg.t_update_s / cfg.t_sense_s;
    let mut sim = Sim::new(&cfg, seed, Execution::Sequential)?;
    for tick in 1..first_round_tick {
        sim.tick(tick)?;
    }
    let mut clean = sim.clone();
    clean.attack.kind = AttackKind::None;
    sim.tick(first_round_tick)?;
    clean.tick(first_round_tick)?;
    // Force a cloud sync so both global models reflect the round.
    sim.cloud_aggregate()?;
    clean.cloud_aggregate()?;
    Ok(sim.global.distance(&clean.global))
}

#[derive(Debug, Clone)]
struct ClientBook {
    reported_v: f64,
    last_update: Vec<f64>,
    /// Received normal-node records, indexed cow·records_per_cow + k.
    received: Vec<bool>,
}

struct TrainJob {
    client: usize,
    start: ModelParams,
    data: Vec<Sample>,
    compromised: bool,
}

struct TrainOutput {
    client: usize,
    submitted: ModelParams,
    report: QualityReport,
    epochs: usize,
    n_samples: usize,
    delta: Vec<f64>,
    attacked: Option<AttackKind>,
}

#[derive(Clone)]
struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    exec: Execution,
    attack: AttackConfig,
    nodes: Vec<NodeState>,
    gateways: Vec<GatewayState>,
    global: ModelParams,
    ledger: EnergyLedger,
    samples: Vec<Vec<Sample>>,
    test: Vec<Sample>,
    books: Vec<ClientBook>,
    cursor: Vec<usize>,
    mobility_rng: SimRng,
    failures: FailureIntervals,
    rounds: Vec<RoundRecord>,
    selections: Vec<SelectionOutcome>,
    attack_events: Vec<AttackEvent>,
    depletion_at_last_round: f64,
    pending: Vec<GatewaySummary>,
    round_com_e: f64,
    round_e_tc_j: f64,
    round_selected: usize,
    round_welfare: f64,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, seed: u64, exec: Execution) -> Result<Self> {
        let data = DatasetPartition::generate(cfg.n_sensors, &cfg.data, &mut stream(seed, Stream::Data))?;
        let samples: Vec<Vec<Sample>> = (0..cfg.n_sensors).map(|c| data.train_samples(c)).collect();
        let layout = cfg.model.layout();
        let global = init_params(layout, &mut stream(seed, Stream::ModelInit));
        let (nodes, gateways) = build_topology(cfg, &mut stream(seed, Stream::Topology), &global);
        let first_v = quality_value(cfg.model.quality_psi, cfg.model.local_epochs_max as f64)?;
        let books = (0..cfg.n_clients)
            .map(|_| ClientBook {
                reported_v: first_v,
                last_update: vec![0.0; layout.param_count()],
                received: vec![false; cfg.n_sensors * cfg.data.records_per_cow],
            })
            .collect();
        Ok(Self {
            cfg,
            seed,
            exec,
            attack: AttackConfig::new(&cfg.attack, cfg.p_attack),
            ledger: EnergyLedger::new(nodes.len(), cfg.engine.record_energy_events),
            cursor: vec![0; nodes.len()],
            nodes,
            gateways,
            global,
            samples,
            test: data.test_samples(),
            books,
            mobility_rng: stream(seed, Stream::Mobility),
            failures: FailureIntervals::default(),
            rounds: Vec::new(),
            selections: Vec::new(),
            attack_events: Vec::new(),
            depletion_at_last_round: 0.0,
            pending: Vec::new(),
            round_com_e: 0.0,
            round_e_tc_j: 0.0,
            round_selected: 0,
            round_welfare: 0.0,
        })
    }

    fn mean_energy(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        self.nodes.iter().map(|n| n.energy).sum::<f64>() / self.nodes.len() as f64
    }

    fn tick(&mut self, tick: u64) -> Result<()> {
        let cfg = self.cfg;
        let k = &cfg.energy;
        let dt = cfg.t_sense_s as f64;
        let t_end = (tick * cfg.t_sense_s) as f64;
        let t_mid = t_end - dt / 2.0;

        crate::mobility::step_movement(&mut self.nodes, dt, cfg.farm_side_m, &mut self.mobility_rng);
        self.sense(t_end);
        for node in &mut self.nodes {
            self.ledger.charge_step(node, dt, t_mid, k);
        }
        for node in &mut self.nodes {
            self.ledger.depletion_step(node, dt, t_end, k);
        }
        let mean = self.mean_energy();
        self.failures.observe(t_end, mean, cfg.epsilon_min_energy);

        let now = tick * cfg.t_sense_s;
        if now.is_multiple_of(cfg.t_update_s) {
            self.update_round(t_end)?;
        }
        if now.is_multiple_of(cfg.t_global_s) {
            self.cloud_aggregate()?;
        }
        if now.is_multiple_of(cfg.t_update_s) {
            self.record_round(t_end)?;
        }
        Ok(())
    }

    /// Each awake normal node uplinks its current record over BLE to the
    /// nearest awake client in range; out of range the record is dropped.
    fn sense(&mut self, t: f64) {
        let cfg = self.cfg;
        let rpc = cfg.data.records_per_cow;
        if rpc == 0 {
            return;
        }
        let (clients, normals) = self.nodes.split_at_mut(cfg.n_clients);
        for node in normals.iter_mut().filter(|n| n.awake) {
            let idx = self.cursor[node.id];
            self.cursor[node.id] = (idx + 1) % rpc;
            let mut best: Option<(f64, usize)> = None;
            for c in clients.iter().filter(|c| c.awake) {
                let d = c.position.distance(&node.position);
                if d <= cfg.energy.ble_range_m && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c.id));
                }
            }
            if let Some((_, cid)) = best {
                self.ledger.transmit(node, cfg.energy.ble_payload_bits, Link::Ble, t, &cfg.energy);
                self.books[cid].received[node.dataset_handle * rpc + idx] = true;
            }
        }
    }

    fn training_set(&self, client: usize) -> Vec<Sample> {
        let rpc = self.cfg.data.records_per_cow;
        let mut data = self.samples[self.nodes[client].dataset_handle].clone();
        for (flat, _) in self.books[client].received.iter().enumerate().filter(|(_, r)| **r) {
            let (cow, k) = (flat / rpc, flat % rpc);
            if let Some(s) = self.samples[cow].get(k) {
                data.push(s.clone());
            }
        }
        data
    }

    fn training_set_size(&self, client: usize) -> usize {
        self.samples[self.nodes[client].dataset_handle].len()
            + self.books[client].received.iter().filter(|r| **r).count()
    }

    fn nearest_gateway(&self, node: &NodeState) -> usize {
        let mut best = 0;
        for (j, g) in self.gateways.iter().enumerate() {
            if g.position.distance(&node.position) < self.gateways[best].position.distance(&node.position) {
                best = j;
            }
        }
        best
    }

    fn update_round(&mut self, t: f64) -> Result<()> {
        let cfg = self.cfg;
        let round = self.rounds.len();
        let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); self.gateways.len()];
        for id in 0..cfg.n_clients {
            partitions[self.nearest_gateway(&self.nodes[id])].push(id);
        }
        let coordinated = self.attack.kind == AttackKind::Collaborative
            && coordination_coin(self.seed, round, self.attack.p_attack);

        self.pending.clear();
        self.round_com_e = 0.0;
        self.round_e_tc_j = 0.0;
        self.round_selected = 0;
        self.round_welfare = 0.0;

        for (j, ids) in partitions.iter().enumerate() {
            let gw_pos = self.gateways[j].position;
            let bids: Vec<ClientBid> = ids
                .iter()
                .filter(|&&id| self.nodes[id].awake)
                .map(|&id| {
                    let node = &self.nodes[id];
                    ClientBid {
                        client_id: id,
                        energy: node.energy,
                        expected_cost: expected_energy_cost(node.position, gw_pos, self.training_set_size(id), &cfg.energy),
                        reported_v: if cfg.engine.force_equal_quality { -1.0 } else { self.books[id].reported_v },
                        cost_c: cfg.engine.client_cost,
                    }
                })
                .collect();
            let gradients: Vec<&[f64]> = bids.iter().map(|b| self.books[b.client_id].last_update.as_slice()).collect();
            let ctx = PoolContext {
                round,
                gateway_id: j,
                budget_b: cfg.budget_b,
                epsilon_min_energy: cfg.epsilon_min_energy,
                theta: cfg.theta_quality,
                bids: &bids,
                gradients: &gradients,
            };
            let mut sel_rng = substream(self.seed, Stream::Selection, j as u64, round as u64);
            let outcome = select_scheme(cfg.scheme, &ctx, &mut sel_rng);

            let jobs: Vec<TrainJob> = outcome
                .selected
                .iter()
                .map(|&id| TrainJob {
                    client: id,
                    start: self.nodes[id].local_params.clone().unwrap_or_else(|| self.global.clone()),
                    data: self.training_set(id),
                    compromised: self.nodes[id].compromised,
                })
                .collect();
            let outputs: Vec<TrainOutput> = map_ordered(&jobs, self.exec, |job| {
                train_client(job, cfg, &self.attack, self.seed, round, coordinated)
            })
            .into_iter()
            .collect::<Result<_>>()?;

            let bits = cfg.energy.bits_per_param * cfg.model.layout().param_count() as f64;
            let mut updates_q = Vec::with_capacity(outputs.len());
            let mut updates_n = Vec::with_capacity(outputs.len());
            for out in outputs {
                let node = &mut self.nodes[out.client];
                let a = self.ledger.train(node, out.n_samples, out.epochs, t, &cfg.energy);
                let b = self.ledger.transmit(node, bits, Link::Lora, t, &cfg.energy);
                self.round_com_e -= b;
                self.round_e_tc_j -= (a + b) * cfg.energy.full_charge_j;
                let v = bids.iter().find(|bid| bid.client_id == out.client).map_or(out.report.v_i, |bid| bid.reported_v);
                let book = &mut self.books[out.client];
                book.reported_v = out.report.v_i;
                book.last_update = out.delta;
                if let Some(kind) = out.attacked {
                    self.attack_events.push(AttackEvent { round, client: out.client, kind });
                }
                updates_q.push((out.submitted.clone(), v));
                updates_n.push((out.submitted, out.n_samples));
            }

            if !updates_n.is_empty() {
                let edge = if cfg.scheme == SchemeId::Susfl {
                    aggregate_quality(&updates_q)?
                } else {
                    aggregate_fedavg(&updates_n)?
                };
                for &id in ids {
                    self.nodes[id].local_params = Some(edge.clone());
                }
                self.gateways[j].edge_params = edge;
            }
            for &id in ids {
                self.nodes[id].participating = outcome.selected.binary_search(&id).is_ok();
            }

            self.round_selected += outcome.selected.len();
            self.round_welfare += outcome.social_welfare;
            self.pending.push(GatewaySummary {
                gateway_id: j,
                pool_size: outcome.pool.len(),
                n_selected: outcome.selected.len(),
                budget_spent: outcome.budget_spent,
                total_value: outcome.total_value,
                social_welfare: outcome.social_welfare,
            });
            self.gateways[j].selection_log.push(outcome.clone());
            self.selections.push(outcome);
        }
        Ok(())
    }

    /// Plain mean of the edge models, dispatched to every gateway and client.
    fn cloud_aggregate(&mut self) -> Result<()> {
        if self.gateways.is_empty() {
            return Ok(());
        }
        let edges: Vec<(ModelParams, usize)> = self.gateways.iter().map(|g| (g.edge_params.clone(), 1)).collect();
        self.global = aggregate_fedavg(&edges)?;
        for g in &mut self.gateways {
            g.edge_params = self.global.clone();
        }
        for n in self.nodes.iter_mut().filter(|n| n.is_client()) {
            n.local_params = Some(self.global.clone());
        }
        Ok(())
    }

    fn record_round(&mut self, t: f64) -> Result<()> {
        let cfg = self.cfg;
        let k = &cfg.energy;
        let depletion = self.ledger.depletion_e();
        let interval = depletion - self.depletion_at_last_round;
        self.depletion_at_last_round = depletion;
        let t_u = cfg.t_update_s as f64;
        let n_nodes = self.nodes.len().max(1) as f64;
        let mean_depletion_w = interval * k.full_charge_j / (t_u * n_nodes);
        let e_tc = if self.round_selected == 0 { 0.0 } else { self.round_e_tc_j / self.round_selected as f64 };
        let comp_e = compute_comp_e(self.round_selected, e_tc, mean_depletion_w, t_u, k.full_charge_j);
        let com_e = self.round_com_e;
        self.rounds.push(RoundRecord {
            round: self.rounds.len(),
            t_s: t,
            global_accuracy: evaluate(&self.global, &self.test)?,
            com_e,
            comp_e,
            ec_total: com_e + comp_e,
            social_welfare: self.round_welfare,
            mean_node_energy: self.mean_energy(),
            n_selected: self.round_selected,
            mtbf_s: compute_mtbf(&self.failures.censored_at(t), t),
            gateways: std::mem::take(&mut self.pending),
        });
        Ok(())
    }

    fn finish(self) -> RunResult {
        let cfg = self.cfg;
        let l = &self.ledger;
        let drained = l.train_e + l.com_e + l.ble_e + l.depletion_e();
        let per_node = drained / self.nodes.len().max(1) as f64;
        let horizon = (cfg.sim_horizon_s / cfg.t_sense_s * cfg.t_sense_s) as f64;
        let summary = summarize(&self.rounds, &self.failures, horizon, per_node, cfg.t_update_s as f64);
        let mut config = cfg.clone();
        config.rng_seed = self.seed;
        RunResult {
            config,
            seed: self.seed,
            rounds: self.rounds,
            failures: self.failures,
            selections: self.selections,
            attack_events: self.attack_events,
            summary,
            final_params: self.global,
            ledger: self.ledger,
        }
    }
}

fn train_client(
    job: &TrainJob,
    cfg: &ScenarioConfig,
    attack: &AttackConfig,
    seed: u64,
    round: usize,
    coordinated: bool,
) -> Result<TrainOutput> {
    let attacker = job.compromised && attack.kind != AttackKind::None;
    let mut arng = attack_rng(seed, job.client, round);
    let mut attacked = None;
    let mut data = job.data.clone();
    if attacker {
        match attack.kind {
            AttackKind::Backdoor => {
                let (d, fired) = backdoor_shard(data, attack, &mut arng)?;
                data = d;
                attacked = fired.then_some(AttackKind::Backdoor);
            }
            AttackKind::Collaborative if coordinated => {
                let s = &attack.settings;
                data = poison_labels(data, s.backdoor_flip_fraction, s.backdoor_target_class, &mut arng)?;
                attacked = Some(AttackKind::Collaborative);
            }
            _ => {}
        }
    }

    let mode = if cfg.scheme == SchemeId::FedproxFull {
        TrainMode::FedProx { mu: cfg.model.fedprox_mu, anchor: &job.start }
    } else {
        TrainMode::Plain
    };
    let mut trng = substream(seed, Stream::Training, job.client as u64, round as u64);
    let (trained, report, epochs) = train_local(job.client, &job.start, &data, &cfg.model, mode, &mut trng)
        .map_err(|e| Error::Numeric(format!("round {round}: {e}")))?;
    let delta = trained.values.iter().zip(&job.start.values).map(|(w, a)| w - a).collect();

    let mut submitted = trained;
    if attacker {
        match attack.kind {
            AttackKind::Byzantine => {
                let (p, fired) = byzantine_perturb(submitted, attack, &mut arng);
                submitted = p;
                if fired {
                    attacked = Some(AttackKind::Byzantine);
                }
            }
            AttackKind::Collaborative => submitted = collaborative_craft(submitted, &job.start, attack, coordinated),
            _ => {}
        }
    }
    Ok(TrainOutput { client: job.client, submitted, report, epochs, n_samples: data.len(), delta, attacked })
}
