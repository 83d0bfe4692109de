//! Cartesian parameter sweeps over seeds.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{run_with, RunResult, SchemeId};
use crate::attacks::AttackKind;
use crate::domain::{validate_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::par::{map_ordered, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridValue {
    Num(f64),
    /// `lo:hi`, used for ranges such as the initial-energy interval.
    Range(f64, f64),
    Text(String),
}

impl fmt::Display for GridValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridValue::Num(x) => write!(f, "{x}"),
            GridValue::Range(a, b) => write!(f, "{a}:{b}"),
            GridValue::Text(s) => f.write_str(s),
        }
    }
}

impl GridValue {
    fn parse(s: &str) -> Self {
        let s = s.trim();
        if let Ok(x) = s.parse::<f64>() {
            return GridValue::Num(x);
        }
        if let Some((a, b)) = s.split_once(':') {
            if let (Ok(a), Ok(b)) = (a.trim().parse(), b.trim().parse()) {
                return GridValue::Range(a, b);
            }
        }
        GridValue::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<GridValue>,
}

/// Parses `KEY=v1,v2,...`. The key is checked against the known parameters.
pub fn parse_axis(spec: &str) -> Result<GridAxis> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("grid spec '{spec}' is not KEY=v1,v2,...")))?;
    let key = key.trim().to_string();
    let values: Vec<GridValue> = values.split(',').filter(|v| !v.trim().is_empty()).map(GridValue::parse).collect();
    if values.is_empty() {
        return Err(Error::Config(format!("grid key '{key}' has no values")));
    }
    let mut probe = ScenarioConfig::default();
    for v in &values {
        apply_param(&mut probe, &key, v)?;
    }
    Ok(GridAxis { key, values })
}

fn num(key: &str, v: &GridValue) -> Result<f64> {
    match v {
        GridValue::Num(x) => Ok(*x),
        _ => Err(Error::Config(format!("grid key '{key}' expects a number, got '{v}'"))),
    }
}

fn count(key: &str, v: &GridValue) -> Result<usize> {
    let x = num(key, v)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(Error::Config(format!("grid key '{key}' expects a non-negative integer, got {x}")));
    }
    Ok(x as usize)
}

/// Sets one parameter. `N` changes the client count and keeps the number of
/// plain sensors fixed; `n` changes the herd size and keeps the client share.
pub fn apply_param(cfg: &mut ScenarioConfig, key: &str, v: &GridValue) -> Result<()> {
    match key {
        "P_A" | "p_attack" => cfg.p_attack = num(key, v)?,
        "P_C" | "p_compromised" => cfg.p_compromised = num(key, v)?,
        "B" | "budget_b" => cfg.budget_b = count(key, v)? as u32,
        "theta" | "theta_quality" => cfg.theta_quality = num(key, v)?,
        "epsilon" | "epsilon_min_energy" => cfg.epsilon_min_energy = num(key, v)?,
        "N" | "n_clients" => {
            let normals = cfg.n_sensors.saturating_sub(cfg.n_clients);
            cfg.n_clients = count(key, v)?;
            cfg.n_sensors = cfg.n_clients + normals;
        }
        "n" | "n_sensors" => {
            let share = cfg.n_clients as f64 / cfg.n_sensors.max(1) as f64;
            cfg.n_sensors = count(key, v)?;
            cfg.n_clients = ((cfg.n_sensors as f64 * share).round() as usize).clamp(1, cfg.n_sensors.max(1));
        }
        "n_gateways" => cfg.n_gateways = count(key, v)?,
        "e_init" | "e_init_range" => match v {
            GridValue::Range(a, b) => cfg.e_init_range = [*a, *b],
            _ => return Err(Error::Config(format!("grid key '{key}' expects lo:hi, got '{v}'"))),
        },
        "T_s" | "t_sense_s" => cfg.t_sense_s = count(key, v)? as u64,
        "T_u" | "t_update_s" => cfg.t_update_s = count(key, v)? as u64,
        "T_g" | "t_global_s" => cfg.t_global_s = count(key, v)? as u64,
        "horizon" | "sim_horizon_s" => cfg.sim_horizon_s = count(key, v)? as u64,
        "records_per_cow" => cfg.data.records_per_cow = count(key, v)?,
        "hidden_dim" => cfg.model.hidden_dim = count(key, v)?,
        "lambda" | "collab_scale_lambda" => cfg.attack.collab_scale_lambda = num(key, v)?,
        "sigma" | "byz_sigma" => cfg.attack.byz_sigma = num(key, v)?,
        "flip_fraction" | "backdoor_flip_fraction" => cfg.attack.backdoor_flip_fraction = num(key, v)?,
        "scheme" => cfg.scheme = v.to_string().parse::<SchemeId>()?,
        "attack" | "attack.kind" => {
            cfg.attack.kind = match v.to_string().as_str() {
                "none" => AttackKind::None,
                "byzantine" => AttackKind::Byzantine,
                "backdoor" => AttackKind::Backdoor,
                "collaborative" => AttackKind::Collaborative,
                other => return Err(Error::Config(format!("unknown attack kind '{other}'"))),
            }
        }
        _ => return Err(Error::Config(format!("unknown grid key '{key}'"))),
    }
    Ok(())
}

/// Every combination of axis values, first axis slowest.
pub fn grid_points(grid: &[GridAxis]) -> Vec<Vec<(String, GridValue)>> {
    let mut points = vec![Vec::new()];
    for axis in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub point: usize,
    pub params: Vec<(String, GridValue)>,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// Expands and validates the whole matrix without running anything.
pub fn plan(base: &ScenarioConfig, grid: &[GridAxis], seeds: &[u64]) -> Result<Vec<PlannedRun>> {
    let mut runs = Vec::new();
    for (point, params) in grid_points(grid).into_iter().enumerate() {
        let mut cfg = base.clone();
        for (k, v) in &params {
            apply_param(&mut cfg, k, v)?;
        }
        let cfg = validate_config(cfg)?;
        for &seed in seeds {
            runs.push(PlannedRun { point, params: params.clone(), seed, config: cfg.clone() });
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub point: usize,
    pub params: Vec<(String, GridValue)>,
    pub seed: u64,
    pub result: RunResult,
}

/// Runs grid × seeds. Output order is (grid point, seed), whatever the
/// completion order.
pub fn sweep(base: &ScenarioConfig, grid: &[GridAxis], seeds: &[u64], exec: Execution) -> Result<Vec<SweepRun>> {
    let runs = plan(base, grid, seeds)?;
    // Parallelism lives at the run level here; each run is sequential inside.
    let results = map_ordered(&runs, exec, |r| run_with(&r.config, r.seed, Execution::Sequential));
    runs.into_iter()
        .zip(results)
        .map(|(r, res)| Ok(SweepRun { point: r.point, params: r.params, seed: r.seed, result: res? }))
        .collect()
}
