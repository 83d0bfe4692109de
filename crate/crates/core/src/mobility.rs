//! Random-waypoint-style cow movement with reflecting farm boundaries.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::NodeState;

pub const SPEED_MEAN_MPS: f64 = 1.5;
pub const SPEED_STD_MPS: f64 = 0.1;
pub const SPEED_RANGE_MPS: (f64, f64) = (1.0, 2.0);

/// Normal(1.5, 0.1) m/s truncated to [1, 2] by rejection.
pub fn sample_speed(rng: &mut impl Rng) -> f64 {
    let normal = Normal::new(SPEED_MEAN_MPS, SPEED_STD_MPS).unwrap();
    loop {
        let s = normal.sample(rng);
        if (SPEED_RANGE_MPS.0..=SPEED_RANGE_MPS.1).contains(&s) {
            return s;
        }
    }
}

/// Folds a coordinate back into [0, side] as if bouncing off both walls.
pub fn reflect(x: f64, side: f64) -> f64 {
    let r = x.rem_euclid(2.0 * side);
    if r > side {
        2.0 * side - r
    } else {
        r
    }
}

/// Moves each node with probability `p_move`, at a random heading.
pub fn step_movement(nodes: &mut [NodeState], dt_s: f64, side: f64, rng: &mut impl Rng) {
    for n in nodes {
        if !rng.random_bool(n.p_move) {
            continue;
        }
        let speed = sample_speed(rng);
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        let d = speed * dt_s;
        n.position.x = reflect(n.position.x + d * heading.cos(), side);
        n.position.y = reflect(n.position.y + d * heading.sin(), side);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_topology, ModelParams, ScenarioConfig};
    use crate::rng::{stream, Stream};

    fn nodes(seed: u64) -> Vec<NodeState> {
        let cfg = ScenarioConfig::default();
        build_topology(&cfg, &mut stream(seed, Stream::Topology), &ModelParams::zeros(cfg.model.layout())).0
    }

    #[test]
    fn stationary_when_p_move_zero() {
        let mut ns = nodes(1);
        ns.iter_mut().for_each(|n| n.p_move = 0.0);
        let before: Vec<_> = ns.iter().map(|n| n.position).collect();
        step_movement(&mut ns, 30.0, 400.0, &mut stream(1, Stream::Mobility));
        assert!(ns.iter().zip(&before).all(|(n, p)| n.position == *p));
    }

    #[test]
    fn speed_distribution() {
        let mut rng = stream(2, Stream::Mobility);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_speed(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!((mean - 1.5).abs() < 0.01, "{mean}");
        assert!((std - 0.1).abs() < 0.01, "{std}");
        assert!(xs.iter().all(|x| (1.0..=2.0).contains(x)));
    }

    #[test]
    fn reflection_keeps_nodes_inside() {
        assert_eq!(reflect(-5.0, 400.0), 5.0);
        assert_eq!(reflect(410.0, 400.0), 390.0);
        assert_eq!(reflect(200.0, 400.0), 200.0);
        let mut ns = nodes(3);
        ns[0].position.x = 400.0;
        ns[0].p_move = 1.0;
        let mut rng = stream(3, Stream::Mobility);
        for _ in 0..2000 {
            step_movement(&mut ns, 30.0, 400.0, &mut rng);
            assert!(ns.iter().all(|n| (0.0..=400.0).contains(&n.position.x) && (0.0..=400.0).contains(&n.position.y)));
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = || {
            let mut ns = nodes(4);
            let mut rng = stream(4, Stream::Mobility);
            for _ in 0..100 {
                step_movement(&mut ns, 30.0, 400.0, &mut rng);
            }
            ns.iter().map(|n| n.position).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
