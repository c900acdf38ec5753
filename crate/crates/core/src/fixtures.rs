//! Shared instance fixtures and seeded random generators used by the test
//! suites (unit, integration, and acceptance). Not part of the stable API.
#![doc(hidden)]

use crate::instance::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three-node triangle with all edge weights `1 + eps`, costs
/// `u: [0.5, M, M]`, `v: [1, 0, M]`, `w: [1, M, 0]`. Expansion stable but not
/// perturbation stable for `0 < eps < 1/3`.
pub fn triangle_instance(eps: f64, big_m: f64) -> Instance {
    let w = 1.0 + eps;
    Instance::new(
        3,
        3,
        vec![0.5, big_m, big_m, 1.0, 0.0, big_m, 1.0, big_m, 0.0],
        vec![(0, 1, w), (1, 2, w), (0, 2, w)],
    )
    .unwrap()
}

/// 4-connected grid instance with seeded uniform costs in `cost_range` and
/// weights in `weight_range`.
pub fn random_grid(
    rows: usize,
    cols: usize,
    k: usize,
    cost_range: (f64, f64),
    weight_range: (f64, f64),
    seed: u64,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let costs: Vec<f64> = (0..n * k)
        .map(|_| rng.gen_range(cost_range.0..cost_range.1))
        .collect();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = r * cols + c;
            if c + 1 < cols {
                edges.push((u, u + 1, rng.gen_range(weight_range.0..weight_range.1)));
            }
            if r + 1 < rows {
                edges.push((u, u + cols, rng.gen_range(weight_range.0..weight_range.1)));
            }
        }
    }
    Instance::new(n, k, costs, edges).unwrap()
}

/// Random connected-ish instance: `n` nodes, each non-tree edge kept with
/// probability `edge_prob` on top of a random spanning path.
pub fn random_instance(
    n: usize,
    k: usize,
    edge_prob: f64,
    cost_range: (f64, f64),
    weight_range: (f64, f64),
    seed: u64,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<f64> = (0..n * k)
        .map(|_| rng.gen_range(cost_range.0..cost_range.1))
        .collect();
    let mut edges = Vec::new();
    for u in 1..n {
        edges.push((u - 1, u, rng.gen_range(weight_range.0..weight_range.1)));
    }
    for u in 0..n {
        for v in u + 2..n {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v, rng.gen_range(weight_range.0..weight_range.1)));
            }
        }
    }
    Instance::new(n, k, costs, edges).unwrap()
}

/// Instance with a planted labeling: the planted label at each node gets a
/// low cost, everything else a high one, and weights are moderate. Such
/// instances are frequently (but not always) expansion stable, which makes
/// them useful as candidates for stability-conditioned test suites.
pub fn planted_instance(
    n: usize,
    k: usize,
    edge_prob: f64,
    margin: f64,
    seed: u64,
) -> (Instance, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut costs = vec![0.0; n * k];
    for u in 0..n {
        for i in 0..k {
            costs[u * k + i] = if i == planted[u] {
                rng.gen_range(0.0..0.5)
            } else {
                margin + rng.gen_range(0.0..1.0)
            };
        }
    }
    let mut edges = Vec::new();
    for u in 1..n {
        edges.push((u - 1, u, rng.gen_range(0.2..0.6)));
    }
    for u in 0..n {
        for v in u + 2..n {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v, rng.gen_range(0.2..0.6)));
            }
        }
    }
    (Instance::new(n, k, costs, edges).unwrap(), planted)
}
