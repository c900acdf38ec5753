//! Max-flow equivalence against the exhaustive cut oracle, plus flow
//! decomposition and monotonicity spot checks.

use potts_core::maxflow::{cut_capacity, max_flow, min_cut_value_bruteforce, FlowNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_network(rng: &mut ChaCha8Rng) -> FlowNetwork {
    let inner = rng.gen_range(1..=10usize);
    let n = inner + 2;
    let mut net = FlowNetwork::new(n, 0, 1);
    let arcs = rng.gen_range(1..=3 * n);
    for _ in 0..arcs {
        let tail = rng.gen_range(0..n);
        let head = rng.gen_range(0..n);
        if tail == head || head == 0 || tail == 1 {
            continue;
        }
        net.add_arc(tail, head, rng.gen_range(0..=20) as f64);
    }
    net
}

#[test]
fn matches_exhaustive_cut_on_1000_random_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..1000 {
        let net = random_network(&mut rng);
        let cut = max_flow(&net).unwrap();
        let oracle = min_cut_value_bruteforce(&net).unwrap();
        // integer capacities: exact equality
        assert_eq!(cut.value, oracle, "trial {trial}");
        assert_eq!(
            cut_capacity(&net, &cut.source_side),
            cut.value,
            "trial {trial}: returned cut is not minimum"
        );
    }
}

#[test]
fn flow_decomposition_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let net = random_network(&mut rng);
        let cut = max_flow(&net).unwrap();
        let mut excess = vec![0.0; net.node_count];
        for (f, a) in cut.arc_flows.iter().zip(&net.arcs) {
            assert!(*f >= -1e-12 && *f <= a.capacity + 1e-12);
            excess[a.tail] -= f;
            excess[a.head] += f;
        }
        assert!((excess[net.source] + cut.value).abs() < 1e-9);
        assert!((excess[net.sink] - cut.value).abs() < 1e-9);
        for v in 0..net.node_count {
            if v != net.source && v != net.sink {
                assert!(excess[v].abs() < 1e-9);
            }
        }
    }
}

#[test]
fn value_is_monotone_in_capacities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..200 {
        let net = random_network(&mut rng);
        if net.arcs.is_empty() {
            continue;
        }
        let base = max_flow(&net).unwrap().value;
        let mut bumped = net.clone();
        let idx = rng.gen_range(0..bumped.arcs.len());
        bumped.arcs[idx].capacity += rng.gen_range(1..=5) as f64;
        let after = max_flow(&bumped).unwrap().value;
        assert!(after >= base - 1e-12);
    }
}
