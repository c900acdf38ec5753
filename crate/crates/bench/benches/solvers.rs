use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use potts_core::expansion::{alpha_expansion_search, best_expansion};
use potts_core::fixtures::random_grid;
use potts_core::instance::Labeling;
use potts_core::locallp::{build_local_lp, solve_local_lp};
use potts_core::lp;
use potts_core::maxflow::{max_flow, FlowNetwork};
use potts_core::repair::solve_repair;
use potts_core::stability::check_expansion_stability;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_max_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_flow");
    for &n in &[50usize, 200, 800] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut net = FlowNetwork::new(n + 2, 0, 1);
        for _ in 0..6 * n {
            let tail = rng.gen_range(0..n + 2);
            let head = rng.gen_range(0..n + 2);
            if tail != head && head != 0 && tail != 1 {
                net.add_arc(tail, head, rng.gen_range(1..=50) as f64);
            }
        }
        group.bench_with_input(BenchmarkId::from_parameter(n), &net, |b, net| {
            b.iter(|| max_flow(net).unwrap().value)
        });
    }
    group.finish();
}

fn bench_local_lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_lp");
    group.sample_size(10);
    for &(rows, cols, k) in &[(4usize, 4usize, 3usize), (8, 8, 3), (12, 12, 3)] {
        let inst = random_grid(rows, cols, k, (0.0, 3.0), (0.2, 1.0), 42);
        let name = format!("{rows}x{cols}_k{k}");
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let sol = solve_local_lp(&inst).unwrap();
                sol.node_marginal(0, 0)
            })
        });
    }
    group.finish();
}

fn bench_lp_build(c: &mut Criterion) {
    let inst = random_grid(12, 12, 3, (0.0, 3.0), (0.2, 1.0), 42);
    c.bench_function("local_lp_build_12x12_k3", |b| {
        b.iter(|| build_local_lp(&inst).nonzeros())
    });
    let program = build_local_lp(&inst);
    c.bench_function("lp_solve_12x12_k3", |b| {
        b.iter(|| lp::solve(&program).unwrap().objective)
    });
}

fn bench_expansion(c: &mut Criterion) {
    let mut group = c.benchmark_group("expansion");
    group.sample_size(20);
    let inst = random_grid(12, 12, 4, (0.0, 3.0), (0.2, 1.0), 7);
    let x_t = Labeling::new(vec![0; inst.node_count()]);
    group.bench_function("best_move_12x12_k4", |b| {
        b.iter(|| best_expansion(&inst, &x_t, 1, 0.0, true).unwrap().0)
    });
    group.bench_function("search_12x12_k4", |b| {
        b.iter(|| alpha_expansion_search(&inst, &x_t).unwrap())
    });
    group.finish();
}

fn bench_checker_and_repair(c: &mut Criterion) {
    let mut group = c.benchmark_group("stability");
    group.sample_size(10);
    let inst = random_grid(8, 8, 3, (0.5, 3.0), (0.2, 0.8), 11);
    let x_t = alpha_expansion_search(&inst, &Labeling::new(vec![0; 64])).unwrap();
    group.bench_function("check_8x8_k3", |b| {
        b.iter(|| check_expansion_stability(&inst, &x_t, 0.5).unwrap().verdict)
    });
    group.bench_function("repair_8x8_k3", |b| {
        b.iter(|| solve_repair(&inst, &x_t, 0.5).unwrap().objective)
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_max_flow,
    bench_local_lp,
    bench_lp_build,
    bench_expansion,
    bench_checker_and_repair
);
criterion_main!(benches);
