//! The adversarial-perturbation equivalence and psi-shift consistency of the
//! stability checker, verified by enumeration on small random instances.

use potts_core::instance::{brute_force_map, enumerate_expansions, Instance, Labeling};
use potts_core::stability::{
    adversarial_theta, check_expansion_stability, Verdict, STABILITY_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(2..=6usize);
    let k = rng.gen_range(2..=3usize);
    let costs: Vec<f64> = (0..n * k).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((u, v, rng.gen_range(0.05..1.0)));
            }
        }
    }
    Instance::new(n, k, costs, edges).unwrap()
}

fn all_proper_expansions(x: &Labeling, k: usize) -> Vec<Labeling> {
    let mut out = Vec::new();
    for alpha in 0..k {
        out.extend(enumerate_expansions(x, alpha).unwrap());
    }
    out
}

#[test]
fn adversarial_check_is_equivalent_to_all_band_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut stable_seen = 0;
    let mut unstable_seen = 0;
    for trial in 0..120 {
        let inst = random_instance(&mut rng);
        let (xbar, _) = brute_force_map(&inst).unwrap();
        let report = check_expansion_stability(&inst, &xbar, 0.0).unwrap();
        let expansions = all_proper_expansions(&xbar, inst.label_count());
        if expansions.is_empty() {
            continue;
        }

        match report.verdict {
            Verdict::Stable => {
                stable_seen += 1;
                // every sampled (2,1)-band perturbation must keep xbar ahead
                for draw in 0..200 {
                    let mut wrng = ChaCha8Rng::seed_from_u64(trial * 1000 + draw);
                    let w_prime: Vec<f64> = inst
                        .weights()
                        .iter()
                        .map(|&w| wrng.gen_range(0.5 * w..=w))
                        .collect();
                    let perturbed = inst
                        .with_parameters(inst.costs().to_vec(), w_prime)
                        .unwrap();
                    let theta = perturbed.objective();
                    let base = theta.dot_labeling(&xbar);
                    for y in &expansions {
                        assert!(
                            theta.dot_labeling(y) > base - 1e-9,
                            "trial {trial}: stable verdict but a band perturbation wins"
                        );
                    }
                }
            }
            Verdict::Unstable => {
                unstable_seen += 1;
                // the adversarial perturbation itself must witness it
                let theta = adversarial_theta(&inst, &xbar, 0.0).unwrap();
                let base = theta.dot_labeling(&xbar);
                let best = expansions
                    .iter()
                    .map(|y| theta.dot_labeling(y))
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    best <= base + STABILITY_TOL,
                    "trial {trial}: unstable verdict without an adversarial witness"
                );
            }
            Verdict::Boundary => {}
        }
    }
    assert!(stable_seen > 5, "want both sides sampled: {stable_seen}");
    assert!(unstable_seen > 5, "want both sides sampled: {unstable_seen}");
}

#[test]
fn margins_match_enumeration_and_decrease_in_psi() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for trial in 0..60 {
        let inst = random_instance(&mut rng);
        let (xbar, _) = brute_force_map(&inst).unwrap();
        let mut last = f64::INFINITY;
        for psi in [0.0, 0.1, 0.25, 0.5] {
            let report = check_expansion_stability(&inst, &xbar, psi).unwrap();
            let theta = adversarial_theta(&inst, &xbar, psi).unwrap();
            let base = theta.dot_labeling(&xbar);
            let mut want = None;
            for y in all_proper_expansions(&xbar, inst.label_count()) {
                let m = theta.dot_labeling(&y) - base;
                want = Some(want.map_or(m, |w: f64| w.min(m)));
            }
            assert_eq!(report.margin.is_some(), want.is_some(), "trial {trial}");
            if let (Some(got), Some(w)) = (report.margin, want) {
                assert!((got - w).abs() < 1e-9, "trial {trial} psi {psi}: {got} vs {w}");
                assert!(got <= last + 1e-12);
                last = got;
            }
        }
    }
}

#[test]
fn psi_check_agrees_with_explicitly_shifted_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for _ in 0..60 {
        let inst = random_instance(&mut rng);
        let (xbar, _) = brute_force_map(&inst).unwrap();
        let psi = rng.gen_range(0.05..0.6);

        let with_psi = check_expansion_stability(&inst, &xbar, psi).unwrap();

        let k = inst.label_count();
        let mut shifted = inst.costs().to_vec();
        for u in 0..inst.node_count() {
            shifted[u * k + xbar.label(u)] += psi;
        }
        let shifted_inst = inst
            .with_parameters(shifted, inst.weights().to_vec())
            .unwrap();
        let plain = check_expansion_stability(&shifted_inst, &xbar, 0.0).unwrap();

        match (with_psi.margin, plain.margin) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (a, b) => assert_eq!(a.is_some(), b.is_some()),
        }
    }
}
