use potts_core::instance::{energy, Instance, Labeling};
use potts_core::locallp::{project_to_lstar, recovery_error};
use proptest::prelude::*;

fn normalized_marginals(n: usize, k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, n * k).prop_map(move |mut v| {
        for u in 0..n {
            let s: f64 = v[u * k..(u + 1) * k].iter().sum();
            for x in &mut v[u * k..(u + 1) * k] {
                *x /= s;
            }
        }
        v
    })
}

fn path_instance(n: usize, k: usize, costs: Vec<f64>, weights: Vec<f64>) -> Instance {
    let edges = (1..n).map(|u| (u - 1, u, weights[u - 1])).collect();
    Instance::new(n, k, costs, edges).unwrap()
}

proptest! {
    #[test]
    fn lstar_projection_is_always_feasible(
        marg in normalized_marginals(4, 3),
        weights in proptest::collection::vec(0.1f64..2.0, 3),
    ) {
        let inst = path_instance(4, 3, vec![0.0; 12], weights);
        let sol = project_to_lstar(&marg, &inst).unwrap();
        prop_assert!(sol.verify(&inst, 1e-7).is_ok());
    }

    #[test]
    fn energy_shifts_by_n_times_constant(
        costs in proptest::collection::vec(-3.0f64..3.0, 8),
        weights in proptest::collection::vec(0.1f64..2.0, 3),
        labels in proptest::collection::vec(0usize..2, 4),
        shift in -5.0f64..5.0,
    ) {
        let inst = path_instance(4, 2, costs.clone(), weights.clone());
        let shifted = path_instance(
            4,
            2,
            costs.iter().map(|c| c + shift).collect(),
            weights,
        );
        let x = Labeling::new(labels);
        let a = energy(&inst, &x).unwrap();
        let b = energy(&shifted, &x).unwrap();
        prop_assert!((b - a - 4.0 * shift).abs() < 1e-9);
    }

    #[test]
    fn recovery_error_is_a_metric_on_marginals(
        a in normalized_marginals(3, 2),
        b in normalized_marginals(3, 2),
        c in normalized_marginals(3, 2),
    ) {
        let ab = recovery_error(&a, &b).unwrap();
        let ba = recovery_error(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(recovery_error(&a, &a).unwrap() == 0.0);
        let ac = recovery_error(&a, &c).unwrap();
        let cb = recovery_error(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        // bounded by the node count
        prop_assert!(ab <= 3.0 + 1e-12);
    }
}
