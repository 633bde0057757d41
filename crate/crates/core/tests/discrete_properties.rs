use nalgebra::DMatrix;
use proptest::prelude::*;
use wrisk_core::discrete_transport::{
    discrete_worst_case, plan_cost, relative_entropy, wasserstein_distance, CostMatrix,
    DiscreteDistribution, TransportPlan,
};
use wrisk_core::RobustnessParams;

const N: usize = 5;

fn labels() -> Vec<String> {
    (0..N).map(|i| format!("r{i}")).collect()
}

fn dist() -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(0.01f64..1.0, N)
        .prop_map(|w| DiscreteDistribution::from_weights(labels(), w).unwrap())
}

fn positions() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..2.0, N).prop_map(|gaps| {
        gaps.iter()
            .scan(0.0, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_entropy_is_nonnegative(q in dist(), p in dist()) {
        let re = relative_entropy(&q, &p).unwrap();
        prop_assert!(re >= 0.0);
        prop_assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        let gap: f64 = q.probs().iter().zip(p.probs()).map(|(a, b)| (a - b).abs()).sum();
        if gap > 1e-6 {
            prop_assert!(re > 0.0);
        }
    }

    #[test]
    fn distance_is_a_metric(p in dist(), q in dist(), r in dist(), pos in positions()) {
        let cost = CostMatrix::ladder(&pos, 1).unwrap();
        let pq = wasserstein_distance(&p, &q, &cost).unwrap().distance;
        let qp = wasserstein_distance(&q, &p, &cost).unwrap().distance;
        let pr = wasserstein_distance(&p, &r, &cost).unwrap().distance;
        let rq = wasserstein_distance(&r, &q, &cost).unwrap().distance;
        prop_assert!((pq - qp).abs() < 1e-9);
        prop_assert!(pq <= pr + rq + 1e-9);
    }

    #[test]
    fn feasible_plans_cost_at_least_the_distance(p in dist(), q in dist(), pos in positions(), power in 1u32..3) {
        let cost = CostMatrix::ladder(&pos, power).unwrap();
        let w = wasserstein_distance(&p, &q, &cost).unwrap();
        let product = DMatrix::from_fn(N, N, |i, j| p.probs()[i] * q.probs()[j]);
        let c = plan_cost(&TransportPlan::new(product).unwrap(), &cost).unwrap();
        prop_assert!(c >= w.distance.powi(power as i32) - 1e-9);
        prop_assert!((w.cost - w.distance.powi(power as i32)).abs() < 1e-9);
        let rows = w.plan.row_sums();
        let cols = w.plan.col_sums();
        for i in 0..N {
            prop_assert!((rows[i] - p.probs()[i]).abs() < 1e-9);
            prop_assert!((cols[i] - q.probs()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn worst_case_is_normalized_and_monotone_in_loss(
        p in dist(),
        prior in dist(),
        pos in positions(),
        loss in prop::collection::vec(-1.0f64..1.0, N),
        alpha in 0.1f64..2.0,
        beta in 0.1f64..2.0,
        j in 0..N,
        bump in 0.0f64..1.0,
    ) {
        let cost = CostMatrix::ladder(&pos, 2).unwrap();
        let params = RobustnessParams::wasserstein(alpha, beta).unwrap();
        let q = discrete_worst_case(&p, &loss, &cost, &params, &prior).unwrap();
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(q.probs().iter().all(|&v| v > 0.0));
        let mut raised = loss.clone();
        raised[j] += bump;
        let q2 = discrete_worst_case(&p, &raised, &cost, &params, &prior).unwrap();
        prop_assert!(q2.probs()[j] >= q.probs()[j] - 1e-15);
    }
}
