use accmarket::dynamics::analytic::{analytic_outcome, run_analytic_dynamics, AnalyticConfig};
use accmarket::dynamics::potential::{potential, scaled_potential};
use accmarket::dynamics::{is_stable, run_dynamics, DynamicsConfig, Init, ProviderSpec};
use accmarket::learners::{LearnerConfig, Loss};
use accmarket::market::{market_shares, CorrectnessMatrix};
use accmarket::threshold::{optimal_threshold, GaussianMarketSpec};
use accmarket::{Classifier, Dataset};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Dataset> {
    (4usize..=30, 1usize..=3).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(-3i32..3, d), m),
            prop::collection::vec(any::<bool>(), m),
        )
            .prop_map(|(xs, ys)| {
                let rows = xs.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                Dataset::new(rows, ys.into_iter().map(|y| if y { 1 } else { -1 }).collect()).unwrap()
            })
    })
}

/// Potential from its definition: every example served by k providers adds
/// -(1 + 1/2 + ... + 1/k).
fn potential_oracle(rows: &[Vec<bool>]) -> f64 {
    (0..rows[0].len())
        .map(|j| {
            let k = rows.iter().filter(|r| r[j]).count();
            -(1..=k).map(|t| 1.0 / t as f64).sum::<f64>()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stump_dynamics_descend_the_potential(data in table(), n in 2usize..=4) {
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::stump(), n).with_rounds(100);
        let t = run_dynamics(&cfg, &data, None).unwrap();
        prop_assert!(t.converged);
        prop_assert!(is_stable(&cfg, &data, &t.classifiers).unwrap());
        for pair in t.steps.windows(2) {
            let mover = pair[1].mover.unwrap();
            let gain = pair[1].share_numerators[mover] - pair[0].share_numerators[mover];
            prop_assert!(gain > 0);
            prop_assert_eq!(pair[1].scaled_potential - pair[0].scaled_potential, -gain);
        }
    }

    #[test]
    fn potential_matches_its_definition(
        rows in (1usize..=5, 1usize..=20)
            .prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(any::<bool>(), m), n))
    ) {
        let c = CorrectnessMatrix::new(rows.clone()).unwrap();
        prop_assert!((potential(&c) - potential_oracle(&rows)).abs() < 1e-9);
        let n = rows.len() as i128;
        let scale = (1..=n).fold(1i128, |l, k| l / gcd(l, k) * k);
        prop_assert!((scaled_potential(&c) as f64 / scale as f64 - potential_oracle(&rows)).abs() < 1e-9);
    }

    #[test]
    fn reruns_are_identical(data in table(), seed in 0u64..100) {
        let cfg = DynamicsConfig::new(vec![
            ProviderSpec::new(LearnerConfig { seed, max_iters: 50, ..LearnerConfig::linear(Loss::Logistic) }),
            ProviderSpec::new(LearnerConfig::stump()),
        ])
        .with_init(Init::IndependentFit)
        .with_rounds(5);
        let a = run_dynamics(&cfg, &data, None).unwrap();
        let b = run_dynamics(&cfg, &data, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn analytic_outcome_sums_to_welfare(
        (a, sn, sp) in (0.1f64..3.0, 0.4f64..3.0, 0.4f64..3.0),
        t1 in -3.0f64..3.0,
        t2 in -3.0f64..3.0,
    ) {
        let spec = GaussianMarketSpec::balanced(a, sn, sp).unwrap();
        let (shares, welfare) = analytic_outcome(&spec, &[t1, t2]);
        prop_assert!((shares.iter().sum::<f64>() - welfare).abs() < 1e-12);
        prop_assert!(welfare <= 1.0 + 1e-12);
        prop_assert!(welfare >= spec.accuracy(t1).max(spec.accuracy(t2)) - 1e-12);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn monopoly_does_not_move_from_the_optimum() {
    let data = Dataset::from_scalars(vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0], vec![-1, -1, 1, -1, 1, 1]).unwrap();
    let cfg = DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 1);
    let t = run_dynamics(&cfg, &data, None).unwrap();
    assert!(t.converged);
    assert_eq!(t.adopted_moves(), 0);
    assert_eq!(t.final_train().shares[0], t.final_train().accuracies[0]);
}

#[test]
fn duopoly_from_the_optimum_differentiates() {
    let spec = GaussianMarketSpec::balanced(1.0, 1.0, 1.0).unwrap();
    let t = run_analytic_dynamics(&AnalyticConfig::new(spec)).unwrap();
    let first = t.first();
    assert_eq!(first.taus, vec![optimal_threshold(&spec); 2]);
    let last = t.last();
    assert!(last.taus[0] != last.taus[1]);
    assert!(last.welfare > first.welfare);
    assert!(last.shares.iter().zip(&first.shares).all(|(a, b)| a >= b));
}

#[test]
fn explicit_start_is_respected() {
    let data = Dataset::from_scalars(vec![-1.0, 0.0, 1.0, 2.0], vec![-1, 1, -1, 1]).unwrap();
    let start = vec![Classifier::threshold(0.5), Classifier::threshold(-0.5)];
    let cfg = DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 2).with_init(Init::Explicit(start.clone()));
    let t = run_dynamics(&cfg, &data, None).unwrap();
    assert_eq!(t.initial, start);
    let c = CorrectnessMatrix::new(start.iter().map(|h| h.correct(&data).unwrap()).collect()).unwrap();
    assert_eq!(t.initial_train().shares, market_shares(&c));
}

#[test]
fn invalid_configs_are_rejected() {
    let data = Dataset::from_scalars(vec![0.0, 1.0], vec![-1, 1]).unwrap();
    let none = DynamicsConfig::new(vec![]);
    assert!(run_dynamics(&none, &data, None).is_err());
    let bad_order = DynamicsConfig::homogeneous(LearnerConfig::stump(), 2).with_order(vec![0, 0]);
    assert!(run_dynamics(&bad_order, &data, None).is_err());
    let wrong_count = DynamicsConfig::homogeneous(LearnerConfig::stump(), 2)
        .with_init(Init::Explicit(vec![Classifier::threshold(0.0)]));
    assert!(run_dynamics(&wrong_count, &data, None).is_err());
}
