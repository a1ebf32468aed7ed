use accmarket::learners::{
    best_weighted_stump, descent_path, fit, objective, objective_and_gradient, weighted_accuracy, LearnerConfig, Loss,
};
use accmarket::{Classifier, Dataset};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = (Dataset, Vec<f64>)> {
    (1usize..=25, 1usize..=3).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(-4i32..4, d), m),
            prop::collection::vec(any::<bool>(), m),
            prop::collection::vec(1u32..8, m),
        )
            .prop_map(|(xs, ys, ws)| {
                let rows = xs.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                let labels = ys.into_iter().map(|y| if y { 1 } else { -1 }).collect();
                let weights = ws.into_iter().map(f64::from).collect();
                (Dataset::new(rows, labels).unwrap(), weights)
            })
    })
}

/// Weighted correct count of the stump, computed row by row.
fn stump_score(data: &Dataset, w: &[f64], feature: usize, tau: f64, polarity: i8) -> f64 {
    (0..data.len())
        .filter(|&j| (if data.value(j, feature) > tau { polarity } else { -polarity }) == data.label(j))
        .map(|j| w[j])
        .sum()
}

proptest! {
    #[test]
    fn stump_is_the_exhaustive_optimum((data, w) in dataset()) {
        let mut best = f64::NEG_INFINITY;
        for f in 0..data.dim() {
            let mut taus: Vec<f64> = data.column(f).collect();
            taus.push(f64::NEG_INFINITY);
            for &t in &taus {
                for p in [1i8, -1] {
                    best = best.max(stump_score(&data, &w, f, t, p));
                }
            }
        }
        let (h, score) = best_weighted_stump(&data, &w);
        prop_assert_eq!(score, best);
        let Classifier::Stump { feature, tau, polarity } = h else { panic!("not a stump") };
        prop_assert_eq!(stump_score(&data, &w, feature, tau, polarity), best);

        let report = fit(&LearnerConfig::stump(), &data, &w).unwrap();
        let acc = weighted_accuracy(&report.classifier, &data, &w).unwrap();
        prop_assert!((acc - best / data.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn stump_choice_ignores_weight_scale((data, w) in dataset(), k in -8i32..8) {
        let c = 2f64.powi(k);
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        prop_assert_eq!(best_weighted_stump(&data, &w).0, best_weighted_stump(&data, &scaled).0);
    }

    #[test]
    fn threshold_learner_is_optimal_on_its_feature((data, w) in dataset()) {
        let report = fit(&LearnerConfig::threshold(0), &data, &w).unwrap();
        let got = weighted_accuracy(&report.classifier, &data, &w).unwrap();
        let mut taus: Vec<f64> = data.column(0).collect();
        taus.push(f64::NEG_INFINITY);
        for t in taus {
            let other = weighted_accuracy(&Classifier::threshold(t), &data, &w).unwrap();
            prop_assert!(other <= got + 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(
        (data, w) in dataset(),
        theta in prop::collection::vec(-1.0f64..1.0, 3),
        bias in -1.0f64..1.0,
    ) {
        let cfg = LearnerConfig { lambda: 0.01, ..LearnerConfig::linear(Loss::Logistic) };
        let theta = &theta[..data.dim()];
        let (_, grad, grad_b) = objective_and_gradient(&cfg, &data, &w, theta, bias);
        let h = 1e-6;
        let value = |t: &[f64], b: f64| objective_and_gradient(&cfg, &data, &w, t, b).0;
        for k in 0..theta.len() {
            let (mut up, mut down) = (theta.to_vec(), theta.to_vec());
            up[k] += h;
            down[k] -= h;
            let fd = (value(&up, bias) - value(&down, bias)) / (2.0 * h);
            prop_assert!((fd - grad[k]).abs() <= 1e-4 * fd.abs().max(1e-2));
        }
        let fd = (value(theta, bias + h) - value(theta, bias - h)) / (2.0 * h);
        prop_assert!((fd - grad_b).abs() <= 1e-4 * fd.abs().max(1e-2));
    }

    #[test]
    fn small_steps_never_increase_the_objective((data, w) in dataset()) {
        let cfg = LearnerConfig {
            learning_rate: 0.05,
            max_iters: 100,
            tol: f64::MIN_POSITIVE,
            ..LearnerConfig::linear(Loss::Logistic)
        };
        let path = descent_path(&cfg, &data, &w).unwrap();
        for pair in path.windows(2) {
            prop_assert!(pair[1].objective <= pair[0].objective + 1e-12);
        }
    }
}

#[test]
fn hinge_objective_by_hand() {
    let data = Dataset::from_scalars(vec![1.0, -1.0, 2.0], vec![1, -1, -1]).unwrap();
    let cfg = LearnerConfig {
        lambda: 0.0,
        ..LearnerConfig::linear(Loss::Hinge)
    };
    let h = Classifier::Linear {
        weights: vec![1.0],
        bias: 0.0,
    };
    // margins 1, 1, -2 -> losses 0, 0, 3; weights 1, 1, 2
    let value = objective(&cfg, &data, &[1.0, 1.0, 2.0], &h).unwrap();
    assert!((value - 2.0).abs() < 1e-15);
}

#[test]
fn logistic_fit_separates_a_separable_line() {
    let xs: Vec<f64> = (-10..10).map(|k| k as f64 + 0.5).collect();
    let ys = xs.iter().map(|&x| if x > 0.0 { 1 } else { -1 }).collect();
    let data = Dataset::from_scalars(xs, ys).unwrap();
    let report = fit(&LearnerConfig::linear(Loss::Logistic), &data, &[1.0; 20]).unwrap();
    assert_eq!(weighted_accuracy(&report.classifier, &data, &[1.0; 20]).unwrap(), 1.0);
}

#[test]
fn invalid_weights_are_rejected() {
    let data = Dataset::from_scalars(vec![0.0, 1.0], vec![1, -1]).unwrap();
    let cfg = LearnerConfig::stump();
    assert!(fit(&cfg, &data, &[1.0]).is_err());
    assert!(fit(&cfg, &data, &[1.0, -1.0]).is_err());
    assert!(fit(&cfg, &data, &[0.0, 0.0]).is_err());
    assert!(fit(&cfg, &data, &[f64::NAN, 1.0]).is_err());
    assert!(fit(&LearnerConfig::menu(vec![]), &data, &[1.0, 1.0]).is_err());
}
