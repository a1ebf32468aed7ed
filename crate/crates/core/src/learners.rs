//! Weighted empirical risk minimization: the learners providers use to
//! (approximately) best-respond once competition is folded into per-example
//! weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exact::argmax_weighted;
use crate::threshold::sweep_best_threshold;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// log(1 + exp(-y s))
    Logistic,
    /// max(0, 1 - y s)
    Hinge,
}

impl Loss {
    fn value(self, margin: f64) -> f64 {
        match self {
            // log(1 + e^{-t}) without overflow for large |t|.
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
            Loss::Hinge => (1.0 - margin).max(0.0),
        }
    }

    /// d loss / d margin.
    fn slope(self, margin: f64) -> f64 {
        match self {
            Loss::Logistic => {
                // -sigmoid(-t)
                if margin > 0.0 {
                    let e = (-margin).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + margin.exp())
                }
            }
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerKind {
    /// Linear classifier trained by full-batch gradient descent on a proxy loss.
    WeightedLinear,
    /// Exact weighted decision stump over all features.
    WeightedStump,
    /// Exact weighted threshold `x[feature] > tau`.
    Threshold { feature: usize },
    /// Exact choice among a fixed set of classifiers.
    FiniteMenu { menu: Vec<Classifier> },
}

impl LearnerKind {
    /// True for learners that maximize weighted accuracy exactly.
    pub fn is_exact(&self) -> bool {
        !matches!(self, LearnerKind::WeightedLinear)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub loss: Loss,
    /// L2 coefficient on the weights (bias is not regularized).
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Standard deviation of the seeded Gaussian initialization; 0 starts
    /// from the zero vector.
    pub init_scale: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::WeightedLinear,
            loss: Loss::Logistic,
            lambda: 1e-4,
            learning_rate: 0.1,
            max_iters: 5000,
            tol: 1e-6,
            seed: 0,
            init_scale: 0.0,
        }
    }
}

impl LearnerConfig {
    pub fn linear(loss: Loss) -> Self {
        LearnerConfig {
            loss,
            ..Default::default()
        }
    }

    pub fn stump() -> Self {
        LearnerConfig {
            kind: LearnerKind::WeightedStump,
            ..Default::default()
        }
    }

    pub fn threshold(feature: usize) -> Self {
        LearnerConfig {
            kind: LearnerKind::Threshold { feature },
            ..Default::default()
        }
    }

    pub fn menu(menu: Vec<Classifier>) -> Self {
        LearnerConfig {
            kind: LearnerKind::FiniteMenu { menu },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol {} must be > 0", self.tol)));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidParameter("init_scale must be >= 0".into()));
        }
        if let LearnerKind::FiniteMenu { menu } = &self.kind {
            if menu.is_empty() {
                return Err(Error::EmptyMenu);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub classifier: Classifier,
    /// Regularized proxy objective for linear learners; weighted 0-1 error
    /// `(1/m) sum_j w_j [wrong]` for exact learners.
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_weights(data: &Dataset, weights: &[f64]) -> Result<()> {
    if weights.len() != data.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} examples",
            weights.len(),
            data.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or non-finite")));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    Ok(())
}

/// Fit a classifier to `data` under per-example `weights`.
pub fn fit(cfg: &LearnerConfig, data: &Dataset, weights: &[f64]) -> Result<FitReport> {
    cfg.validate()?;
    check_weights(data, weights)?;
    match &cfg.kind {
        LearnerKind::WeightedLinear => fit_linear(cfg, data, weights),
        LearnerKind::WeightedStump => {
            let (classifier, score) = best_weighted_stump(data, weights);
            Ok(exact_report(classifier, score, weights, data.len()))
        }
        LearnerKind::Threshold { feature } => {
            if *feature >= data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: feature + 1,
                    found: data.dim(),
                });
            }
            let xs: Vec<f64> = data.column(*feature).collect();
            let (tau, score) = sweep_best_threshold(&xs, data.labels(), weights);
            let classifier = Classifier::Threshold {
                feature: *feature,
                tau,
            };
            Ok(exact_report(classifier, score, weights, data.len()))
        }
        LearnerKind::FiniteMenu { menu } => {
            let rows = menu.iter().map(|h| h.correct(data)).collect::<Result<Vec<_>>>()?;
            let (k, score) = argmax_weighted(rows.iter().map(Vec::as_slice), weights).ok_or(Error::EmptyMenu)?;
            Ok(exact_report(menu[k].clone(), score, weights, data.len()))
        }
    }
}

fn exact_report(classifier: Classifier, score: f64, weights: &[f64], m: usize) -> FitReport {
    let total: f64 = weights.iter().sum();
    FitReport {
        classifier,
        final_objective: (total - score) / m as f64,
        iterations: 0,
        converged: true,
    }
}

/// Exact argmax of weighted accuracy over all stumps
/// `(feature, tau, polarity)`, where `tau` ranges over `-inf` and midpoints
/// between consecutive distinct values. Returns the stump and its weighted
/// count of correct examples. Ties keep the first candidate in
/// (feature, tau, polarity +1 before -1) order.
pub fn best_weighted_stump(data: &Dataset, weights: &[f64]) -> (Classifier, f64) {
    let total: f64 = weights.iter().sum();
    let mut best: Option<(usize, f64, i8, f64)> = None;
    let labels = data.labels();
    for feature in 0..data.dim() {
        let xs: Vec<f64> = data.column(feature).collect();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));

        let mut plus: f64 = labels.iter().zip(weights).filter(|(&y, _)| y == 1).map(|(_, w)| w).sum();
        let mut consider = |tau: f64, plus: f64| {
            for (polarity, score) in [(1i8, plus), (-1i8, total - plus)] {
                if best.is_none_or(|b| score > b.3) {
                    best = Some((feature, tau, polarity, score));
                }
            }
        };
        consider(f64::NEG_INFINITY, plus);
        let mut k = 0;
        while k < order.len() {
            let v = xs[order[k]];
            while k < order.len() && xs[order[k]] == v {
                let j = order[k];
                plus += if labels[j] == 1 { -weights[j] } else { weights[j] };
                k += 1;
            }
            if k < order.len() {
                let next = xs[order[k]];
                consider(v + (next - v) / 2.0, plus);
            }
        }
    }
    let (feature, tau, polarity, score) = best.expect("data has at least one feature");
    (
        Classifier::Stump {
            feature,
            tau,
            polarity,
        },
        score,
    )
}

/// Regularized weighted proxy objective and its gradient at `(theta, bias)`.
pub fn objective_and_gradient(
    cfg: &LearnerConfig,
    data: &Dataset,
    weights: &[f64],
    theta: &[f64],
    bias: f64,
) -> (f64, Vec<f64>, f64) {
    let m = data.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; theta.len()];
    let mut grad_b = 0.0;
    for ((x, &y), &w) in data.rows().zip(data.labels()).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let s: f64 = theta.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() + bias;
        let y = y as f64;
        let margin = y * s;
        value += w * cfg.loss.value(margin);
        let g = w * cfg.loss.slope(margin) * y;
        for (gk, xk) in grad.iter_mut().zip(x) {
            *gk += g * xk;
        }
        grad_b += g;
    }
    value /= m;
    grad_b /= m;
    let mut reg = 0.0;
    for (gk, tk) in grad.iter_mut().zip(theta) {
        *gk = *gk / m + 2.0 * cfg.lambda * tk;
        reg += tk * tk;
    }
    (value + cfg.lambda * reg, grad, grad_b)
}

/// The regularized weighted empirical proxy loss of a linear classifier.
pub fn objective(cfg: &LearnerConfig, data: &Dataset, weights: &[f64], classifier: &Classifier) -> Result<f64> {
    check_weights(data, weights)?;
    match classifier {
        Classifier::Linear { weights: theta, bias } => {
            classifier.check(data)?;
            Ok(objective_and_gradient(cfg, data, weights, theta, *bias).0)
        }
        other => Err(Error::KindMismatch(format!(
            "proxy objective needs a linear classifier, got {}",
            other.kind_name()
        ))),
    }
}

/// One gradient-descent iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub theta: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

/// Runs gradient descent and calls `visit` on every iterate, starting with
/// the initialization. Returns `(theta, bias, objective, steps, converged)`.
fn descend(
    cfg: &LearnerConfig,
    data: &Dataset,
    weights: &[f64],
    mut visit: impl FnMut(&Iterate),
) -> Result<(Iterate, usize, bool)> {
    let d = data.dim();
    let mut theta = if cfg.init_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..d)
            .map(|_| cfg.init_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect()
    } else {
        vec![0.0; d]
    };
    let mut bias = 0.0;
    let mut steps = 0;
    loop {
        let (value, grad, grad_b) = objective_and_gradient(cfg, data, weights, &theta, bias);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: steps });
        }
        let it = Iterate {
            theta: theta.clone(),
            bias,
            objective: value,
        };
        visit(&it);
        let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if norm < cfg.tol {
            return Ok((it, steps, true));
        }
        if steps == cfg.max_iters {
            return Ok((it, steps, false));
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= cfg.learning_rate * g;
        }
        bias -= cfg.learning_rate * grad_b;
        steps += 1;
    }
}

fn fit_linear(cfg: &LearnerConfig, data: &Dataset, weights: &[f64]) -> Result<FitReport> {
    let (last, iterations, converged) = descend(cfg, data, weights, |_| {})?;
    Ok(FitReport {
        classifier: Classifier::Linear {
            weights: last.theta,
            bias: last.bias,
        },
        final_objective: last.objective,
        iterations,
        converged,
    })
}

/// Every gradient-descent iterate of a linear fit, initialization included.
pub fn descent_path(cfg: &LearnerConfig, data: &Dataset, weights: &[f64]) -> Result<Vec<Iterate>> {
    cfg.validate()?;
    check_weights(data, weights)?;
    if cfg.kind != LearnerKind::WeightedLinear {
        return Err(Error::KindMismatch("descent path needs a linear learner".into()));
    }
    let mut path = Vec::new();
    descend(cfg, data, weights, |it| path.push(it.clone()))?;
    Ok(path)
}

/// Weighted fraction of correct examples, `(1/m) sum_j w_j [h(x_j) = y_j]`.
pub fn weighted_accuracy(h: &Classifier, data: &Dataset, weights: &[f64]) -> Result<f64> {
    let correct = h.correct(data)?;
    Ok(correct.iter().zip(weights).filter(|(&c, _)| c).map(|(_, w)| w).sum::<f64>() / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_data(rng: &mut ChaCha8Rng, m: usize, d: usize, levels: i32) -> Dataset {
        let rows = (0..m)
            .map(|_| (0..d).map(|_| rng.random_range(0..levels) as f64).collect())
            .collect();
        let labels = (0..m).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        Dataset::new(rows, labels).unwrap()
    }

    /// Exhaustive oracle: evaluate every (feature, candidate tau, polarity).
    fn stump_oracle(data: &Dataset, w: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for f in 0..data.dim() {
            let mut vals: Vec<f64> = data.column(f).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut taus = vec![f64::NEG_INFINITY];
            taus.extend(vals.windows(2).map(|p| p[0] + (p[1] - p[0]) / 2.0));
            for tau in taus {
                for polarity in [1i8, -1] {
                    let h = Classifier::Stump { feature: f, tau, polarity };
                    let s: f64 = h
                        .correct(data)
                        .unwrap()
                        .iter()
                        .zip(w)
                        .filter(|(&c, _)| c)
                        .map(|(_, w)| w)
                        .sum();
                    best = best.max(s);
                }
            }
        }
        best
    }

    #[test]
    fn stump_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.random_range(1..60);
            let d = rng.random_range(1..4);
            let data = random_data(&mut rng, m, d, 8);
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(1..7) as f64).collect();
            let (h, score) = best_weighted_stump(&data, &w);
            assert_eq!(score, stump_oracle(&data, &w));
            assert_abs_diff_eq!(weighted_accuracy(&h, &data, &w).unwrap() * m as f64, score, epsilon = 1e-9);
        }
    }

    #[test]
    fn random_fifty_point_stump() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let rows = (0..50).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let labels = (0..50).map(|_| if rng.random_bool(0.4) { 1 } else { -1 }).collect();
        let data = Dataset::new(rows, labels).unwrap();
        let w: Vec<f64> = (0..50).map(|_| rng.random_range(0.1..1.0)).collect();
        let fit = fit(&LearnerConfig::stump(), &data, &w).unwrap();
        let got = weighted_accuracy(&fit.classifier, &data, &w).unwrap();
        assert_abs_diff_eq!(got, stump_oracle(&data, &w) / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn separable_logistic_reaches_full_accuracy() {
        let rows = vec![
            vec![2.0, 1.0],
            vec![1.5, 2.0],
            vec![3.0, 0.5],
            vec![-2.0, -1.0],
            vec![-1.0, -2.5],
            vec![-3.0, 0.0],
        ];
        let data = Dataset::new(rows, vec![1, 1, 1, -1, -1, -1]).unwrap();
        let w = vec![1.0; 6];
        let rep = fit(&LearnerConfig::linear(Loss::Logistic), &data, &w).unwrap();
        assert!(rep.iterations <= 5000);
        assert_eq!(weighted_accuracy(&rep.classifier, &data, &w).unwrap(), 1.0);
    }

    #[test]
    fn point_mass_weights_fit_that_point() {
        let data = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![-1, 1, -1]).unwrap();
        for j in 0..3 {
            let mut w = vec![0.0; 3];
            w[j] = 1.0;
            for cfg in [LearnerConfig::linear(Loss::Logistic), LearnerConfig::linear(Loss::Hinge), LearnerConfig::stump()] {
                let rep = fit(&cfg, &data, &w).unwrap();
                assert!(rep.classifier.correct(&data).unwrap()[j], "{cfg:?} misses point {j}");
            }
        }
    }

    #[test]
    fn weight_validation() {
        let data = Dataset::new(vec![vec![1.0], vec![2.0]], vec![-1, 1]).unwrap();
        let cfg = LearnerConfig::stump();
        assert!(matches!(fit(&cfg, &data, &[0.0, 0.0]), Err(Error::InvalidWeights(_))));
        assert!(matches!(fit(&cfg, &data, &[1.0]), Err(Error::InvalidWeights(_))));
        assert!(matches!(fit(&cfg, &data, &[-1.0, 2.0]), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let data = Dataset::new(vec![vec![1e150], vec![2e150]], vec![1, 1]).unwrap();
        let cfg = LearnerConfig {
            learning_rate: 1e10,
            ..LearnerConfig::linear(Loss::Hinge)
        };
        assert!(matches!(fit(&cfg, &data, &[1.0, 1.0]), Err(Error::NonFiniteObjective { .. })));
    }

    #[test]
    fn objective_examples() {
        let data = Dataset::new(vec![vec![2.0], vec![-3.0], vec![0.5]], vec![1, -1, 1]).unwrap();
        let w = [0.5, 1.0, 0.25];
        let zero = Classifier::Linear { weights: vec![0.0], bias: 0.0 };
        let lg = LearnerConfig { lambda: 0.0, ..LearnerConfig::linear(Loss::Logistic) };
        assert_abs_diff_eq!(
            objective(&lg, &data, &w, &zero).unwrap(),
            1.75 / 3.0 * std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let hg = LearnerConfig { lambda: 0.0, ..LearnerConfig::linear(Loss::Hinge) };
        let sep = Classifier::Linear { weights: vec![2.0], bias: 0.0 };
        assert_eq!(objective(&hg, &data, &w, &sep).unwrap(), 0.0);
        assert!(matches!(
            objective(&hg, &data, &w, &Classifier::threshold(0.0)),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = {
            let rows = (0..40).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let labels = (0..40).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            Dataset::new(rows, labels).unwrap()
        };
        let w: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..1.0)).collect();
        for loss in [Loss::Logistic, Loss::Hinge] {
            let cfg = LearnerConfig { lambda: 0.01, ..LearnerConfig::linear(loss) };
            let mut checked = 0;
            while checked < 20 {
                let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let bias = rng.random_range(-1.0..1.0);
                if loss == Loss::Hinge && near_kink(&data, &theta, bias) {
                    continue;
                }
                let (_, g, gb) = objective_and_gradient(&cfg, &data, &w, &theta, bias);
                let h = 1e-6;
                let f = |t: &[f64], b: f64| objective_and_gradient(&cfg, &data, &w, t, b).0;
                for k in 0..3 {
                    let mut tp = theta.clone();
                    let mut tm = theta.clone();
                    tp[k] += h;
                    tm[k] -= h;
                    let fd = (f(&tp, bias) - f(&tm, bias)) / (2.0 * h);
                    assert!((fd - g[k]).abs() <= 1e-4 * g[k].abs().max(1e-3), "{loss:?} d{k}: {fd} vs {}", g[k]);
                }
                let fd = (f(&theta, bias + h) - f(&theta, bias - h)) / (2.0 * h);
                assert!((fd - gb).abs() <= 1e-4 * gb.abs().max(1e-3));
                checked += 1;
            }
        }
    }

    fn near_kink(data: &Dataset, theta: &[f64], bias: f64) -> bool {
        data.rows().zip(data.labels()).any(|(x, &y)| {
            let s: f64 = theta.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() + bias;
            (1.0 - y as f64 * s).abs() <= 1e-3
        })
    }

    #[test]
    fn logistic_descent_is_monotone() {
        let data = Dataset::new(
            vec![vec![1.0, 0.2], vec![0.3, -1.0], vec![-0.5, 0.7], vec![2.0, 2.0], vec![-1.5, -0.3]],
            vec![1, -1, 1, 1, -1],
        )
        .unwrap();
        let w = [0.5, 1.0, 1.0, 0.25, 1.0 / 3.0];
        let cfg = LearnerConfig { learning_rate: 0.05, max_iters: 400, ..LearnerConfig::linear(Loss::Logistic) };
        let path = descent_path(&cfg, &data, &w).unwrap();
        assert!(path.windows(2).all(|p| p[1].objective <= p[0].objective));
    }

    #[test]
    fn scaled_weights_and_learning_rate_reproduce_iterates() {
        let data = Dataset::new(
            vec![vec![1.0, 0.2], vec![0.3, -1.0], vec![-0.5, 0.7], vec![2.0, 2.0]],
            vec![1, -1, -1, 1],
        )
        .unwrap();
        let w = [0.5, 1.0, 0.75, 0.25];
        let base = LearnerConfig { lambda: 0.0, max_iters: 50, ..LearnerConfig::linear(Loss::Logistic) };
        let a = descent_path(&base, &data, &w).unwrap();
        let w4: Vec<f64> = w.iter().map(|x| 4.0 * x).collect();
        let scaled = LearnerConfig { learning_rate: base.learning_rate / 4.0, ..base.clone() };
        let b = descent_path(&scaled, &data, &w4).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.theta, y.theta);
            assert_eq!(x.bias, y.bias);
        }
    }

    #[test]
    fn exact_argmax_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let data = random_data(&mut rng, 30, 2, 6);
            let w: Vec<f64> = (0..30).map(|_| rng.random_range(1..5) as f64).collect();
            let w3: Vec<f64> = w.iter().map(|x| 3.0 * x).collect();
            let menu: Vec<Classifier> = (0..4)
                .map(|k| Classifier::Stump { feature: k % 2, tau: k as f64, polarity: 1 })
                .collect();
            for cfg in [LearnerConfig::stump(), LearnerConfig::menu(menu.clone())] {
                assert_eq!(fit(&cfg, &data, &w).unwrap().classifier, fit(&cfg, &data, &w3).unwrap().classifier);
            }
        }
    }

    #[test]
    fn seeded_initialization_is_reproducible() {
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, -1]).unwrap();
        let cfg = LearnerConfig { init_scale: 0.5, seed: 9, max_iters: 3, ..Default::default() };
        assert_eq!(descent_path(&cfg, &data, &[1.0, 1.0]).unwrap(), descent_path(&cfg, &data, &[1.0, 1.0]).unwrap());
    }
}
