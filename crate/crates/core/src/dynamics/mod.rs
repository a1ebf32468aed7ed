//! Sequential best-response dynamics.
//!
//! Providers take turns in a fixed order. On its turn a provider refits
//! against competition weights derived from everyone else's current
//! predictions and adopts the fit only if its train market share improves.

pub mod analytic;
pub mod potential;
pub mod studies;

use std::borrow::Cow;

use serde::Serialize;

use crate::classifier::{fingerprint, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit, LearnerConfig};
use crate::market::{
    hhi_of_shares, ratio, tie_denominator, weighted_numerator, CorrectnessMatrix, MarketOutcome,
    MAX_DECOMPOSITION_PROVIDERS,
};

pub use potential::{potential, scaled_potential};

/// Improvement threshold used for gradient learners when none is configured.
pub const GRADIENT_EPSILON: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProviderSpec {
    pub learner: LearnerConfig,
    /// Number of leading feature columns this provider may use; `None` = all.
    pub features: Option<usize>,
}

impl ProviderSpec {
    pub fn new(learner: LearnerConfig) -> Self {
        ProviderSpec { learner, features: None }
    }

    pub fn with_features(mut self, k: usize) -> Self {
        self.features = Some(k);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "classifiers", rename_all = "snake_case")]
pub enum Init {
    /// One uniform-weight fit shared by every provider.
    SharedOptimum,
    /// Each provider fits with uniform weights using its own learner.
    IndependentFit,
    Explicit(Vec<Classifier>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsConfig {
    pub providers: Vec<ProviderSpec>,
    /// Order of play as a permutation of provider indices; `None` = identity.
    pub order: Option<Vec<usize>>,
    pub rounds: usize,
    /// Minimum share improvement for a move to be adopted. `None` picks 0
    /// for exact learners and [`GRADIENT_EPSILON`] otherwise.
    pub epsilon: Option<f64>,
    pub init: Init,
}

impl DynamicsConfig {
    pub fn new(providers: Vec<ProviderSpec>) -> Self {
        DynamicsConfig {
            providers,
            order: None,
            rounds: 50,
            epsilon: None,
            init: Init::SharedOptimum,
        }
    }

    /// `n` providers sharing one learner configuration.
    pub fn homogeneous(learner: LearnerConfig, n: usize) -> Self {
        Self::new(vec![ProviderSpec::new(learner); n])
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.order = Some(order);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn n(&self) -> usize {
        self.providers.len()
    }

    pub fn play_order(&self) -> Vec<usize> {
        self.order.clone().unwrap_or_else(|| (0..self.n()).collect())
    }

    pub fn epsilon_for(&self, i: usize) -> f64 {
        self.epsilon.unwrap_or(if self.providers[i].learner.kind.is_exact() {
            0.0
        } else {
            GRADIENT_EPSILON
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidParameter("at least one provider is required".into()));
        }
        if n > MAX_DECOMPOSITION_PROVIDERS {
            return Err(Error::TooManyProviders {
                n,
                limit: MAX_DECOMPOSITION_PROVIDERS,
            });
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon {e} must be >= 0")));
            }
        }
        if let Some(order) = &self.order {
            let mut seen = vec![false; n];
            if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::InvalidParameter(format!(
                    "order {order:?} is not a permutation of 0..{n}"
                )));
            }
        }
        for p in &self.providers {
            p.learner.validate()?;
        }
        match &self.init {
            Init::SharedOptimum => {
                let first = &self.providers[0];
                let same = self.providers.iter().all(|p| {
                    p.features == first.features
                        && LearnerConfig {
                            seed: first.learner.seed,
                            ..p.learner.clone()
                        } == first.learner
                });
                if !same {
                    return Err(Error::InvalidParameter(
                        "a shared optimum needs identical learners and feature sets".into(),
                    ));
                }
            }
            Init::Explicit(hs) if hs.len() != n => {
                return Err(Error::InvalidParameter(format!(
                    "{} initial classifiers for {n} providers",
                    hs.len()
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// One logged state: the initialization (`mover = None`) or an adopted move.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub round: usize,
    pub mover: Option<usize>,
    /// Prediction fingerprints of every provider on the train data.
    pub fingerprints: Vec<String>,
    pub shares: Vec<f64>,
    pub welfare: f64,
    pub hhi: Option<f64>,
    pub potential: f64,
    /// Share numerators over `scale * m`.
    pub share_numerators: Vec<i128>,
    /// `potential * scale`.
    pub scaled_potential: i128,
}

/// Full outcomes at a round boundary (round 0 is the initialization).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub adopted: usize,
    pub train: MarketOutcome,
    pub test: Option<MarketOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub m: usize,
    /// `lcm(1..=n)`; exact quantities are over `scale * m` (shares) or
    /// `scale` (potential).
    pub scale: i128,
    pub order: Vec<usize>,
    pub steps: Vec<Step>,
    pub rounds: Vec<RoundSummary>,
    pub converged: bool,
    pub initial: Vec<Classifier>,
    pub classifiers: Vec<Classifier>,
}

impl Trajectory {
    pub fn final_train(&self) -> &MarketOutcome {
        &self.rounds.last().expect("round 0 is always recorded").train
    }

    pub fn final_test(&self) -> Option<&MarketOutcome> {
        self.rounds.last().and_then(|r| r.test.as_ref())
    }

    pub fn initial_train(&self) -> &MarketOutcome {
        &self.rounds[0].train
    }

    pub fn adopted_moves(&self) -> usize {
        self.steps.len() - 1
    }

    /// Rounds actually played (excluding initialization).
    pub fn rounds_played(&self) -> usize {
        self.rounds.len() - 1
    }
}

/// Each provider's view of a dataset (a column prefix or the whole thing).
fn views<'a>(cfg: &DynamicsConfig, data: &'a Dataset) -> Result<Vec<Cow<'a, Dataset>>> {
    cfg.providers
        .iter()
        .map(|p| match p.features {
            None => Ok(Cow::Borrowed(data)),
            Some(k) => Ok(Cow::Owned(data.prefix_columns(k)?)),
        })
        .collect()
}

fn learner_error(provider: usize, round: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Learner {
        provider,
        round,
        source: Box::new(e),
    }
}

fn initial_classifiers(cfg: &DynamicsConfig, views: &[Cow<'_, Dataset>]) -> Result<Vec<Classifier>> {
    let uniform = vec![1.0; views[0].len()];
    match &cfg.init {
        Init::SharedOptimum => {
            let h = fit(&cfg.providers[0].learner, &views[0], &uniform).map_err(learner_error(0, 0))?;
            Ok(vec![h.classifier; cfg.n()])
        }
        Init::IndependentFit => cfg
            .providers
            .iter()
            .zip(views)
            .enumerate()
            .map(|(i, (p, v))| {
                fit(&p.learner, v, &uniform)
                    .map(|r| r.classifier)
                    .map_err(learner_error(i, 0))
            })
            .collect(),
        Init::Explicit(hs) => {
            for (h, v) in hs.iter().zip(views) {
                h.check(v)?;
            }
            Ok(hs.clone())
        }
    }
}

fn correctness_on(classifiers: &[Classifier], views: &[Cow<'_, Dataset>]) -> Result<CorrectnessMatrix> {
    let rows = classifiers
        .iter()
        .zip(views)
        .map(|(h, v)| h.correct(v))
        .collect::<Result<Vec<_>>>()?;
    CorrectnessMatrix::with_columns(rows, views[0].len())
}

fn prediction_fingerprint(row: &[bool], labels: &[i8]) -> String {
    let preds: Vec<i8> = row.iter().zip(labels).map(|(&c, &y)| if c { y } else { -y }).collect();
    format!("{:016x}", fingerprint(&preds))
}

/// Mutable game state with exact bookkeeping.
struct State<'a> {
    labels: &'a [i8],
    scale: i128,
    rows: Vec<Vec<bool>>,
    kappa: Vec<u32>,
    fingerprints: Vec<String>,
}

impl State<'_> {
    fn others(&self, i: usize) -> Vec<u32> {
        self.kappa.iter().zip(&self.rows[i]).map(|(&k, &e)| k - e as u32).collect()
    }

    fn replace(&mut self, i: usize, row: Vec<bool>) {
        for ((k, &old), &new) in self.kappa.iter_mut().zip(&self.rows[i]).zip(&row) {
            *k = *k - old as u32 + new as u32;
        }
        self.fingerprints[i] = prediction_fingerprint(&row, self.labels);
        self.rows[i] = row;
    }

    fn step(&self, round: usize, mover: Option<usize>) -> Step {
        let m = self.labels.len();
        let numerators: Vec<i128> = (0..self.rows.len())
            .map(|i| weighted_numerator(&self.rows[i], &self.others(i), self.scale))
            .collect();
        let den = self.scale * m as i128;
        let shares: Vec<f64> = numerators.iter().map(|&x| ratio(x, den)).collect();
        let scaled = potential::scaled_potential_from_counts(&self.kappa, self.scale);
        Step {
            round,
            mover,
            fingerprints: self.fingerprints.clone(),
            hhi: hhi_of_shares(&shares),
            shares,
            welfare: self.kappa.iter().filter(|&&k| k > 0).count() as f64 / m as f64,
            potential: scaled as f64 / self.scale as f64,
            share_numerators: numerators,
            scaled_potential: scaled,
        }
    }

    fn matrix(&self) -> Result<CorrectnessMatrix> {
        CorrectnessMatrix::with_columns(self.rows.clone(), self.labels.len())
    }
}

/// Competition weights for a learner: exact learners get the integer-valued
/// weights `scale / (1 + kappa)` so their weighted sums are exact.
fn weights_for(learner: &LearnerConfig, others: &[u32], scale: i128) -> Vec<f64> {
    if learner.kind.is_exact() {
        others.iter().map(|&k| (scale / (1 + k as i128)) as f64).collect()
    } else {
        others.iter().map(|&k| 1.0 / (1.0 + k as f64)).collect()
    }
}

fn improves(new: i128, current: i128, den: i128, epsilon: f64) -> bool {
    if epsilon == 0.0 {
        new > current
    } else {
        ratio(new - current, den) > epsilon
    }
}

/// Runs best-response dynamics on `train`, optionally reporting outcomes on
/// `test` at every round boundary.
pub fn run_dynamics(cfg: &DynamicsConfig, train: &Dataset, test: Option<&Dataset>) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.n();
    let m = train.len();
    let train_views = views(cfg, train)?;
    let test_views = test.map(|t| views(cfg, t)).transpose()?;
    let order = cfg.play_order();
    let scale = tie_denominator(n);
    let den = scale * m as i128;

    let initial = initial_classifiers(cfg, &train_views)?;
    let mut classifiers = initial.clone();
    let c0 = correctness_on(&classifiers, &train_views)?;
    let mut state = State {
        labels: train.labels(),
        scale,
        kappa: c0.column_counts(),
        fingerprints: (0..n).map(|i| prediction_fingerprint(c0.row(i), train.labels())).collect(),
        rows: (0..n).map(|i| c0.row(i).to_vec()).collect(),
    };

    let summary = |round: usize, adopted: usize, state: &State, classifiers: &[Classifier]| -> Result<RoundSummary> {
        Ok(RoundSummary {
            round,
            adopted,
            train: MarketOutcome::from_correctness(&state.matrix()?)?,
            test: match &test_views {
                Some(v) => Some(MarketOutcome::from_correctness(&correctness_on(classifiers, v)?)?),
                None => None,
            },
        })
    };

    let mut steps = vec![state.step(0, None)];
    let mut rounds = vec![summary(0, 0, &state, &classifiers)?];
    let mut converged = false;
    for round in 1..=cfg.rounds {
        let mut adopted = 0;
        for &i in &order {
            let learner = &cfg.providers[i].learner;
            let others = state.others(i);
            let weights = weights_for(learner, &others, scale);
            let report = fit(learner, &train_views[i], &weights).map_err(learner_error(i, round))?;
            let row = report.classifier.correct(&train_views[i]).map_err(learner_error(i, round))?;
            let new = weighted_numerator(&row, &others, scale);
            let current = weighted_numerator(&state.rows[i], &others, scale);
            if improves(new, current, den, cfg.epsilon_for(i)) {
                state.replace(i, row);
                classifiers[i] = report.classifier;
                steps.push(state.step(round, Some(i)));
                adopted += 1;
            }
        }
        rounds.push(summary(round, adopted, &state, &classifiers)?);
        if adopted == 0 {
            converged = true;
            break;
        }
    }

    Ok(Trajectory {
        n,
        m,
        scale,
        order,
        steps,
        rounds,
        converged,
        initial,
        classifiers,
    })
}

/// True when no provider's learner finds a move the engine would adopt
/// against the others' `classifiers`.
pub fn is_stable(cfg: &DynamicsConfig, train: &Dataset, classifiers: &[Classifier]) -> Result<bool> {
    cfg.validate()?;
    let train_views = views(cfg, train)?;
    let c = correctness_on(classifiers, &train_views)?;
    let scale = tie_denominator(cfg.n());
    let kappa = c.column_counts();
    #[allow(clippy::needless_range_loop)]
    for i in 0..cfg.n() {
        let others: Vec<u32> = kappa.iter().zip(c.row(i)).map(|(&k, &e)| k - e as u32).collect();
        let learner = &cfg.providers[i].learner;
        let report = fit(learner, &train_views[i], &weights_for(learner, &others, scale))?;
        let new = weighted_numerator(&report.classifier.correct(&train_views[i])?, &others, scale);
        let current = weighted_numerator(c.row(i), &others, scale);
        if improves(new, current, scale * train.len() as i128, cfg.epsilon_for(i)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Train outcome of `classifiers` under the provider feature views of `cfg`.
pub fn evaluate_providers(cfg: &DynamicsConfig, data: &Dataset, classifiers: &[Classifier]) -> Result<MarketOutcome> {
    let v = views(cfg, data)?;
    MarketOutcome::from_correctness(&correctness_on(classifiers, &v)?)
}
