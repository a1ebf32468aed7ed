//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! source = "gaussian"
//! a = 1.0
//! sigma_neg = 2.0
//! sigma_pos = 1.0
//! m = 20000
//!
//! [[providers]]
//! count = 2
//! learner = "threshold"
//!
//! [dynamics]
//! rounds = 20
//! init = "shared_optimum"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::Classifier;
use crate::data_io::{load_csv, rebalance, sample_gaussian_market, split, subsample, SplitSpec};
use crate::dataset::Dataset;
use crate::dynamics::analytic::AnalyticConfig;
use crate::dynamics::studies::{Position, SweepConfig, SweepMode};
use crate::dynamics::{DynamicsConfig, Init, ProviderSpec};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerKind, Loss};
use crate::threshold::GaussianMarketSpec;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    pub split: Option<SplitConfig>,
    pub sweep: Option<SweepSection>,
    pub order_study: Option<OrderStudySection>,
    pub capacity: Option<CapacitySection>,
    pub asym: Option<AsymSection>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Gaussian {
        a: f64,
        sigma_neg: f64,
        sigma_pos: f64,
        #[serde(default = "half")]
        prior: f64,
        m: usize,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        positive_label: String,
        /// Random oversampling toward this positive fraction.
        rebalance: Option<f64>,
        /// Keep this many rows, drawn without replacement.
        subsample: Option<usize>,
    },
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LearnerName {
    Linear,
    Stump,
    Threshold,
    Menu,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Threshold {
        #[serde(default)]
        feature: usize,
        tau: f64,
    },
    Stump {
        #[serde(default)]
        feature: usize,
        tau: f64,
        #[serde(default = "plus_one")]
        polarity: i8,
    },
    Linear {
        weights: Vec<f64>,
        #[serde(default)]
        bias: f64,
    },
    Constant {
        label: i8,
    },
}

fn plus_one() -> i8 {
    1
}

impl ClassifierConfig {
    pub fn build(&self) -> Result<Classifier> {
        let bad_label = |l: i8| l != 1 && l != -1;
        Ok(match self {
            ClassifierConfig::Threshold { feature, tau } => Classifier::Threshold {
                feature: *feature,
                tau: *tau,
            },
            ClassifierConfig::Stump { feature, tau, polarity } => {
                if bad_label(*polarity) {
                    return Err(Error::Config(format!("stump polarity {polarity} must be 1 or -1")));
                }
                Classifier::Stump {
                    feature: *feature,
                    tau: *tau,
                    polarity: *polarity,
                }
            }
            ClassifierConfig::Linear { weights, bias } => Classifier::Linear {
                weights: weights.clone(),
                bias: *bias,
            },
            ClassifierConfig::Constant { label } => {
                if bad_label(*label) {
                    return Err(Error::Config(format!("constant label {label} must be 1 or -1")));
                }
                Classifier::constant(*label)
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default = "one")]
    pub count: usize,
    pub learner: LearnerName,
    /// Threshold learners: which column to threshold.
    #[serde(default)]
    pub feature: usize,
    pub loss: Option<Loss>,
    pub lambda: Option<f64>,
    pub learning_rate: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub init_scale: Option<f64>,
    /// Leading feature columns visible to this provider.
    pub features: Option<usize>,
    #[serde(default)]
    pub menu: Vec<ClassifierConfig>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    #[default]
    SharedOptimum,
    IndependentFit,
    Explicit,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    pub epsilon: Option<f64>,
    pub order: Option<Vec<usize>>,
    #[serde(default)]
    pub init: InitName,
    /// One classifier per provider when `init = "explicit"`.
    #[serde(default)]
    pub initial: Vec<ClassifierConfig>,
    /// Analytic (population) dynamics for a Gaussian source with two
    /// threshold providers.
    #[serde(default)]
    pub analytic: bool,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

fn default_rounds() -> usize {
    50
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            rounds: default_rounds(),
            epsilon: None,
            order: None,
            init: InitName::default(),
            initial: Vec::new(),
            analytic: false,
            lo: None,
            hi: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepModeName {
    #[default]
    Analytic,
    Sampled,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Mean offsets to visit; alternatively `a_start`, `a_stop`, `a_steps`.
    #[serde(default)]
    pub a: Vec<f64>,
    pub a_start: Option<f64>,
    pub a_stop: Option<f64>,
    pub a_steps: Option<usize>,
    pub sigma_neg: f64,
    pub sigma_pos: f64,
    #[serde(default = "half")]
    pub prior: f64,
    #[serde(default)]
    pub mode: SweepModeName,
    pub m: Option<usize>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    #[serde(default = "default_sweep_rounds")]
    pub rounds: usize,
}

fn default_sweep_rounds() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OrderStudySection {
    pub repetitions: usize,
    /// Position pairs `[later, earlier]`; defaults to consecutive positions.
    pub pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub feature_counts: Vec<usize>,
    #[serde(default = "one")]
    pub seeds: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AsymSection {
    pub better: usize,
    pub worse: usize,
    pub position: Position,
    #[serde(default = "one")]
    pub seeds: usize,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, String)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Relative CSV paths are resolved against the config file.
        if let Some(DataConfig::Csv { path: p, .. }) = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok((cfg, text))
    }

    pub fn data(&self) -> Result<&DataConfig> {
        self.data.as_ref().ok_or_else(|| Error::Config("missing [data] section".into()))
    }

    pub fn gaussian_spec(&self) -> Result<Option<GaussianMarketSpec>> {
        match self.data()? {
            DataConfig::Gaussian {
                a,
                sigma_neg,
                sigma_pos,
                prior,
                ..
            } => Ok(Some(GaussianMarketSpec::new(*a, *sigma_neg, *sigma_pos, *prior)?)),
            DataConfig::Csv { .. } => Ok(None),
        }
    }

    /// Loads the base dataset once (CSV) or returns `None` for sampled sources.
    pub fn base_dataset(&self) -> Result<Option<Dataset>> {
        match self.data()? {
            DataConfig::Gaussian { m, .. } => {
                if *m == 0 {
                    return Err(Error::Config("data.m must be at least 1".into()));
                }
                Ok(None)
            }
            DataConfig::Csv {
                path,
                label_column,
                positive_label,
                rebalance: target,
                subsample: size,
            } => {
                let mut d = load_csv(path, label_column, positive_label)?;
                if let Some(size) = size {
                    d = subsample(&d, *size, self.seed)?;
                }
                if let Some(t) = target {
                    d = rebalance(&d, *t, self.seed)?;
                }
                Ok(Some(d))
            }
        }
    }

    /// The `(train, test)` pair for `seed`: Gaussian sources are resampled,
    /// CSV sources are re-split when a split is configured.
    pub fn draw(&self, base: Option<&Dataset>, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
        let full = match (self.data()?, base) {
            (DataConfig::Gaussian { m, .. }, _) => {
                let spec = self.gaussian_spec()?.expect("gaussian source");
                sample_gaussian_market(&spec, *m, seed)?
            }
            (DataConfig::Csv { .. }, Some(d)) => d.clone(),
            (DataConfig::Csv { .. }, None) => return Err(Error::Config("csv data was not loaded".into())),
        };
        match &self.split {
            Some(s) => {
                let (train, test) = split(
                    &full,
                    &SplitSpec {
                        test_fraction: s.test_fraction,
                        seed,
                    },
                )?;
                Ok((train, Some(test)))
            }
            None => Ok((full, None)),
        }
    }

    fn learner(&self, p: &ProviderConfig, seed: u64) -> Result<LearnerConfig> {
        let base = match p.learner {
            LearnerName::Linear => LearnerConfig::linear(p.loss.unwrap_or(Loss::Logistic)),
            LearnerName::Stump => LearnerConfig::stump(),
            LearnerName::Threshold => LearnerConfig::threshold(p.feature),
            LearnerName::Menu => {
                if p.menu.is_empty() {
                    return Err(Error::Config("menu learner needs a nonempty `menu`".into()));
                }
                let menu = p.menu.iter().map(ClassifierConfig::build).collect::<Result<Vec<_>>>()?;
                LearnerConfig::menu(menu)
            }
        };
        let gradient_only = [
            ("loss", p.loss.is_some()),
            ("lambda", p.lambda.is_some()),
            ("learning_rate", p.learning_rate.is_some()),
            ("max_iters", p.max_iters.is_some()),
            ("tol", p.tol.is_some()),
            ("init_scale", p.init_scale.is_some()),
        ];
        if p.learner != LearnerName::Linear {
            if let Some((key, _)) = gradient_only.iter().find(|(_, set)| *set) {
                return Err(Error::Config(format!("`{key}` only applies to linear learners")));
            }
        }
        if p.learner != LearnerName::Menu && !p.menu.is_empty() {
            return Err(Error::Config("`menu` only applies to menu learners".into()));
        }
        if !matches!(base.kind, LearnerKind::Threshold { .. }) && p.feature != 0 {
            return Err(Error::Config("`feature` only applies to threshold learners".into()));
        }
        let cfg = LearnerConfig {
            lambda: p.lambda.unwrap_or(base.lambda),
            learning_rate: p.learning_rate.unwrap_or(base.learning_rate),
            max_iters: p.max_iters.unwrap_or(base.max_iters),
            tol: p.tol.unwrap_or(base.tol),
            init_scale: p.init_scale.unwrap_or(base.init_scale),
            seed,
            ..base
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Expands `[[providers]]` into a dynamics configuration. Provider `i`'s
    /// learner seed is `seed + i`.
    pub fn dynamics(&self) -> Result<DynamicsConfig> {
        let mut providers = Vec::new();
        for p in &self.providers {
            if p.count == 0 {
                return Err(Error::Config("provider count must be at least 1".into()));
            }
            for _ in 0..p.count {
                let i = providers.len() as u64;
                providers.push(ProviderSpec {
                    learner: self.learner(p, self.seed.wrapping_add(i))?,
                    features: p.features,
                });
            }
        }
        if providers.is_empty() {
            return Err(Error::Config("at least one [[providers]] entry is required".into()));
        }
        let d = &self.dynamics;
        let init = match d.init {
            InitName::SharedOptimum => Init::SharedOptimum,
            InitName::IndependentFit => Init::IndependentFit,
            InitName::Explicit => Init::Explicit(
                d.initial.iter().map(ClassifierConfig::build).collect::<Result<Vec<_>>>()?,
            ),
        };
        if d.init != InitName::Explicit && !d.initial.is_empty() {
            return Err(Error::Config("`initial` requires init = \"explicit\"".into()));
        }
        let cfg = DynamicsConfig {
            providers,
            order: d.order.clone(),
            rounds: d.rounds,
            epsilon: d.epsilon,
            init,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn analytic(&self) -> Result<AnalyticConfig> {
        let spec = self
            .gaussian_spec()?
            .ok_or_else(|| Error::Config("analytic dynamics need a gaussian data source".into()))?;
        let dc = self.dynamics()?;
        let two_thresholds = dc.n() == 2
            && dc
                .providers
                .iter()
                .all(|p| p.learner.kind == LearnerKind::Threshold { feature: 0 } && p.features.is_none());
        if !two_thresholds {
            return Err(Error::Config("analytic dynamics need exactly two threshold providers".into()));
        }
        if dc.order.as_ref().is_some_and(|o| o != &[0, 1]) {
            return Err(Error::Config("analytic dynamics use the identity order".into()));
        }
        let start = match &dc.init {
            Init::SharedOptimum => None,
            Init::Explicit(hs) => {
                let taus: Vec<f64> = hs
                    .iter()
                    .map(|h| match h {
                        Classifier::Threshold { feature: 0, tau } => Ok(*tau),
                        _ => Err(Error::Config("analytic starts must be thresholds on feature 0".into())),
                    })
                    .collect::<Result<_>>()?;
                Some([taus[0], taus[1]])
            }
            Init::IndependentFit => {
                return Err(Error::Config("analytic dynamics start from the optimum or explicit thresholds".into()))
            }
        };
        Ok(AnalyticConfig {
            spec,
            lo: self.dynamics.lo.unwrap_or(f64::NEG_INFINITY),
            hi: self.dynamics.hi.unwrap_or(f64::INFINITY),
            rounds: dc.rounds,
            start,
            epsilon: dc.epsilon.unwrap_or(0.0),
        })
    }

    pub fn sweep_specs(&self) -> Result<(Vec<GaussianMarketSpec>, SweepConfig)> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        let a_values = match (s.a.is_empty(), s.a_start, s.a_stop, s.a_steps) {
            (false, None, None, None) => s.a.clone(),
            (true, Some(start), Some(stop), Some(steps)) if steps >= 2 => (0..steps)
                .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
                .collect(),
            _ => {
                return Err(Error::Config(
                    "sweep needs either `a = [...]` or `a_start`, `a_stop` and `a_steps >= 2`".into(),
                ))
            }
        };
        let specs = a_values
            .iter()
            .map(|&a| GaussianMarketSpec::new(a, s.sigma_neg, s.sigma_pos, s.prior))
            .collect::<Result<Vec<_>>>()?;
        let mode = match (s.mode, s.m) {
            (SweepModeName::Analytic, None) => SweepMode::Analytic,
            (SweepModeName::Sampled, Some(m)) if m > 0 => SweepMode::Sampled { m, seed: self.seed },
            (SweepModeName::Analytic, Some(_)) => return Err(Error::Config("`m` only applies to sampled sweeps".into())),
            (SweepModeName::Sampled, _) => return Err(Error::Config("sampled sweeps need `m >= 1`".into())),
        };
        Ok((
            specs,
            SweepConfig {
                mode,
                lo: s.lo.unwrap_or(f64::NEG_INFINITY),
                hi: s.hi.unwrap_or(f64::INFINITY),
                rounds: s.rounds,
            },
        ))
    }

    /// Seeds `seed, seed + 1, ..., seed + count - 1`.
    pub fn seeds(&self, count: usize) -> Vec<u64> {
        (0..count as u64).map(|k| self.seed.wrapping_add(k)).collect()
    }
}
