//! Experiment drivers built on repeated dynamics runs.
//!
//! Independent runs execute on the rayon pool; results come back in the
//! order of their inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::{run_analytic_dynamics, AnalyticConfig};
use super::{run_dynamics, DynamicsConfig, Init, ProviderSpec};
use crate::classifier::ext_real;
use crate::data_io::sample_gaussian_market;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::LearnerConfig;
use crate::market::{hhi_of_shares, MarketOutcome};
use crate::threshold::{optimal_threshold, rho_inverse, GaussianMarketSpec};

/// Produces `(train, optional test)` for a seed.
pub trait DataSource: Sync {
    fn draw(&self, seed: u64) -> Result<(Dataset, Option<Dataset>)>;
}

impl<F> DataSource for F
where
    F: Fn(u64) -> Result<(Dataset, Option<Dataset>)> + Sync,
{
    fn draw(&self, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
        self(seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean (0 for a single value).
    pub std_error: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, standard error and linearly interpolated quartiles.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std_error = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Some(Summary {
        count: v.len(),
        mean,
        std_error,
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Shares used for study comparisons: test when available, train otherwise.
fn evaluation(t: &super::Trajectory) -> &MarketOutcome {
    t.final_test().unwrap_or_else(|| t.final_train())
}

fn run_seeds<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRun {
    pub seed: u64,
    /// Final shares indexed by position in the order of play.
    pub shares_by_position: Vec<f64>,
    pub converged: bool,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSummary {
    pub later: usize,
    pub earlier: usize,
    /// Distribution of `mu[later] - mu[earlier]` over runs.
    pub summary: Option<Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderStudy {
    pub evaluated_on: &'static str,
    pub runs: Vec<OrderRun>,
    pub pairs: Vec<PairSummary>,
}

/// Consecutive position pairs `(p + 1, p)`.
pub fn consecutive_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|p| (p, p - 1)).collect()
}

/// Runs dynamics once per seed `seed, seed + 1, ...` and summarizes the
/// final-share differences between order positions `(later, earlier)`.
pub fn run_order_of_play_study(
    cfg: &DynamicsConfig,
    data: &dyn DataSource,
    pairs: &[(usize, usize)],
    repetitions: usize,
    seed: u64,
) -> Result<OrderStudy> {
    cfg.validate()?;
    let n = cfg.n();
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidParameter(format!("position pair ({a}, {b}) out of range for {n} providers")));
    }
    let order = cfg.play_order();
    let seeds: Vec<u64> = (0..repetitions as u64).map(|r| seed.wrapping_add(r)).collect();
    let results = run_seeds(&seeds, |s| {
        let (train, test) = data.draw(s)?;
        let t = run_dynamics(cfg, &train, test.as_ref())?;
        let shares = &evaluation(&t).shares;
        Ok((
            OrderRun {
                seed: s,
                shares_by_position: order.iter().map(|&i| shares[i]).collect(),
                converged: t.converged,
                rounds: t.rounds_played(),
            },
            test.is_some(),
        ))
    })?;
    let evaluated_on = if results.first().is_some_and(|r| r.1) { "test" } else { "train" };
    let runs: Vec<OrderRun> = results.into_iter().map(|r| r.0).collect();
    let pairs = pairs
        .iter()
        .map(|&(later, earlier)| {
            let diffs: Vec<f64> = runs
                .iter()
                .map(|r| r.shares_by_position[later] - r.shares_by_position[earlier])
                .collect();
            PairSummary {
                later,
                earlier,
                summary: summarize(&diffs),
            }
        })
        .collect();
    Ok(OrderStudy {
        evaluated_on,
        runs,
        pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    Analytic,
    /// Dynamics with exact threshold learners on `m` samples per spec; the
    /// sample for spec `k` uses seed `seed + k`.
    Sampled { m: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub mode: SweepMode,
    #[serde(serialize_with = "ext_real")]
    pub lo: f64,
    #[serde(serialize_with = "ext_real")]
    pub hi: f64,
    pub rounds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            mode: SweepMode::Analytic,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            rounds: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub a: f64,
    pub sigma_neg: f64,
    pub sigma_pos: f64,
    pub prior: f64,
    #[serde(serialize_with = "ext_real")]
    pub h_opt: f64,
    #[serde(serialize_with = "ext_real")]
    pub tau1: f64,
    #[serde(serialize_with = "ext_real")]
    pub tau2: f64,
    pub accuracy1: f64,
    pub accuracy2: f64,
    pub share1: f64,
    pub share2: f64,
    pub welfare: f64,
    pub hhi: Option<f64>,
    pub converged: bool,
    pub rounds: usize,
    /// Whether the response levels have an increasing-ratio crossing in the
    /// strategy interval.
    pub low_level_exists: bool,
    pub high_level_exists: bool,
    /// Some final threshold sits on an end of the strategy interval.
    pub boundary_hit: bool,
}

fn sweep_point(index: usize, spec: &GaussianMarketSpec, cfg: &SweepConfig) -> Result<SweepRow> {
    let [low, high] = spec.response_levels();
    let low_level_exists = !rho_inverse(spec, low, cfg.lo, cfg.hi)?.is_empty();
    let high_level_exists = !rho_inverse(spec, high, cfg.lo, cfg.hi)?.is_empty();
    let (taus, accuracies, shares, welfare, converged, rounds) = match cfg.mode {
        SweepMode::Analytic => {
            let t = run_analytic_dynamics(&AnalyticConfig {
                spec: *spec,
                lo: cfg.lo,
                hi: cfg.hi,
                rounds: cfg.rounds,
                start: None,
                epsilon: 0.0,
            })?;
            let last = t.last();
            let acc = [spec.accuracy(last.taus[0]), spec.accuracy(last.taus[1])];
            (
                [last.taus[0], last.taus[1]],
                acc,
                [last.shares[0], last.shares[1]],
                last.welfare,
                t.converged,
                t.adopted.len(),
            )
        }
        SweepMode::Sampled { m, seed } => {
            let data = sample_gaussian_market(spec, m, seed.wrapping_add(index as u64))?;
            let dcfg = DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 2).with_rounds(cfg.rounds);
            let t = run_dynamics(&dcfg, &data, None)?;
            let out = t.final_train();
            let tau = |k: usize| t.classifiers[k].tau().expect("threshold learner");
            (
                [tau(0), tau(1)],
                [out.accuracies[0], out.accuracies[1]],
                [out.shares[0], out.shares[1]],
                out.welfare,
                t.converged,
                t.rounds_played(),
            )
        }
    };
    let boundary_hit = taus.iter().any(|&t| t <= cfg.lo || t >= cfg.hi);
    Ok(SweepRow {
        index,
        a: spec.a,
        sigma_neg: spec.sigma_neg,
        sigma_pos: spec.sigma_pos,
        prior: spec.prior,
        h_opt: optimal_threshold(spec),
        tau1: taus[0],
        tau2: taus[1],
        accuracy1: accuracies[0],
        accuracy2: accuracies[1],
        share1: shares[0],
        share2: shares[1],
        welfare,
        hhi: hhi_of_shares(&shares),
        converged,
        rounds,
        low_level_exists,
        high_level_exists,
        boundary_hit,
    })
}

/// Two-provider threshold equilibria across a family of Gaussian markets.
pub fn run_overlap_sweep(specs: &[GaussianMarketSpec], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if !(cfg.lo < cfg.hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{}, {}]", cfg.lo, cfg.hi)));
    }
    specs
        .par_iter()
        .enumerate()
        .map(|(k, s)| sweep_point(k, s, cfg))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityRound {
    pub round: usize,
    pub welfare_train: f64,
    pub welfare_test: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityRun {
    pub seed: u64,
    pub k: usize,
    pub converged: bool,
    pub welfare_initial: f64,
    pub welfare_final: f64,
    pub final_shares: Vec<f64>,
    pub rounds: Vec<CapacityRound>,
}

fn with_features(cfg: &DynamicsConfig, k: usize) -> DynamicsConfig {
    DynamicsConfig {
        providers: cfg
            .providers
            .iter()
            .map(|p| ProviderSpec {
                features: Some(k),
                ..p.clone()
            })
            .collect(),
        ..cfg.clone()
    }
}

/// For each seed and feature count `k`, every provider sees only the first
/// `k` columns. Welfare is reported on the evaluation set at every round.
pub fn run_capacity_study(
    cfg: &DynamicsConfig,
    data: &dyn DataSource,
    feature_counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<CapacityRun>> {
    cfg.validate()?;
    let jobs: Vec<(u64, usize)> = seeds
        .iter()
        .flat_map(|&s| feature_counts.iter().map(move |&k| (s, k)))
        .collect();
    jobs.par_iter()
        .map(|&(seed, k)| {
            let (train, test) = data.draw(seed)?;
            if k == 0 || k > train.dim() {
                return Err(Error::InvalidParameter(format!(
                    "feature count {k} outside 1..={}",
                    train.dim()
                )));
            }
            let t = run_dynamics(&with_features(cfg, k), &train, test.as_ref())?;
            let w = |r: &super::RoundSummary| r.test.as_ref().unwrap_or(&r.train).welfare;
            Ok(CapacityRun {
                seed,
                k,
                converged: t.converged,
                welfare_initial: w(&t.rounds[0]),
                welfare_final: w(t.rounds.last().expect("round 0")),
                final_shares: evaluation(&t).shares.clone(),
                rounds: t
                    .rounds
                    .iter()
                    .map(|r| CapacityRound {
                        round: r.round,
                        welfare_train: r.train.welfare,
                        welfare_test: r.test.as_ref().map(|o| o.welfare),
                    })
                    .collect(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    First,
    Second,
}

impl Position {
    pub fn index(self) -> usize {
        match self {
            Position::First => 0,
            Position::Second => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymRun {
    pub seed: u64,
    pub advantaged_shares: Vec<f64>,
    pub baseline_shares: Vec<f64>,
    /// Provider's share with extra features minus its share without.
    pub delta_self: f64,
    /// Change in the provider's lead over the best other provider.
    pub delta_next_best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymStudy {
    pub position: Position,
    pub provider: usize,
    pub better: usize,
    pub worse: usize,
    pub evaluated_on: &'static str,
    pub runs: Vec<AsymRun>,
    pub delta_self: Option<Summary>,
    pub delta_next_best: Option<Summary>,
}

fn lead(shares: &[f64], i: usize) -> f64 {
    let best_other = shares
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    shares[i] - best_other
}

/// Compares a run where the provider at `position` sees `better` features
/// (everyone else `worse`) with the symmetric run where all see `worse`.
/// Both runs start from independent uniform-weight fits.
pub fn run_asymmetric_power_study(
    cfg: &DynamicsConfig,
    data: &dyn DataSource,
    better: usize,
    worse: usize,
    position: Position,
    seeds: &[u64],
) -> Result<AsymStudy> {
    let n = cfg.n();
    if n < 2 || position.index() >= n {
        return Err(Error::InvalidParameter(format!(
            "position {position:?} needs at least {} providers",
            position.index() + 1
        )));
    }
    if matches!(cfg.init, Init::Explicit(_)) {
        return Err(Error::InvalidParameter("explicit initial classifiers cannot be restricted".into()));
    }
    let provider = cfg.play_order()[position.index()];
    let baseline = DynamicsConfig {
        init: Init::IndependentFit,
        ..with_features(cfg, worse)
    };
    let mut advantaged = baseline.clone();
    advantaged.providers[provider].features = Some(better);
    baseline.validate()?;
    advantaged.validate()?;

    let results = run_seeds(seeds, |seed| {
        let (train, test) = data.draw(seed)?;
        for k in [better, worse] {
            if k == 0 || k > train.dim() {
                return Err(Error::InvalidParameter(format!(
                    "feature count {k} outside 1..={}",
                    train.dim()
                )));
            }
        }
        let adv = run_dynamics(&advantaged, &train, test.as_ref())?;
        let base = run_dynamics(&baseline, &train, test.as_ref())?;
        let a = evaluation(&adv).shares.clone();
        let b = evaluation(&base).shares.clone();
        Ok((
            AsymRun {
                seed,
                delta_self: a[provider] - b[provider],
                delta_next_best: lead(&a, provider) - lead(&b, provider),
                advantaged_shares: a,
                baseline_shares: b,
            },
            test.is_some(),
        ))
    })?;
    let evaluated_on = if results.first().is_some_and(|r| r.1) { "test" } else { "train" };
    let runs: Vec<AsymRun> = results.into_iter().map(|r| r.0).collect();
    let ds: Vec<f64> = runs.iter().map(|r| r.delta_self).collect();
    let dn: Vec<f64> = runs.iter().map(|r| r.delta_next_best).collect();
    Ok(AsymStudy {
        position,
        provider,
        better,
        worse,
        evaluated_on,
        delta_self: summarize(&ds),
        delta_next_best: summarize(&dn),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Classifier;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn summary_quartiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(s.mean, 3.0);
        assert!((s.std_error - (2.5f64).sqrt() / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[]), None);
    }

    fn gaussian_source(m: usize) -> impl Fn(u64) -> Result<(Dataset, Option<Dataset>)> + Sync {
        move |seed| {
            let spec = GaussianMarketSpec::balanced(1.0, 2.0, 1.0)?;
            Ok((sample_gaussian_market(&spec, m, seed)?, None))
        }
    }

    #[test]
    fn second_mover_wins_on_samples() {
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 2);
        let study = run_order_of_play_study(&cfg, &gaussian_source(2000), &consecutive_pairs(2), 10, 1).unwrap();
        assert_eq!(study.runs.len(), 10);
        let s = study.pairs[0].summary.unwrap();
        assert!(s.mean > 0.0);
    }

    #[test]
    fn monopoly_order_study_is_empty() {
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 1);
        let study = run_order_of_play_study(&cfg, &gaussian_source(100), &consecutive_pairs(1), 3, 0).unwrap();
        assert!(study.pairs.is_empty());
        assert!(run_order_of_play_study(&cfg, &gaussian_source(100), &[(1, 0)], 3, 0).is_err());
    }

    #[test]
    fn symmetric_menu_gives_zero_differences() {
        // Disjoint halves: both PNE profiles pay 1/2 to each provider.
        let data = Dataset::from_scalars((0..8).map(|x| x as f64).collect(), vec![1; 8]).unwrap();
        let h1 = Classifier::from_correctness(&data, &[true, true, true, true, false, false, false, false]).unwrap();
        let h2 = Classifier::from_correctness(&data, &[false, false, false, false, true, true, true, true]).unwrap();
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::menu(vec![h1, h2]), 2);
        let d = data.clone();
        let source = move |_seed: u64| Ok((d.clone(), None));
        let study = run_order_of_play_study(&cfg, &source, &[(1, 0)], 4, 0).unwrap();
        let s = study.pairs[0].summary.unwrap();
        assert_eq!((s.min, s.max), (0.0, 0.0));
    }

    #[test]
    fn overlap_sweep_tipping_point() {
        let specs: Vec<GaussianMarketSpec> = (0..=12)
            .map(|k| GaussianMarketSpec::balanced(0.25 * k as f64, 2.0, 1.0).unwrap())
            .collect();
        let rows = run_overlap_sweep(&specs, &SweepConfig::default()).unwrap();
        let missing: Vec<usize> = rows.iter().filter(|r| !r.high_level_exists).map(|r| r.index).collect();
        assert_eq!(missing, vec![0]);
        assert!(rows[0].boundary_hit);
        // The boundary response persists for small offsets after the interior
        // root reappears, then switches off once and for all.
        let hits: Vec<bool> = rows.iter().map(|r| r.boundary_hit).collect();
        let tip = hits.iter().position(|h| !h).unwrap();
        assert!(tip > 0 && hits[tip..].iter().all(|h| !h));
        assert_eq!(rows[0].tau1, f64::INFINITY);
        for r in &rows {
            assert!((r.share1 + r.share2 - r.welfare).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_sweep_point_keeps_full_welfare() {
        let spec = GaussianMarketSpec::balanced(8.0, 1.0, 1.0).unwrap();
        let rows = run_overlap_sweep(&[spec], &SweepConfig::default()).unwrap();
        assert!(rows[0].welfare > 1.0 - 1e-12);
        assert_eq!(rows[0].tau1, rows[0].h_opt);
        assert_eq!(rows[0].tau2, rows[0].h_opt);
    }

    fn tabular_source(noise: usize) -> impl Fn(u64) -> Result<(Dataset, Option<Dataset>)> + Sync {
        move |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let make = |rng: &mut ChaCha8Rng, m: usize| {
                let mut rows = Vec::new();
                let mut labels = Vec::new();
                for _ in 0..m {
                    let y: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
                    let mut x = vec![y as f64 + rng.random_range(-1.5..1.5)];
                    x.extend((0..noise).map(|_| rng.random_range(0..4) as f64));
                    rows.push(x);
                    labels.push(y);
                }
                Dataset::new(rows, labels)
            };
            let train = make(&mut rng, 300)?;
            let test = make(&mut rng, 300)?;
            Ok((train, Some(test)))
        }
    }

    #[test]
    fn capacity_full_width_matches_unrestricted() {
        let source = tabular_source(2);
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::stump(), 3);
        let runs = run_capacity_study(&cfg, &source, &[3], &[5]).unwrap();
        let (train, test) = source(5).unwrap();
        let t = run_dynamics(&cfg, &train, test.as_ref()).unwrap();
        assert_eq!(runs[0].final_shares, t.final_test().unwrap().shares);
        assert_eq!(runs[0].welfare_final, t.final_test().unwrap().welfare);
        assert!(run_capacity_study(&cfg, &source, &[4], &[5]).is_err());
    }

    #[test]
    fn asym_equal_counts_gives_zero() {
        let source = tabular_source(2);
        let cfg = DynamicsConfig::homogeneous(LearnerConfig::stump(), 2);
        let s = run_asymmetric_power_study(&cfg, &source, 2, 2, Position::Second, &[1, 2, 3]).unwrap();
        assert!(s.runs.iter().all(|r| r.delta_self == 0.0 && r.delta_next_best == 0.0));
        for r in &s.runs {
            assert_eq!(r.delta_self, r.advantaged_shares[1] - r.baseline_shares[1]);
        }
    }
}
