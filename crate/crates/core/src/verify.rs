//! Randomized and exhaustive property checks over every module.
//!
//! Each property returns the number of cases it examined, or a description
//! of the first counterexample.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::Classifier;
use crate::data_io::{rebalance, sample_gaussian_market, split, subsample, SplitSpec};
use crate::dataset::Dataset;
use crate::dynamics::analytic::{run_analytic_dynamics, AnalyticConfig};
use crate::dynamics::potential::scaled_potential;
use crate::dynamics::{is_stable, run_dynamics, DynamicsConfig, Init, Trajectory};
use crate::exact::{best_response_finite, classify_2x2, enumerate_pne, enumerate_pne_rows, EquilibriumKind, Game2x2};
use crate::learners::{
    best_weighted_stump, descent_path, fit, objective_and_gradient, weighted_accuracy, LearnerConfig, Loss,
};
use crate::market::{
    exact_shares, market_shares, subset_decomposition, weighted_share_identity, CorrectnessMatrix,
};
use crate::threshold::{
    analytic_best_response, analytic_threshold_share, empirical_threshold_br, optimal_threshold, response_candidates,
    rho_inverse, GaussianMarketSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    Full,
}

impl Scale {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Scale::Quick),
            "full" => Ok(Scale::Full),
            other => Err(format!("unknown scale {other:?} (expected quick or full)")),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Quick => "quick",
            Scale::Full => "full",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub counterexample: Option<String>,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "PASS {} ({} cases, {:.2}s)", self.name, self.cases, self.seconds)
        } else {
            write!(
                f,
                "FAIL {} ({:.2}s)\n  counterexample: {}",
                self.name,
                self.seconds,
                self.counterexample.as_deref().unwrap_or("")
            )
        }
    }
}

type Outcome = std::result::Result<usize, String>;

struct Property {
    name: &'static str,
    run: fn(Scale, u64) -> Outcome,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Turns a library error into a counterexample string.
fn ok<T>(r: crate::Result<T>, context: impl fmt::Display) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{context}: unexpected error: {e}"))
}

const PROPERTIES: &[Property] = &[
    Property { name: "market/identities-exhaustive", run: identities_exhaustive },
    Property { name: "market/identities-random", run: identities_random },
    Property { name: "exact/classification-random", run: classification_random },
    Property { name: "exact/classification-exhaustive", run: classification_exhaustive },
    Property { name: "exact/concentration", run: concentration },
    Property { name: "exact/better-response", run: better_response },
    Property { name: "threshold/candidate-completeness", run: candidate_completeness },
    Property { name: "threshold/one-round-convergence", run: one_round },
    Property { name: "threshold/mutual-improvement", run: mutual_improvement_analytic },
    Property { name: "threshold/mlr-reduction", run: mlr_reduction },
    Property { name: "threshold/empirical-agreement", run: empirical_agreement },
    Property { name: "learners/stump-oracle", run: stump_oracle },
    Property { name: "learners/gradient", run: gradient },
    Property { name: "learners/monotone-descent", run: monotone_descent },
    Property { name: "learners/weight-scaling", run: weight_scaling },
    Property { name: "dynamics/exact-learners", run: exact_dynamics },
    Property { name: "dynamics/determinism", run: determinism },
    Property { name: "data/determinism", run: data_determinism },
];

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|p| p.name).collect()
}

/// Runs every property whose name contains `filter` (all when `None`),
/// in parallel, returning results in a fixed order.
pub fn run_suite(scale: Scale, seed: u64, filter: Option<&str>) -> Vec<Check> {
    PROPERTIES
        .par_iter()
        .filter(|p| filter.is_none_or(|f| p.name.contains(f)))
        .map(|p| {
            let start = Instant::now();
            let r = std::panic::catch_unwind(|| (p.run)(scale, seed))
                .unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&e))));
            let seconds = start.elapsed().as_secs_f64();
            match r {
                Ok(cases) => Check { name: p.name, passed: true, cases, counterexample: None, seconds },
                Err(c) => Check { name: p.name, passed: false, cases: 0, counterexample: Some(c), seconds },
            }
        })
        .collect()
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|_| {
            let p: f64 = rng.random_range(0.05..0.95);
            (0..m).map(|_| rng.random_bool(p)).collect()
        })
        .collect()
}

fn matrices(n: usize, m: usize) -> impl Iterator<Item = Vec<Vec<bool>>> {
    (0u32..1 << (n * m)).map(move |bits| {
        (0..n)
            .map(|i| (0..m).map(|j| bits >> (i * m + j) & 1 == 1).collect())
            .collect()
    })
}

fn random_spec(rng: &mut ChaCha8Rng) -> GaussianMarketSpec {
    GaussianMarketSpec::new(
        rng.random_range(0.1..3.0),
        rng.random_range(0.4..3.0),
        rng.random_range(0.4..3.0),
        rng.random_range(0.2..0.8),
    )
    .expect("parameters are in range")
}

// ---------------------------------------------------------------- market

fn count(row: &[bool]) -> i128 {
    row.iter().filter(|&&e| e).count() as i128
}

fn count_only(a: &[bool], b: &[bool]) -> i128 {
    a.iter().zip(b).filter(|(&x, &y)| x && !y).count() as i128
}

fn check_identities(rows: &[Vec<bool>]) -> std::result::Result<(), String> {
    let c = ok(CorrectnessMatrix::new(rows.to_vec()), "matrix")?;
    let n = rows.len();
    let exact = exact_shares(&c);
    let shares = market_shares(&c);
    let total: i128 = exact.numerators.iter().sum();
    ensure!(
        total == exact.served as i128 * exact.scale,
        "conservation fails on {rows:?}: numerators sum {total}, served {}",
        exact.served
    );
    for (i, &share) in shares.iter().enumerate() {
        let w = ok(weighted_share_identity(&c, i), "identity")?;
        ensure!(w.to_bits() == share.to_bits(), "weight identity {w} != {share} for provider {i} on {rows:?}");
    }
    let decomposition = ok(subset_decomposition(&c), "decomposition")?;
    for (i, &share) in shares.iter().enumerate() {
        let rebuilt: f64 = decomposition
            .iter()
            .filter(|(&s, _)| s >> i & 1 == 1)
            .map(|(&s, &mass)| mass / s.count_ones() as f64)
            .sum();
        ensure!((rebuilt - share).abs() <= 1e-12, "decomposition gives {rebuilt}, share {share} on {rows:?}");
    }
    if n == 2 {
        for (i, j) in [(0, 1), (1, 0)] {
            let (ai, aj) = (count(&rows[i]), count(&rows[j]));
            let (dij, dji) = (count_only(&rows[i], &rows[j]), count_only(&rows[j], &rows[i]));
            // scale = 2, so mu_i = num_i / 2m and (a_i + d_ij) / 2 = (A_i + D_ij) / 2m.
            ensure!(
                exact.numerators[i] == ai + dij,
                "duopoly identity fails for provider {i} on {rows:?}"
            );
            ensure!(ai - dij == aj - dji, "confusion identity fails on {rows:?}");
            if rows[i] != rows[j] {
                ensure!(
                    (exact.numerators[i] > exact.numerators[j]) == (ai > aj)
                        && (exact.numerators[i] == exact.numerators[j]) == (ai == aj),
                    "share order disagrees with accuracy order on {rows:?}"
                );
            }
        }
    }
    Ok(())
}

fn identities_exhaustive(_: Scale, _: u64) -> Outcome {
    let mut cases = 0;
    for n in 1..=3 {
        for m in 1..=4 {
            for rows in matrices(n, m) {
                check_identities(&rows)?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn identities_random(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(10_000, 50_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 1_000_000 + k as u64);
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=500);
            check_identities(&random_rows(&mut rng, n, m))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

// ----------------------------------------------------------------- exact

/// Points labelled +1 where a classifier's prediction equals its
/// correctness: every correctness pattern is realized directly.
fn realize(rows: &[Vec<bool>]) -> std::result::Result<(Dataset, Vec<Classifier>), String> {
    let m = rows[0].len();
    let data = ok(Dataset::from_scalars((0..m).map(|j| j as f64).collect(), vec![1; m]), "dataset")?;
    let hs = rows
        .iter()
        .map(|r| ok(Classifier::from_correctness(&data, r), "classifier"))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((data, hs))
}

fn check_classification(rows: &[Vec<bool>]) -> std::result::Result<(), String> {
    let (data, hs) = realize(rows)?;
    let game = ok(Game2x2::from_classifiers(&hs[0], &hs[1], &data), "game")?;
    let report = classify_2x2(&game);
    let menu = vec![hs[0].clone(), hs[1].clone()];
    let brute: Vec<[usize; 2]> = ok(enumerate_pne(&[menu.clone(), menu], &data), "enumeration")?
        .into_iter()
        .map(|p| [p[0], p[1]])
        .collect();
    ensure!(
        report.pne_states == brute,
        "classification {:?} lists {:?}, brute force {:?} for {game:?}",
        report.kind,
        report.pne_states,
        brute
    );
    match report.kind {
        EquilibriumKind::AntiCoordination => {
            ensure!(
                brute.contains(&[0, 1]) && brute.contains(&[1, 0]),
                "anti-coordination without both off-diagonal equilibria: {game:?}"
            );
            if game.a1 != game.a2 && !report.boundary_tie {
                let (u_row, u_col) = game.payoff_matrix()[0][1];
                ensure!(
                    (u_row > u_col) == (game.a1 > game.a2),
                    "more accurate player does not earn more at the equilibrium: {game:?}"
                );
            }
        }
        EquilibriumKind::DominantStrategy { dominant } => {
            ensure!(
                brute.contains(&[dominant, dominant]),
                "dominant profile ({dominant}, {dominant}) is not an equilibrium: {game:?}"
            );
        }
    }
    Ok(())
}

fn classification_random(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(10_000, 50_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 2_000_000 + k as u64);
            let m = rng.random_range(1..=12);
            check_classification(&random_rows(&mut rng, 2, m))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

fn classification_exhaustive(_: Scale, _: u64) -> Outcome {
    let mut cases = 0;
    for m in 1..=4 {
        for rows in matrices(2, m) {
            check_classification(&rows)?;
            cases += 1;
        }
    }
    Ok(cases)
}

fn concentration(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(10_000, 50_000);
    let equilibria: usize = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 3_000_000 + k as u64);
            let m = rng.random_range(1..=12);
            let size = rng.random_range(2..=5);
            let menu = random_rows(&mut rng, size, m);
            let rows = vec![menu.clone(), menu.clone()];
            let pne = ok(enumerate_pne_rows(&rows), "enumeration")?;
            for p in &pne {
                let c = ok(CorrectnessMatrix::new(vec![menu[p[0]].clone(), menu[p[1]].clone()]), "matrix")?;
                let e = exact_shares(&c);
                let (hi, lo) = (e.numerators[0].max(e.numerators[1]), e.numerators[0].min(e.numerators[1]));
                ensure!(hi <= 2 * lo, "equilibrium {p:?} has shares {:?} on menu {menu:?}", e.shares());
                let top = e.share(0).max(e.share(1));
                ensure!(
                    top <= 2.0 / 3.0 * e.welfare() + 1e-12,
                    "equilibrium {p:?} share {top} exceeds 2/3 of welfare {}",
                    e.welfare()
                );
            }
            Ok(pne.len())
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .sum();
    ensure!(equilibria > 0, "no equilibria found in {total} instances");
    Ok(total)
}

fn better_response(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(2_000, 20_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 4_000_000 + k as u64);
            let m = rng.random_range(1..=30);
            let size = rng.random_range(1..=6);
            let others = rng.random_range(0..=3);
            let menu_rows = random_rows(&mut rng, size, m);
            let (data, menu) = realize(&menu_rows)?;
            let opp = ok(CorrectnessMatrix::with_columns(random_rows(&mut rng, others, m), m), "matrix")?;
            let br = ok(best_response_finite(&menu, &opp, &data), "best response")?;
            let share_of = |row: &Vec<bool>| -> std::result::Result<f64, String> {
                let c = ok(opp.with_row(row.clone()), "matrix")?;
                Ok(market_shares(&c)[others])
            };
            let best = menu_rows.iter().map(share_of).collect::<std::result::Result<Vec<_>, _>>()?;
            let max = best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ensure!(br.share >= best[0], "best response {} below staying put {}", br.share, best[0]);
            ensure!(
                br.share == max && best[br.index] == max,
                "best response picks {} with share {}, menu maximum {max}",
                br.index,
                br.share
            );
            ensure!(
                best[..br.index].iter().all(|&s| s < max),
                "tie not broken toward the lowest index: {best:?}"
            );
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

// ------------------------------------------------------------- threshold

fn candidate_completeness(scale: Scale, seed: u64) -> Outcome {
    const GRID: usize = 100_000;
    let total = scale.pick(1_000, 5_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 5_000_000 + k as u64);
            let spec = random_spec(&mut rng);
            let h = optimal_threshold(&spec);
            let tau_opp = h + 2.0 * normal(&mut rng);
            let br = ok(analytic_best_response(&spec, tau_opp, f64::NEG_INFINITY, f64::INFINITY), "best response")?;
            let reach = spec.a + 10.0 * spec.sigma_neg.max(spec.sigma_pos);
            let (lo, hi) = (h.min(tau_opp) - reach, h.max(tau_opp) + reach);
            let step = (hi - lo) / (GRID - 1) as f64;
            let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for g in (0..GRID).map(|i| lo + step * i as f64).chain([f64::NEG_INFINITY, f64::INFINITY]) {
                let s = analytic_threshold_share(g, tau_opp, &spec);
                if s > best.1 {
                    best = (g, s);
                }
            }
            ensure!(
                best.1 <= br.share + 1e-6,
                "{spec:?}, tau_opp={tau_opp}: grid point {} has share {}, analytic response {} has {}",
                best.0,
                best.1,
                br.tau,
                br.share
            );
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

fn one_round(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(1_000, 10_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 6_000_000 + k as u64);
            let spec = random_spec(&mut rng);
            let start = optimal_threshold(&spec) + 2.0 * normal(&mut rng);
            let cfg = AnalyticConfig {
                start: Some([start; 2]),
                rounds: 3,
                ..AnalyticConfig::new(spec)
            };
            let t = ok(run_analytic_dynamics(&cfg), format!("{spec:?}"))?;
            ensure!(
                t.converged && t.adopted.get(1).is_none_or(|&moves| moves == 0),
                "{spec:?} from tau0={start}: adopted moves per round {:?}",
                t.adopted
            );
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

fn mutual_improvement_analytic(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(1_000, 10_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 7_000_000 + k as u64);
            let spec = random_spec(&mut rng);
            let t = ok(run_analytic_dynamics(&AnalyticConfig::new(spec)), format!("{spec:?}"))?;
            for w in t.steps.windows(2) {
                if let Some(mover) = w[1].mover {
                    let other = 1 - mover;
                    ensure!(
                        w[1].shares[other] >= w[0].shares[other] - 1e-12,
                        "{spec:?}: provider {other} share falls from {} to {} when {mover} responds",
                        w[0].shares[other],
                        w[1].shares[other]
                    );
                }
            }
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

/// Largest interval on which the likelihood ratio is strictly increasing.
fn mlr_interval(spec: &GaussianMarketSpec) -> Option<(f64, f64)> {
    let s0 = spec.log_rho_slope(0.0);
    let curvature = spec.log_rho_slope(1.0) - s0;
    if curvature == 0.0 {
        return (s0 > 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let turn = -s0 / curvature;
    Some(if curvature < 0.0 {
        (f64::NEG_INFINITY, turn)
    } else {
        (turn, f64::INFINITY)
    })
}

fn mlr_reduction(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(1_000, 10_000);
    let checked: usize = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 8_000_000 + k as u64);
            let mut spec = random_spec(&mut rng);
            if k % 3 == 0 {
                spec.sigma_pos = spec.sigma_neg;
            }
            let Some((lo, hi)) = mlr_interval(&spec) else { return Ok(0) };
            let levels = spec.response_levels();
            let roots = levels
                .iter()
                .map(|&z| ok(rho_inverse(&spec, z, lo, hi), "inverse"))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if roots.iter().any(|r| r.len() != 1) {
                return Ok(0);
            }
            let targets = [roots[0][0], roots[1][0]];
            let mid = 0.5 * (targets[0] + targets[1]);
            let mut tau_opp = mid + 3.0 * normal(&mut rng);
            tau_opp = tau_opp.clamp(lo, hi);
            let br = ok(analytic_best_response(&spec, tau_opp, lo, hi), "best response")?;
            // Far-apart classes can make every candidate tie within 1e-12;
            // the tie rule may then keep tau_opp.
            let target_share = targets
                .iter()
                .map(|&t| analytic_threshold_share(t, tau_opp, &spec))
                .fold(f64::NEG_INFINITY, f64::max);
            ensure!(
                targets.contains(&br.tau) || (br.share - target_share).abs() <= 1e-12,
                "{spec:?} on [{lo}, {hi}], tau_opp={tau_opp}: response {} is not one of {targets:?}",
                br.tau
            );
            Ok(1)
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .sum();
    ensure!(checked >= total / 4, "only {checked} of {total} specs had both crossings in an MLR interval");
    Ok(checked)
}

fn empirical_agreement(scale: Scale, seed: u64) -> Outcome {
    const M: usize = 200_000;
    let total = scale.pick(4, 24);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 9_000_000 + k as u64);
            // Even instances have unit-scale classes and check the share
            // only: there the sample argmax wanders by about 0.07 at this m.
            // Odd instances shrink the classes so that 0.05 exceeds the
            // argmax noise and check the threshold as well.
            let check_tau = k % 2 == 1;
            let s = if check_tau { rng.random_range(0.25..0.4) } else { 1.0 };
            // Resample until the optimum is finite and well separated from
            // every competing candidate.
            let (spec, tau_opp, br) = loop {
                let spec = GaussianMarketSpec::new(
                    s * rng.random_range(0.6..2.0),
                    s * rng.random_range(0.7..1.5),
                    s * rng.random_range(0.7..1.5),
                    rng.random_range(0.3..0.7),
                )
                .expect("parameters are in range");
                let tau_opp = optimal_threshold(&spec) + s * normal(&mut rng);
                let br = ok(analytic_best_response(&spec, tau_opp, f64::NEG_INFINITY, f64::INFINITY), "response")?;
                let cands = ok(response_candidates(&spec, tau_opp, f64::NEG_INFINITY, f64::INFINITY), "cands")?;
                let runner_up = cands
                    .iter()
                    .filter(|&&c| (c - br.tau).abs() > 0.05)
                    .map(|&c| analytic_threshold_share(c, tau_opp, &spec))
                    .fold(f64::NEG_INFINITY, f64::max);
                if br.tau.is_finite() && runner_up < br.share - 0.005 {
                    break (spec, tau_opp, br);
                }
            };
            let data = ok(sample_gaussian_market(&spec, M, rng.random()), "sample")?;
            let xs: Vec<f64> = data.column(0).collect();
            let weights: Vec<f64> = xs
                .iter()
                .zip(data.labels())
                .map(|(&x, &y)| if (x > tau_opp) == (y == 1) { 0.5 } else { 1.0 })
                .collect();
            let (tau, share) = ok(empirical_threshold_br(&xs, data.labels(), &weights), "sweep")?;
            ensure!(
                (share - br.share).abs() <= 0.01 && (!check_tau || (tau - br.tau).abs() <= 0.05),
                "{spec:?}, tau_opp={tau_opp}: sample response ({tau}, {share}), analytic ({}, {})",
                br.tau,
                br.share
            );
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

// -------------------------------------------------------------- learners

fn random_table(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Dataset {
    let coarse = rng.random_bool(0.5);
    table_with(rng, m, d, coarse)
}

/// `coarse` rounds features to a few values, so ties are common.
fn table_with(rng: &mut ChaCha8Rng, m: usize, d: usize, coarse: bool) -> Dataset {
    let dir: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x: Vec<f64> = (0..d)
            .map(|_| {
                let v = normal(rng);
                if coarse {
                    (2.0 * v).round()
                } else {
                    v
                }
            })
            .collect();
        let s: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() + 0.7 * normal(rng);
        labels.push(if s > 0.0 { 1 } else { -1 });
        rows.push(x);
    }
    Dataset::new(rows, labels).expect("rows are rectangular")
}

fn stump_oracle(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(1_000, 5_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 10_000_000 + k as u64);
            let m = rng.random_range(1..=200);
            let d = rng.random_range(1..=5);
            let data = random_table(&mut rng, m, d);
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
            let total_w: f64 = weights.iter().sum();
            let mut oracle = f64::NEG_INFINITY;
            for f in 0..d {
                for t in std::iter::once(f64::NEG_INFINITY).chain(data.column(f)) {
                    let plus: f64 = data
                        .rows()
                        .zip(data.labels())
                        .zip(&weights)
                        .filter(|((x, &y), _)| (x[f] > t) == (y == 1))
                        .map(|(_, w)| w)
                        .sum();
                    oracle = oracle.max(plus).max(total_w - plus);
                }
            }
            let (h, score) = best_weighted_stump(&data, &weights);
            let achieved = ok(weighted_accuracy(&h, &data, &weights), "accuracy")? * m as f64;
            let tol = 1e-9 * total_w;
            ensure!(
                (score - oracle).abs() <= tol && (achieved - oracle).abs() <= tol,
                "m={m}, d={d}: stump {h:?} scores {score} (re-evaluated {achieved}), oracle {oracle}"
            );
            let fitted = ok(fit(&LearnerConfig::stump(), &data, &weights), "fit")?;
            ensure!(fitted.classifier == h, "fit returns {:?}, search returns {h:?}", fitted.classifier);
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

fn gradient(scale: Scale, seed: u64) -> Outcome {
    let per_loss = scale.pick(100, 1_000);
    let mut cases = 0;
    for (li, loss) in [Loss::Logistic, Loss::Hinge].into_iter().enumerate() {
        let mut rng = rng_for(seed, 11_000_000 + li as u64);
        let mut done = 0;
        while done < per_loss {
            let m = rng.random_range(5..=40);
            let d = rng.random_range(1..=4);
            let data = random_table(&mut rng, m, d);
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let cfg = LearnerConfig {
                lambda: rng.random_range(0.0..0.1),
                ..LearnerConfig::linear(loss)
            };
            let theta: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
            let bias = normal(&mut rng);
            if loss == Loss::Hinge {
                let near_kink = data.rows().zip(data.labels()).any(|(x, &y)| {
                    let s: f64 = theta.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias;
                    (1.0 - y as f64 * s).abs() <= 1e-3
                });
                if near_kink {
                    continue;
                }
            }
            let (_, grad, grad_b) = objective_and_gradient(&cfg, &data, &weights, &theta, bias);
            let h = 1e-6;
            let f = |t: &[f64], b: f64| objective_and_gradient(&cfg, &data, &weights, t, b).0;
            for k in 0..=d {
                let (analytic, numeric) = if k < d {
                    let mut up = theta.clone();
                    let mut down = theta.clone();
                    up[k] += h;
                    down[k] -= h;
                    (grad[k], (f(&up, bias) - f(&down, bias)) / (2.0 * h))
                } else {
                    (grad_b, (f(&theta, bias + h) - f(&theta, bias - h)) / (2.0 * h))
                };
                let scale = analytic.abs().max(numeric.abs()).max(1e-2);
                ensure!(
                    (analytic - numeric).abs() <= 1e-4 * scale,
                    "{loss:?}, coordinate {k}: analytic {analytic}, finite difference {numeric} at theta={theta:?}, bias={bias}"
                );
            }
            done += 1;
        }
        cases += done;
    }
    Ok(cases)
}

fn monotone_descent(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(50, 500);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 12_000_000 + k as u64);
            let m = rng.random_range(5..=60);
            let d = rng.random_range(1..=4);
            let data = random_table(&mut rng, m, d);
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let cfg = LearnerConfig {
                learning_rate: 0.05,
                max_iters: 200,
                tol: f64::MIN_POSITIVE,
                ..LearnerConfig::linear(Loss::Logistic)
            };
            let path = ok(descent_path(&cfg, &data, &weights), "descent")?;
            for (i, w) in path.windows(2).enumerate() {
                ensure!(
                    w[1].objective <= w[0].objective * (1.0 + 1e-12),
                    "objective rises at iteration {}: {} -> {}",
                    i + 1,
                    w[0].objective,
                    w[1].objective
                );
            }
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

fn weight_scaling(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(200, 2_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 13_000_000 + k as u64);
            let m = rng.random_range(2..=60);
            let d = rng.random_range(1..=4);
            let data = random_table(&mut rng, m, d);
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            // Powers of two keep the scaled arithmetic exact.
            let c = f64::powi(2.0, rng.random_range(-6..=6));
            let scaled: Vec<f64> = weights.iter().map(|w| w * c).collect();

            let a = ok(fit(&LearnerConfig::stump(), &data, &weights), "stump")?.classifier;
            let b = ok(fit(&LearnerConfig::stump(), &data, &scaled), "stump")?.classifier;
            ensure!(a == b, "stump argmax changes under scaling by {c}: {a:?} vs {b:?}");

            let menu: Vec<Classifier> = (0..5)
                .map(|_| Classifier::Stump {
                    feature: rng.random_range(0..d),
                    tau: normal(&mut rng),
                    polarity: if rng.random_bool(0.5) { 1 } else { -1 },
                })
                .collect();
            let a = ok(fit(&LearnerConfig::menu(menu.clone()), &data, &weights), "menu")?.classifier;
            let b = ok(fit(&LearnerConfig::menu(menu), &data, &scaled), "menu")?.classifier;
            ensure!(a == b, "menu argmax changes under scaling by {c}");

            let base = LearnerConfig {
                lambda: 0.0,
                learning_rate: 0.05,
                max_iters: 40,
                tol: f64::MIN_POSITIVE,
                ..LearnerConfig::linear(Loss::Logistic)
            };
            let slow = LearnerConfig {
                learning_rate: base.learning_rate / c,
                ..base.clone()
            };
            let p = ok(descent_path(&base, &data, &weights), "descent")?;
            let q = ok(descent_path(&slow, &data, &scaled), "descent")?;
            ensure!(
                p.iter().zip(&q).all(|(x, y)| x.theta == y.theta && x.bias == y.bias),
                "scaled weights with step / {c} leave the iterate sequence"
            );
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

// -------------------------------------------------------------- dynamics

enum Instance {
    Stump,
    Threshold,
    Menu,
}

fn exact_instance(rng: &mut ChaCha8Rng, kind: &Instance) -> std::result::Result<(DynamicsConfig, Dataset), String> {
    let n = rng.random_range(2..=4);
    Ok(match kind {
        Instance::Stump => {
            let (m, d) = (rng.random_range(10..=80), rng.random_range(1..=4));
            let data = random_table(rng, m, d);
            (DynamicsConfig::homogeneous(LearnerConfig::stump(), n), data)
        }
        Instance::Threshold => {
            let spec = random_spec(rng);
            let data = ok(sample_gaussian_market(&spec, rng.random_range(10..=200), rng.random()), "sample")?;
            (DynamicsConfig::homogeneous(LearnerConfig::threshold(0), n), data)
        }
        Instance::Menu => {
            let m = rng.random_range(4..=30);
            let data = random_table(rng, m, 1);
            let menu = (0..rng.random_range(2..=8))
                .map(|_| {
                    let preds = (0..m).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
                    ok(Classifier::enumerated(&data, preds), "menu item")
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            (DynamicsConfig::homogeneous(LearnerConfig::menu(menu), n), data)
        }
    })
}

/// Exact potential and improvement checks along one trajectory.
fn check_steps(t: &Trajectory) -> std::result::Result<(), String> {
    for w in t.steps.windows(2) {
        let mover = w[1].mover.expect("only the first step is an initialization");
        let gain = w[1].share_numerators[mover] - w[0].share_numerators[mover];
        let drop = w[1].scaled_potential - w[0].scaled_potential;
        ensure!(
            drop == -gain,
            "round {}: potential changes by {drop}/{} but mover {mover} gains {gain}/{}",
            w[1].round,
            t.scale,
            t.scale * t.m as i128
        );
        ensure!(gain > 0, "round {}: adopted move by {mover} gains {gain}", w[1].round);
    }
    Ok(())
}

fn exact_dynamics(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(300, 3_000);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, 14_000_000 + k as u64);
            let kind = [Instance::Stump, Instance::Threshold, Instance::Menu]
                .into_iter()
                .nth(k % 3)
                .expect("three kinds");
            let (cfg, data) = exact_instance(&mut rng, &kind)?;
            let cfg = cfg.with_init(Init::SharedOptimum).with_rounds(100);
            let t = ok(run_dynamics(&cfg, &data, None), "dynamics")?;
            let context = format!("instance {k} (n={}, m={})", t.n, t.m);
            check_steps(&t).map_err(|e| format!("{context}: {e}"))?;
            let first = &t.steps[0];
            ensure!(
                first.scaled_potential == scaled_potential(&ok(
                    crate::market::compute_correctness(&t.initial, &data),
                    "correctness"
                )?),
                "{context}: initial potential mismatch"
            );
            ensure!(t.converged, "{context}: no convergence in 100 rounds");
            ensure!(
                ok(is_stable(&cfg, &data, &t.classifiers), "stability")?,
                "{context}: reported converged but some provider can still improve"
            );
            if t.n == 2 {
                // From the shared optimum, a response by one provider never
                // costs the other.
                for w in t.steps.windows(2).take(2) {
                    let other = 1 - w[1].mover.expect("adopted move");
                    ensure!(
                        w[1].share_numerators[other] >= w[0].share_numerators[other],
                        "{context}: provider {other} loses share when the other responds in round {}",
                        w[1].round
                    );
                }
                let last = t.steps.last().expect("nonempty");
                for i in 0..2 {
                    ensure!(
                        last.share_numerators[i] >= first.share_numerators[i],
                        "{context}: provider {i} ends below its shared-start share"
                    );
                }
                ensure!(
                    t.final_train().welfare >= t.initial_train().welfare,
                    "{context}: welfare falls from {} to {}",
                    t.initial_train().welfare,
                    t.final_train().welfare
                );
            }
            Ok(())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(total)
}

/// FNV-1a over a serialized value.
pub fn digest(value: &impl Serialize) -> u64 {
    let bytes = serde_json::to_vec(value).expect("results serialize");
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Digest of a fixed set of runs. Any change to tie-breaking, candidate
/// order or arithmetic shows up here.
pub const GOLDEN_DIGEST: u64 = 0xd1b4_9b18_de11_984a;

pub fn golden_runs() -> crate::Result<(Vec<Trajectory>, crate::dynamics::analytic::AnalyticTrajectory)> {
    let mut rng = rng_for(7, 0);
    let table = table_with(&mut rng, 60, 3, true);
    let spec = GaussianMarketSpec::balanced(1.0, 2.0, 1.0)?;
    let line = sample_gaussian_market(&spec, 400, 11)?;
    // Every pair of equal values has one label of each sign, so every
    // stump ties at the start.
    let tiny = Dataset::new(
        (0..8).map(|j| vec![(j / 2) as f64]).collect(),
        (0..8).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect(),
    )?;
    let menu_data = table_with(&mut rng, 12, 1, true);
    let menu = (0..6)
        .map(|_| Classifier::enumerated(&menu_data, (0..12).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()))
        .collect::<crate::Result<Vec<_>>>()?;
    let runs = vec![
        run_dynamics(&DynamicsConfig::homogeneous(LearnerConfig::stump(), 4), &table, None)?,
        run_dynamics(&DynamicsConfig::homogeneous(LearnerConfig::stump(), 3), &tiny, None)?,
        run_dynamics(&DynamicsConfig::homogeneous(LearnerConfig::threshold(0), 3), &line, None)?,
        run_dynamics(&DynamicsConfig::homogeneous(LearnerConfig::menu(menu), 3), &menu_data, None)?,
        run_dynamics(
            &DynamicsConfig::homogeneous(LearnerConfig { max_iters: 300, ..LearnerConfig::linear(Loss::Logistic) }, 2)
                .with_rounds(5),
            &table,
            None,
        )?,
    ];
    Ok((runs, run_analytic_dynamics(&AnalyticConfig::new(spec))?))
}

fn determinism(scale: Scale, seed: u64) -> Outcome {
    let (a, aa) = ok(golden_runs(), "golden runs")?;
    let (b, bb) = ok(golden_runs(), "golden runs")?;
    ensure!(digest(&(&a, &aa)) == digest(&(&b, &bb)), "repeated runs differ");
    for (k, t) in a.iter().enumerate() {
        check_steps(t).map_err(|e| format!("golden run {k}: {e}"))?;
    }
    let d = digest(&(&a, &aa));
    ensure!(d == GOLDEN_DIGEST, "golden digest {d:#018x}, expected {GOLDEN_DIGEST:#018x}");

    let total = scale.pick(20, 200);
    for k in 0..total {
        let mut rng = rng_for(seed, 15_000_000 + k as u64);
        let kind = [Instance::Stump, Instance::Threshold, Instance::Menu]
            .into_iter()
            .nth(k % 3)
            .expect("three kinds");
        let (cfg, data) = exact_instance(&mut rng, &kind)?;
        let x = ok(run_dynamics(&cfg, &data, None), "dynamics")?;
        let y = ok(run_dynamics(&cfg, &data, None), "dynamics")?;
        ensure!(digest(&x) == digest(&y), "instance {k}: repeated runs differ");
    }
    Ok(total + 1)
}

fn data_determinism(scale: Scale, seed: u64) -> Outcome {
    let total = scale.pick(20, 200);
    for k in 0..total {
        let mut rng = rng_for(seed, 16_000_000 + k as u64);
        let spec = random_spec(&mut rng);
        let s: u64 = rng.random();
        let m = rng.random_range(10..=500);
        let a = ok(sample_gaussian_market(&spec, m, s), "sample")?;
        let b = ok(sample_gaussian_market(&spec, m, s), "sample")?;
        ensure!(a.labels() == b.labels() && a.rows().eq(b.rows()), "sampling is not deterministic");
        let sp = SplitSpec { test_fraction: rng.random_range(0.1..0.5), seed: s };
        let (t1, v1) = ok(split(&a, &sp), "split")?;
        let (t2, v2) = ok(split(&a, &sp), "split")?;
        ensure!(t1.rows().eq(t2.rows()) && v1.rows().eq(v2.rows()), "split is not deterministic");
        ensure!(t1.len() + v1.len() == m, "split loses rows");
        let target = rng.random_range(0.3..0.7);
        if let Ok(r) = rebalance(&a, target, s) {
            let r2 = ok(rebalance(&a, target, s), "rebalance")?;
            ensure!(r.rows().eq(r2.rows()), "rebalance is not deterministic");
            let originals: Vec<(&[f64], i8)> = a.rows().zip(a.labels().iter().copied()).collect();
            ensure!(
                r.rows().zip(r.labels()).all(|(x, &y)| originals.contains(&(x, y))),
                "rebalance fabricates a row"
            );
        }
        let size = rng.random_range(1..=m);
        let p = ok(subsample(&a, size, s), "subsample")?;
        let q = ok(subsample(&a, size, s), "subsample")?;
        ensure!(p.len() == size && p.rows().eq(q.rows()), "subsample is not deterministic");
    }
    Ok(total)
}
