//! Best-response dynamics on the population itself, for two threshold
//! providers facing class-conditional Gaussians.

use serde::Serialize;

use crate::classifier::ext_reals;
use crate::error::{Error, Result};
use crate::exact::TIE_TOLERANCE;
use crate::threshold::{analytic_best_response, analytic_threshold_share, optimal_threshold, GaussianMarketSpec};

/// Population shares and welfare of threshold classifiers `taus`.
///
/// Splits the line at the finite thresholds; on each piece every provider
/// predicts a constant label, and the class masses there are divided among
/// the providers that are correct.
pub fn analytic_outcome(spec: &GaussianMarketSpec, taus: &[f64]) -> (Vec<f64>, f64) {
    let mut cuts: Vec<f64> = taus.iter().copied().filter(|t| t.is_finite()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(cuts);
    edges.push(f64::INFINITY);

    let mut shares = vec![0.0; taus.len()];
    let mut welfare = 0.0;
    for piece in edges.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let pos = spec.prior * spec.class_mass(true, lo, hi);
        let neg = (1.0 - spec.prior) * spec.class_mass(false, lo, hi);
        // On (lo, hi], h_tau predicts +1 iff tau <= lo.
        let says_pos: Vec<bool> = taus.iter().map(|&t| t <= lo).collect();
        let k_pos = says_pos.iter().filter(|&&p| p).count();
        let k_neg = taus.len() - k_pos;
        for (s, &p) in shares.iter_mut().zip(&says_pos) {
            *s += if p { pos / k_pos as f64 } else { neg / k_neg as f64 };
        }
        if k_pos > 0 {
            welfare += pos;
        }
        if k_neg > 0 {
            welfare += neg;
        }
    }
    (shares, welfare)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticConfig {
    pub spec: GaussianMarketSpec,
    /// Strategy interval; either end may be infinite.
    pub lo: f64,
    pub hi: f64,
    pub rounds: usize,
    /// Both providers start here; `None` = the accuracy-optimal threshold.
    pub start: Option<[f64; 2]>,
    /// Extra improvement required on top of a 1e-12 tie tolerance.
    pub epsilon: f64,
}

impl AnalyticConfig {
    pub fn new(spec: GaussianMarketSpec) -> Self {
        AnalyticConfig {
            spec,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            rounds: 10,
            start: None,
            epsilon: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticStep {
    pub round: usize,
    pub mover: Option<usize>,
    #[serde(serialize_with = "ext_reals")]
    pub taus: Vec<f64>,
    pub shares: Vec<f64>,
    pub welfare: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticTrajectory {
    pub steps: Vec<AnalyticStep>,
    /// Adopted moves per played round.
    pub adopted: Vec<usize>,
    pub converged: bool,
}

impl AnalyticTrajectory {
    pub fn last(&self) -> &AnalyticStep {
        self.steps.last().expect("initial step is always recorded")
    }

    pub fn first(&self) -> &AnalyticStep {
        &self.steps[0]
    }
}

fn clamp(t: f64, lo: f64, hi: f64) -> f64 {
    if t < lo {
        lo
    } else if t > hi {
        hi
    } else {
        t
    }
}

/// Sequential dynamics with provider 0 moving first, each responding with
/// [`analytic_best_response`] on `[lo, hi]`.
pub fn run_analytic_dynamics(cfg: &AnalyticConfig) -> Result<AnalyticTrajectory> {
    if !(cfg.lo < cfg.hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{}, {}]", cfg.lo, cfg.hi)));
    }
    if cfg.rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    if !(cfg.epsilon >= 0.0) {
        return Err(Error::InvalidParameter("epsilon must be >= 0".into()));
    }
    let spec = &cfg.spec;
    let mut taus = match cfg.start {
        Some(t) => t.map(|x| clamp(x, cfg.lo, cfg.hi)),
        None => [clamp(optimal_threshold(spec), cfg.lo, cfg.hi); 2],
    };
    let record = |round, mover, taus: &[f64; 2]| {
        let (shares, welfare) = analytic_outcome(spec, taus);
        AnalyticStep {
            round,
            mover,
            taus: taus.to_vec(),
            shares,
            welfare,
        }
    };
    let mut steps = vec![record(0, None, &taus)];
    let mut adopted = Vec::new();
    let mut converged = false;
    for round in 1..=cfg.rounds {
        let mut moves = 0;
        for i in 0..2 {
            let opp = taus[1 - i];
            let current = analytic_threshold_share(taus[i], opp, spec);
            let br = analytic_best_response(spec, opp, cfg.lo, cfg.hi)?;
            if br.share > current + TIE_TOLERANCE + cfg.epsilon {
                taus[i] = br.tau;
                steps.push(record(round, Some(i), &taus));
                moves += 1;
            }
        }
        adopted.push(moves);
        if moves == 0 {
            converged = true;
            break;
        }
    }
    Ok(AnalyticTrajectory {
        steps,
        adopted,
        converged,
    })
}
