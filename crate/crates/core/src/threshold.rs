//! One-dimensional threshold markets.
//!
//! The analytic side assumes class-conditional Gaussians
//! `x | y ~ Normal(a * y, sigma_y)` (sigma is a standard deviation) and
//! threshold classifiers `h_tau(x) = +1 iff x > tau`. The empirical side is an
//! exact weighted sweep over thresholds of a sample.

use std::ops::{Add, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianMarketSpec {
    /// Class `y` has mean `a * y`.
    pub a: f64,
    pub sigma_neg: f64,
    pub sigma_pos: f64,
    /// P(y = +1).
    pub prior: f64,
}

impl GaussianMarketSpec {
    pub fn new(a: f64, sigma_neg: f64, sigma_pos: f64, prior: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("mean offset {a} is not finite")));
        }
        if !(sigma_neg > 0.0 && sigma_neg.is_finite() && sigma_pos > 0.0 && sigma_pos.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "standard deviations must be positive, got {sigma_neg} and {sigma_pos}"
            )));
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::InvalidParameter(format!("prior {prior} outside (0, 1)")));
        }
        Ok(GaussianMarketSpec {
            a,
            sigma_neg,
            sigma_pos,
            prior,
        })
    }

    /// Balanced classes.
    pub fn balanced(a: f64, sigma_neg: f64, sigma_pos: f64) -> Result<Self> {
        Self::new(a, sigma_neg, sigma_pos, 0.5)
    }

    /// Coefficients `(q, l, c)` of `log rho(x) = q x^2 + l x + c`.
    fn log_rho_coefficients(&self) -> (f64, f64, f64) {
        let vp = self.sigma_pos * self.sigma_pos;
        let vn = self.sigma_neg * self.sigma_neg;
        let a2 = self.a * self.a;
        let q = 0.5 * (1.0 / vn - 1.0 / vp);
        let l = self.a / vp + self.a / vn;
        let c = -a2 / (2.0 * vp) + a2 / (2.0 * vn) + (self.sigma_neg / self.sigma_pos).ln();
        (q, l, c)
    }

    /// log f_+(x) - log f_-(x).
    pub fn log_rho(&self, x: f64) -> f64 {
        let zp = (x - self.a) / self.sigma_pos;
        let zn = (x + self.a) / self.sigma_neg;
        -0.5 * zp * zp + 0.5 * zn * zn + (self.sigma_neg / self.sigma_pos).ln()
    }

    /// d/dx log rho(x); has the same sign as rho'(x).
    pub fn log_rho_slope(&self, x: f64) -> f64 {
        let (q, l, _) = self.log_rho_coefficients();
        2.0 * q * x + l
    }

    /// Mass of class `y` examples in `(lo, hi]`.
    pub(crate) fn class_mass(&self, positive: bool, lo: f64, hi: f64) -> f64 {
        let (mean, sd) = if positive {
            (self.a, self.sigma_pos)
        } else {
            (-self.a, self.sigma_neg)
        };
        normal_mass(lo, hi, mean, sd)
    }

    /// Accuracy of `h_tau` on the population.
    pub fn accuracy(&self, tau: f64) -> f64 {
        self.prior * self.class_mass(true, tau, f64::INFINITY)
            + (1.0 - self.prior) * self.class_mass(false, f64::NEG_INFINITY, tau)
    }

    /// Partial discrepancy of `h_self` against `h_opp`: mass where `h_self`
    /// is correct and `h_opp` is not.
    pub fn discrepancy(&self, tau_self: f64, tau_opp: f64) -> f64 {
        if tau_self < tau_opp {
            self.prior * self.class_mass(true, tau_self, tau_opp)
        } else if tau_self > tau_opp {
            (1.0 - self.prior) * self.class_mass(false, tau_opp, tau_self)
        } else {
            0.0
        }
    }

    /// The two ratio levels a best response balances against: the
    /// class-conditional ratio at which the prior-weighted ratio equals 1/2
    /// and 2. Both reduce to `{1/2, 2}` for balanced classes.
    pub fn response_levels(&self) -> [f64; 2] {
        let odds = (1.0 - self.prior) / self.prior;
        [0.5 * odds, 2.0 * odds]
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// P(lo < X <= hi) for X ~ Normal(mean, sd), using whichever tail keeps the
/// subtraction well conditioned.
fn normal_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    if !(lo < hi) {
        return 0.0;
    }
    let zl = (lo - mean) / sd;
    let zh = (hi - mean) / sd;
    let mass = if zl > 0.0 {
        std_normal_sf(zl) - std_normal_sf(zh)
    } else {
        std_normal_cdf(zh) - std_normal_cdf(zl)
    };
    mass.max(0.0)
}

/// rho(x) = f_+(x) / f_-(x) on the class-conditional densities. Evaluated in
/// log space and clamped to the positive normal range of `f64`.
pub fn rho(spec: &GaussianMarketSpec, x: f64) -> f64 {
    spec.log_rho(x).exp().clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// All `x` in `[lo, hi]` with `rho(x) = z` and `rho'(x) > 0`, ascending.
/// The interval bounds may be infinite.
pub fn rho_inverse(spec: &GaussianMarketSpec, z: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidParameter(format!("target ratio {z} must be positive")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let (q, l, c0) = spec.log_rho_coefficients();
    let c = c0 - z.ln();
    let roots: Vec<f64> = if q == 0.0 {
        if l == 0.0 {
            Vec::new()
        } else {
            vec![-c / l]
        }
    } else {
        let disc = l * l - 4.0 * q * c;
        if disc < 0.0 {
            Vec::new()
        } else {
            let sq = disc.sqrt();
            // Stable pair: avoid cancelling l against sqrt(disc).
            let t = -0.5 * (l + l.signum() * sq);
            if t == 0.0 {
                vec![0.0]
            } else {
                vec![t / q, c / t]
            }
        }
    };
    let mut out: Vec<f64> = roots
        .into_iter()
        .filter(|x| x.is_finite() && *x >= lo && *x <= hi)
        .filter(|&x| spec.log_rho_slope(x) > 0.0)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Expected market share of `h_{tau_self}` against `h_{tau_opp}` on the
/// population: half of accuracy plus partial discrepancy.
pub fn analytic_threshold_share(tau_self: f64, tau_opp: f64, spec: &GaussianMarketSpec) -> f64 {
    0.5 * (spec.accuracy(tau_self) + spec.discrepancy(tau_self, tau_opp))
}

/// The accuracy-maximizing threshold. Accuracy is stationary where the
/// prior-weighted densities cross, and maximal at an upward crossing of the
/// ratio or at one of the infinite ends; all of these are compared.
pub fn optimal_threshold(spec: &GaussianMarketSpec) -> f64 {
    let level = (1.0 - spec.prior) / spec.prior;
    let mut candidates = vec![f64::NEG_INFINITY];
    candidates.extend(
        rho_inverse(spec, level, f64::NEG_INFINITY, f64::INFINITY).expect("level is positive"),
    );
    candidates.push(f64::INFINITY);
    let mut best = candidates[0];
    let mut best_acc = spec.accuracy(best);
    for &t in &candidates[1..] {
        let acc = spec.accuracy(t);
        if acc > best_acc + 1e-15 {
            best = t;
            best_acc = acc;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdResponse {
    #[serde(serialize_with = "crate::classifier::ext_real")]
    pub tau: f64,
    pub share: f64,
}

/// Candidate thresholds for a best response to `tau_opp` within `[lo, hi]`:
/// the interval ends, `tau_opp` itself, and the upward crossings of the two
/// response levels.
pub fn response_candidates(spec: &GaussianMarketSpec, tau_opp: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let mut c = vec![lo, hi];
    if tau_opp >= lo && tau_opp <= hi {
        c.push(tau_opp);
    }
    for z in spec.response_levels() {
        c.extend(rho_inverse(spec, z, lo, hi)?);
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    Ok(c)
}

fn distance(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Best threshold response to `tau_opp` from `[lo, hi]` (bounds may be
/// infinite). Shares within 1e-12 are ties, resolved toward the candidate
/// nearest `tau_opp`, then toward the smaller threshold.
pub fn analytic_best_response(
    spec: &GaussianMarketSpec,
    tau_opp: f64,
    lo: f64,
    hi: f64,
) -> Result<ThresholdResponse> {
    let candidates = response_candidates(spec, tau_opp, lo, hi)?;
    let scored: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&t| (t, analytic_threshold_share(t, tau_opp, spec)))
        .collect();
    let top = scored.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
    let (tau, share) = scored
        .into_iter()
        .filter(|&(_, s)| s >= top - 1e-12)
        .min_by(|x, y| {
            distance(x.0, tau_opp)
                .total_cmp(&distance(y.0, tau_opp))
                .then(x.0.total_cmp(&y.0))
        })
        .expect("candidate set is nonempty");
    Ok(ThresholdResponse { tau, share })
}

/// Scores accumulated by the threshold sweep: `f64` for general weights, or
/// an exact integer type when weights are integers.
pub trait SweepScore: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Default {}
impl SweepScore for f64 {}
impl SweepScore for i128 {}

/// Exact weighted threshold ERM. Returns `(tau, score)` where `score` is the
/// summed weight of correctly classified examples. Candidates are `-inf`,
/// midpoints between consecutive distinct values, and `+inf`; ties go to the
/// leftmost candidate.
pub fn sweep_best_threshold<S: SweepScore>(xs: &[f64], labels: &[i8], weights: &[S]) -> (f64, S) {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));

    // At tau = -inf everything is predicted +1.
    let mut score = S::default();
    for (&y, &w) in labels.iter().zip(weights) {
        if y == 1 {
            score = score + w;
        }
    }
    let mut best = (f64::NEG_INFINITY, score);
    let mut k = 0;
    while k < order.len() {
        let v = xs[order[k]];
        // Move every example with value v to the predicted-negative side.
        while k < order.len() && xs[order[k]] == v {
            let j = order[k];
            score = if labels[j] == 1 { score - weights[j] } else { score + weights[j] };
            k += 1;
        }
        let tau = if k < order.len() {
            let next = xs[order[k]];
            v + (next - v) / 2.0
        } else {
            f64::INFINITY
        };
        if score > best.1 {
            best = (tau, score);
        }
    }
    best
}

/// Weighted threshold best response on a sample: returns the threshold and
/// its weighted share `sum_j w_j [h_tau(x_j) = y_j] / m`.
pub fn empirical_threshold_br(xs: &[f64], labels: &[i8], weights: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::Empty("threshold sweep input"));
    }
    if labels.len() != xs.len() || weights.len() != xs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} values, {} labels, {} weights",
            xs.len(),
            labels.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidWeights("threshold sweep weights must be positive".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in threshold sweep".into()));
    }
    let (tau, score) = sweep_best_threshold(xs, labels, weights);
    Ok((tau, score / xs.len() as f64))
}
