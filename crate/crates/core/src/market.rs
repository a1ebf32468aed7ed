//! Ground-truth accounting of an accuracy market: who is correct where, and
//! what that implies for market shares, welfare and concentration.
//!
//! Every share-like quantity is accumulated as an integer numerator over the
//! common denominator `L * m`, where `L = lcm(1, ..., n)`, and divided once
//! at the end. This makes `sum(shares) == welfare` hold up to a single
//! rounding per term, and makes the weighted-accuracy route to a share agree
//! with the tie-breaking route bit for bit.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Upper bound on providers for exact share accounting.
pub const MAX_PROVIDERS: usize = 64;

/// Upper bound on providers for the subset decomposition (bitmask width).
pub const MAX_DECOMPOSITION_PROVIDERS: usize = 20;

/// `n x m` table: entry `(i, j)` is true iff provider `i` is correct on example `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectnessMatrix {
    n: usize,
    m: usize,
    entries: Vec<bool>,
}

impl CorrectnessMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let m = rows.first().map(Vec::len).ok_or(Error::Empty("correctness matrix"))?;
        Self::with_columns(rows, m)
    }

    /// Like [`CorrectnessMatrix::new`] but accepts zero rows.
    pub fn with_columns(rows: Vec<Vec<bool>>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty("correctness matrix has no columns"));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidParameter("ragged correctness matrix".into()));
        }
        if rows.len() > MAX_PROVIDERS {
            return Err(Error::TooManyProviders {
                n: rows.len(),
                limit: MAX_PROVIDERS,
            });
        }
        Ok(CorrectnessMatrix {
            n: rows.len(),
            m,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn empty(m: usize) -> Result<Self> {
        Self::with_columns(Vec::new(), m)
    }

    pub fn providers(&self) -> usize {
        self.n
    }

    pub fn examples(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    /// kappa(j): number of providers correct on example `j`.
    pub fn column_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.m];
        for row in self.entries.chunks_exact(self.m) {
            for (c, &e) in counts.iter_mut().zip(row) {
                *c += e as u32;
            }
        }
        counts
    }

    fn check_provider(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::ProviderOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    /// Copy of the matrix without row `i`.
    pub fn without(&self, i: usize) -> Result<Self> {
        self.check_provider(i)?;
        let rows = (0..self.n).filter(|&k| k != i).map(|k| self.row(k).to_vec()).collect();
        Self::with_columns(rows, self.m)
    }

    pub fn with_row(&self, row: Vec<bool>) -> Result<Self> {
        let mut rows: Vec<Vec<bool>> = (0..self.n).map(|k| self.row(k).to_vec()).collect();
        rows.push(row);
        Self::with_columns(rows, self.m)
    }
}

/// `lcm(1, ..., n)`, the common denominator of all tie-breaking fractions.
pub fn tie_denominator(n: usize) -> i128 {
    fn gcd(mut a: i128, mut b: i128) -> i128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    (1..=n.max(1) as i128).fold(1, |l, k| l / gcd(l, k) * k)
}

/// Shares as exact rationals `numerators[i] / (scale * m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactShares {
    pub numerators: Vec<i128>,
    pub served: usize,
    pub scale: i128,
    pub m: usize,
}

impl ExactShares {
    pub fn denominator(&self) -> i128 {
        self.scale * self.m as i128
    }

    pub fn share(&self, i: usize) -> f64 {
        ratio(self.numerators[i], self.denominator())
    }

    pub fn shares(&self) -> Vec<f64> {
        (0..self.numerators.len()).map(|i| self.share(i)).collect()
    }

    pub fn welfare(&self) -> f64 {
        self.served as f64 / self.m as f64
    }
}

pub(crate) fn ratio(num: i128, den: i128) -> f64 {
    num as f64 / den as f64
}

/// Market shares under uniform tie-breaking, as exact rationals.
pub fn exact_shares(c: &CorrectnessMatrix) -> ExactShares {
    let scale = tie_denominator(c.n);
    let kappa = c.column_counts();
    let numerators = (0..c.n)
        .map(|i| {
            c.row(i)
                .iter()
                .zip(&kappa)
                .filter(|(&e, _)| e)
                .map(|(_, &k)| scale / k as i128)
                .sum()
        })
        .collect();
    ExactShares {
        numerators,
        served: kappa.iter().filter(|&&k| k > 0).count(),
        scale,
        m: c.m,
    }
}

/// mu_i = (1/m) * sum_j C(i,j) / kappa(j).
pub fn market_shares(c: &CorrectnessMatrix) -> Vec<f64> {
    exact_shares(c).shares()
}

/// Fraction of examples with at least one correct provider.
pub fn welfare(c: &CorrectnessMatrix) -> f64 {
    exact_shares(c).welfare()
}

pub fn compute_correctness(classifiers: &[Classifier], data: &Dataset) -> Result<CorrectnessMatrix> {
    let rows = classifiers
        .iter()
        .map(|h| h.correct(data))
        .collect::<Result<Vec<_>>>()?;
    CorrectnessMatrix::with_columns(rows, data.len())
}

pub fn accuracy(h: &Classifier, data: &Dataset) -> Result<f64> {
    let correct = h.correct(data)?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / data.len() as f64)
}

/// delta_ij: fraction of examples where `hi` is correct and `hj` is wrong.
pub fn partial_discrepancy(hi: &Classifier, hj: &Classifier, data: &Dataset) -> Result<f64> {
    let ci = hi.correct(data)?;
    let cj = hj.correct(data)?;
    let count = ci.iter().zip(&cj).filter(|(&a, &b)| a && !b).count();
    Ok(count as f64 / data.len() as f64)
}

/// kappa_{-i}(j): number of providers other than `i` correct on example `j`.
pub fn others_correct(c: &CorrectnessMatrix, i: usize) -> Result<Vec<u32>> {
    c.check_provider(i)?;
    let mut kappa = c.column_counts();
    for (k, &e) in kappa.iter_mut().zip(c.row(i)) {
        *k -= e as u32;
    }
    Ok(kappa)
}

/// w_i(x_j) = 1 / (1 + kappa_{-i}(j)).
pub fn competition_weights(c: &CorrectnessMatrix, i: usize) -> Result<Vec<f64>> {
    Ok(others_correct(c, i)?
        .into_iter()
        .map(|k| 1.0 / (1.0 + k as f64))
        .collect())
}

/// Weights `1 / (1 + kappa(j))` induced by an opponents-only matrix.
pub fn weights_against(others: &CorrectnessMatrix) -> Vec<f64> {
    others
        .column_counts()
        .into_iter()
        .map(|k| 1.0 / (1.0 + k as f64))
        .collect()
}

/// Same weights scaled by `lcm(1..=n+1)` so that every weight is an integer.
/// Sums of these are exact in `f64` while below 2^53.
pub fn integer_weights_against(others: &CorrectnessMatrix) -> (Vec<f64>, i128) {
    let scale = tie_denominator(others.providers() + 1);
    let w = others
        .column_counts()
        .into_iter()
        .map(|k| (scale / (1 + k as i128)) as f64)
        .collect();
    (w, scale)
}

/// Numerator of the weighted-accuracy share of `row` against opponents with
/// column counts `others`, over denominator `scale * m`.
pub(crate) fn weighted_numerator(row: &[bool], others: &[u32], scale: i128) -> i128 {
    row.iter()
        .zip(others)
        .filter(|(&e, _)| e)
        .map(|(_, &k)| scale / (1 + k as i128))
        .sum()
}

/// (1/m) * sum_j w_i(x_j) * C(i,j), the weighted-accuracy form of provider
/// `i`'s share. Equals `market_shares(c)[i]` bit for bit.
pub fn weighted_share_identity(c: &CorrectnessMatrix, i: usize) -> Result<f64> {
    let others = others_correct(c, i)?;
    let scale = tie_denominator(c.n);
    let num = weighted_numerator(c.row(i), &others, scale);
    Ok(ratio(num, scale * c.m as i128))
}

/// Fraction of examples whose set of correct providers is exactly `S`, keyed
/// by the bitmask of `S` (bit `i` = provider `i`). Subsets with no examples
/// are omitted; their mass is zero.
pub fn subset_decomposition(c: &CorrectnessMatrix) -> Result<BTreeMap<u32, f64>> {
    if c.n > MAX_DECOMPOSITION_PROVIDERS {
        return Err(Error::TooManyProviders {
            n: c.n,
            limit: MAX_DECOMPOSITION_PROVIDERS,
        });
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for j in 0..c.m {
        let mask = (0..c.n).filter(|&i| c.get(i, j)).fold(0u32, |acc, i| acc | (1 << i));
        *counts.entry(mask).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, v)| (k, v as f64 / c.m as f64))
        .collect())
}

/// Herfindahl index over shares of the served market: sum_i (mu_i / W)^2.
pub fn hhi_of_shares(shares: &[f64]) -> Option<f64> {
    let w: f64 = shares.iter().sum();
    if w <= 0.0 {
        return None;
    }
    Some(shares.iter().map(|s| (s / w) * (s / w)).sum())
}

pub fn hhi(outcome: &MarketOutcome) -> Result<f64> {
    if outcome.welfare <= 0.0 {
        return Err(Error::ZeroWelfare);
    }
    Ok(outcome
        .shares
        .iter()
        .map(|s| (s / outcome.welfare) * (s / outcome.welfare))
        .sum())
}

fn exact_hhi(exact: &ExactShares) -> Option<f64> {
    let total: i128 = exact.numerators.iter().sum();
    if total == 0 {
        return None;
    }
    // Compare in f64: the squares can overflow i128 for large m * lcm.
    let t = total as f64;
    Some(exact.numerators.iter().map(|&x| (x as f64 / t).powi(2)).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub shares: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub welfare: f64,
    /// `None` when welfare is zero.
    pub hhi: Option<f64>,
    /// Bitmask -> mass; absent subsets have zero mass.
    pub decomposition: BTreeMap<u32, f64>,
}

impl MarketOutcome {
    pub fn from_correctness(c: &CorrectnessMatrix) -> Result<Self> {
        let exact = exact_shares(c);
        let accuracies = (0..c.n)
            .map(|i| c.row(i).iter().filter(|&&e| e).count() as f64 / c.m as f64)
            .collect();
        Ok(MarketOutcome {
            shares: exact.shares(),
            accuracies,
            welfare: exact.welfare(),
            hhi: exact_hhi(&exact),
            decomposition: subset_decomposition(c)?,
        })
    }

    pub fn evaluate(classifiers: &[Classifier], data: &Dataset) -> Result<Self> {
        Self::from_correctness(&compute_correctness(classifiers, data)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: bool = true;
    const F: bool = false;

    fn table() -> CorrectnessMatrix {
        CorrectnessMatrix::new(vec![vec![T, T, F, F], vec![T, F, T, F]]).unwrap()
    }

    /// Labels (-,-,+,+). The always-negative classifier is correct on the
    /// first two points; the enumerated one on the first and third.
    fn four_points() -> (Dataset, [Classifier; 2]) {
        let d = Dataset::from_scalars(vec![0.0, 1.0, 2.0, 3.0], vec![-1, -1, 1, 1]).unwrap();
        let h1 = Classifier::threshold(f64::INFINITY);
        let h2 = Classifier::enumerated(&d, vec![-1, 1, 1, -1]).unwrap();
        (d, [h1, h2])
    }

    #[test]
    fn correctness_examples() {
        let d = Dataset::from_scalars(vec![0.0, 1.0], vec![1, 1]).unwrap();
        let c = compute_correctness(&[Classifier::constant(1)], &d).unwrap();
        assert_eq!(c.row(0), &[T, T]);

        let d = Dataset::from_scalars(vec![-1.0, 1.0], vec![-1, 1]).unwrap();
        let c = compute_correctness(&[Classifier::threshold(0.0)], &d).unwrap();
        assert_eq!(c.row(0), &[T, T]);

        let (d, hs) = four_points();
        assert_eq!(compute_correctness(&hs, &d).unwrap(), table());
    }

    #[test]
    fn shares_welfare_and_weights_on_the_four_point_table() {
        let c = table();
        assert_eq!(market_shares(&c), vec![3.0 / 8.0, 3.0 / 8.0]);
        assert_eq!(welfare(&c), 0.75);
        assert_eq!(competition_weights(&c, 0).unwrap(), vec![0.5, 1.0, 0.5, 1.0]);
        assert_eq!(weighted_share_identity(&c, 0).unwrap(), 3.0 / 8.0);
        assert!(competition_weights(&c, 2).is_err());

        let dec = subset_decomposition(&c).unwrap();
        let expect: BTreeMap<u32, f64> = [(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)].into();
        assert_eq!(dec, expect);
    }

    #[test]
    fn trivial_cases() {
        let mono = CorrectnessMatrix::new(vec![vec![T; 5]]).unwrap();
        assert_eq!(market_shares(&mono), vec![1.0]);
        assert_eq!(competition_weights(&mono, 0).unwrap(), vec![1.0; 5]);
        assert_eq!(weighted_share_identity(&mono, 0).unwrap(), 1.0);
        assert_eq!(subset_decomposition(&mono).unwrap(), [(1u32, 1.0)].into());

        let none = CorrectnessMatrix::new(vec![vec![F; 3], vec![F; 3]]).unwrap();
        assert_eq!(market_shares(&none), vec![0.0, 0.0]);
        assert_eq!(welfare(&none), 0.0);
        assert_eq!(weighted_share_identity(&none, 1).unwrap(), 0.0);

        let all = CorrectnessMatrix::new(vec![vec![T; 3]; 3]).unwrap();
        assert_eq!(welfare(&all), 1.0);
        assert_eq!(subset_decomposition(&all).unwrap(), [(7u32, 1.0)].into());
        // Column where every other provider is correct gets weight 1/n.
        assert_eq!(competition_weights(&all, 1).unwrap(), vec![1.0 / 3.0; 3]);

        let partial = CorrectnessMatrix::new(vec![vec![T, F, T, T]]).unwrap();
        assert_eq!(subset_decomposition(&partial).unwrap(), [(0u32, 0.25), (1, 0.75)].into());
    }

    #[test]
    fn accuracy_and_discrepancy() {
        let d = Dataset::from_scalars(vec![0.0; 5], vec![1, 1, 1, -1, -1]).unwrap();
        assert!((accuracy(&Classifier::threshold(f64::NEG_INFINITY), &d).unwrap() - 0.6).abs() < 1e-15);
        let perfect = Classifier::enumerated(&d, d.labels().to_vec()).unwrap();
        assert_eq!(accuracy(&perfect, &d).unwrap(), 1.0);
        let wrong = Classifier::enumerated(&d, d.labels().iter().map(|y| -y).collect()).unwrap();
        assert_eq!(partial_discrepancy(&perfect, &wrong, &d).unwrap(), 1.0);
        assert_eq!(partial_discrepancy(&perfect, &perfect, &d).unwrap(), 0.0);

        let (d, [h1, h2]) = four_points();
        assert_eq!(accuracy(&h1, &d).unwrap(), 0.5);
        assert_eq!(partial_discrepancy(&h1, &h2, &d).unwrap(), 0.25);
        assert_eq!(partial_discrepancy(&h2, &h1, &d).unwrap(), 0.25);
    }

    #[test]
    fn hhi_examples() {
        let out = MarketOutcome::from_correctness(&table()).unwrap();
        assert!((hhi(&out).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(out.hhi, Some(0.5));
        let mono = MarketOutcome::from_correctness(&CorrectnessMatrix::new(vec![vec![T, F]]).unwrap()).unwrap();
        assert_eq!(hhi(&mono).unwrap(), 1.0);
        let eq = hhi_of_shares(&[0.2; 5]).unwrap();
        assert!((eq - 0.2).abs() < 1e-15);
        let none = MarketOutcome::from_correctness(&CorrectnessMatrix::new(vec![vec![F, F]]).unwrap()).unwrap();
        assert!(matches!(hhi(&none), Err(Error::ZeroWelfare)));
        assert_eq!(none.hhi, None);
    }

    #[test]
    fn decomposition_width_guard() {
        let c = CorrectnessMatrix::new(vec![vec![T]; 21]).unwrap();
        assert!(matches!(subset_decomposition(&c), Err(Error::TooManyProviders { .. })));
    }

    #[test]
    fn tie_denominators() {
        assert_eq!(tie_denominator(0), 1);
        assert_eq!(tie_denominator(4), 12);
        assert_eq!(tie_denominator(6), 60);
        assert_eq!(tie_denominator(10), 2520);
    }
}
