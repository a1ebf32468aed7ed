//! Exact analysis of games over finite strategy menus.

use serde::Serialize;

use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::market::{
    accuracy, partial_discrepancy, ratio, tie_denominator, weighted_numerator, CorrectnessMatrix,
};

/// Payoff comparisons closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Tolerance on `a1 - d12 == a2 - d21` when building a game from raw numbers.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// A two-strategy duopoly, fully described by the accuracies of the two
/// strategies and their partial discrepancies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Game2x2 {
    pub a1: f64,
    pub a2: f64,
    pub d12: f64,
    pub d21: f64,
}

impl Game2x2 {
    pub fn new(a1: f64, a2: f64, d12: f64, d21: f64) -> Result<Self> {
        for (name, v) in [("a1", a1), ("a2", a2), ("d12", d12), ("d21", d21)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InconsistentGame(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if d12 > a1 + CONSISTENCY_TOLERANCE || d21 > a2 + CONSISTENCY_TOLERANCE {
            return Err(Error::InconsistentGame(
                "a discrepancy exceeds its accuracy".into(),
            ));
        }
        if ((a1 - d12) - (a2 - d21)).abs() > CONSISTENCY_TOLERANCE {
            return Err(Error::InconsistentGame(format!(
                "a1 - d12 = {} but a2 - d21 = {}",
                a1 - d12,
                a2 - d21
            )));
        }
        Ok(Game2x2 { a1, a2, d12, d21 })
    }

    pub fn from_classifiers(h1: &Classifier, h2: &Classifier, data: &Dataset) -> Result<Self> {
        Self::new(
            accuracy(h1, data)?,
            accuracy(h2, data)?,
            partial_discrepancy(h1, h2, data)?,
            partial_discrepancy(h2, h1, data)?,
        )
    }

    /// `table[r][c]` = (row player's share, column player's share) when the
    /// row player uses strategy `r` and the column player strategy `c`.
    pub fn payoff_matrix(&self) -> [[(f64, f64); 2]; 2] {
        let off12 = 0.5 * (self.a1 + self.d12);
        let off21 = 0.5 * (self.a2 + self.d21);
        [
            [(0.5 * self.a1, 0.5 * self.a1), (off12, off21)],
            [(off21, off12), (0.5 * self.a2, 0.5 * self.a2)],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    /// `(h*, h*)` is an equilibrium; `dominant` is the index of `h*`.
    DominantStrategy { dominant: usize },
    /// Both `(h1, h2)` and `(h2, h1)` are equilibria.
    AntiCoordination,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    /// All pure equilibria as (row strategy, column strategy), lexicographic.
    pub pne_states: Vec<[usize; 2]>,
    pub payoffs: Vec<(f64, f64)>,
    /// The accuracy gap sits exactly on the anti-coordination boundary, so
    /// some deviation leaves the deviator indifferent.
    pub boundary_tie: bool,
}

fn is_pne(table: &[[(f64, f64); 2]; 2], r: usize, c: usize) -> bool {
    let (ur, uc) = table[r][c];
    table[1 - r][c].0 <= ur + TIE_TOLERANCE && table[r][1 - c].1 <= uc + TIE_TOLERANCE
}

pub fn classify_2x2(g: &Game2x2) -> EquilibriumReport {
    let table = g.payoff_matrix();
    let gap = (g.a1 - g.a2).abs();
    let bound = (g.d12 + g.d21) / 3.0;
    let anti = gap <= bound + TIE_TOLERANCE;
    let boundary_tie = (gap - bound).abs() <= TIE_TOLERANCE;

    let mut pne_states = Vec::new();
    for r in 0..2 {
        for c in 0..2 {
            if is_pne(&table, r, c) {
                pne_states.push([r, c]);
            }
        }
    }
    let payoffs = pne_states.iter().map(|&[r, c]| table[r][c]).collect();

    let kind = if anti {
        EquilibriumKind::AntiCoordination
    } else {
        let dominant = if is_pne(&table, 0, 0) { 0 } else { 1 };
        EquilibriumKind::DominantStrategy { dominant }
    };
    EquilibriumReport {
        kind,
        pne_states,
        payoffs,
        boundary_tie,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestResponse {
    pub index: usize,
    pub classifier: Classifier,
    /// The responder's market share if it adopts `classifier`.
    pub share: f64,
}

/// Index of the menu item with the largest weighted count of correct
/// examples; ties go to the lowest index.
pub(crate) fn argmax_weighted<'a>(rows: impl Iterator<Item = &'a [bool]>, weights: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, row) in rows.enumerate() {
        let score: f64 = row.iter().zip(weights).filter(|(&e, _)| e).map(|(_, w)| w).sum();
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((k, score));
        }
    }
    best
}

/// Exact best response over a finite menu against fixed opponents.
///
/// `others` holds the opponents' correctness rows only (it may have zero
/// rows). Ties are broken toward the lowest menu index.
pub fn best_response_finite(
    menu: &[Classifier],
    others: &CorrectnessMatrix,
    data: &Dataset,
) -> Result<BestResponse> {
    if menu.is_empty() {
        return Err(Error::EmptyMenu);
    }
    if others.examples() != data.len() {
        return Err(Error::InvalidParameter(format!(
            "opponent matrix has {} columns, data has {} examples",
            others.examples(),
            data.len()
        )));
    }
    let kappa = others.column_counts();
    let scale = tie_denominator(others.providers() + 1);
    let mut best: Option<(usize, i128)> = None;
    for (k, h) in menu.iter().enumerate() {
        let num = weighted_numerator(&h.correct(data)?, &kappa, scale);
        if best.is_none_or(|(_, b)| num > b) {
            best = Some((k, num));
        }
    }
    let (index, num) = best.expect("menu is nonempty");
    Ok(BestResponse {
        index,
        classifier: menu[index].clone(),
        share: ratio(num, scale * data.len() as i128),
    })
}

/// Largest number of strategy profiles [`enumerate_pne`] will visit.
pub const PNE_SEARCH_LIMIT: u128 = 1_000_000;

/// All pure Nash equilibria of the game where player `i` chooses from
/// `menus[i]`, by brute force. Profiles are menu indices, returned in
/// lexicographic order.
pub fn enumerate_pne(menus: &[Vec<Classifier>], data: &Dataset) -> Result<Vec<Vec<usize>>> {
    let rows = menus
        .iter()
        .map(|menu| {
            if menu.is_empty() {
                return Err(Error::EmptyMenu);
            }
            menu.iter().map(|h| h.correct(data)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    enumerate_pne_rows(&rows)
}

/// [`enumerate_pne`] on precomputed correctness rows:
/// `rows[player][item][example]`.
pub fn enumerate_pne_rows(rows: &[Vec<Vec<bool>>]) -> Result<Vec<Vec<usize>>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty("no players"));
    }
    let size = rows.iter().try_fold(1u128, |acc, r| acc.checked_mul(r.len() as u128));
    match size {
        Some(s) if s <= PNE_SEARCH_LIMIT => {}
        _ => {
            return Err(Error::SearchSpaceTooLarge {
                size: size.unwrap_or(u128::MAX),
                limit: PNE_SEARCH_LIMIT,
            })
        }
    }
    if rows.iter().any(Vec::is_empty) {
        return Err(Error::EmptyMenu);
    }
    let m = rows[0][0].len();
    let scale = tie_denominator(n);

    let mut profile = vec![0usize; n];
    let mut kappa = vec![0u32; m];
    let mut out = Vec::new();
    loop {
        kappa.iter_mut().for_each(|k| *k = 0);
        for (p, &s) in profile.iter().enumerate() {
            for (k, &e) in kappa.iter_mut().zip(&rows[p][s]) {
                *k += e as u32;
            }
        }
        let stable = (0..n).all(|p| {
            let own = &rows[p][profile[p]];
            let others: Vec<u32> = kappa.iter().zip(own).map(|(&k, &e)| k - e as u32).collect();
            let current = weighted_numerator(own, &others, scale);
            rows[p]
                .iter()
                .all(|alt| weighted_numerator(alt, &others, scale) <= current)
        });
        if stable {
            out.push(profile.clone());
        }
        // Advance the mixed-radix counter, last player fastest.
        let mut p = n;
        loop {
            if p == 0 {
                return Ok(out);
            }
            p -= 1;
            profile[p] += 1;
            if profile[p] < rows[p].len() {
                break;
            }
            profile[p] = 0;
        }
    }
}
