//! The congestion-game potential.
//!
//! Each example is a resource whose cost to the k-th provider sharing it is
//! `-1/k`, so `Phi = -sum_j H(kappa_j)` with `H` the harmonic numbers. A
//! unilateral move changes `Phi` by exactly `-m` times the mover's change in
//! market share.

use crate::market::{tie_denominator, CorrectnessMatrix};

/// `Phi * lcm(1..=n)` as an exact integer.
pub fn scaled_potential(c: &CorrectnessMatrix) -> i128 {
    scaled_potential_from_counts(&c.column_counts(), tie_denominator(c.providers()))
}

pub(crate) fn scaled_potential_from_counts(kappa: &[u32], scale: i128) -> i128 {
    let mut harmonic = vec![0i128];
    let max = kappa.iter().copied().max().unwrap_or(0) as i128;
    for k in 1..=max {
        harmonic.push(harmonic[k as usize - 1] + scale / k);
    }
    -kappa.iter().map(|&k| harmonic[k as usize]).sum::<i128>()
}

/// `Phi = sum_j sum_{k=1}^{kappa_j} (-1/k)` over example counts.
pub fn potential(c: &CorrectnessMatrix) -> f64 {
    scaled_potential(c) as f64 / tie_denominator(c.providers()) as f64
}
