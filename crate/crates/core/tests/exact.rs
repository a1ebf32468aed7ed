use accmarket::exact::{best_response_finite, classify_2x2, enumerate_pne_rows, EquilibriumKind, Game2x2};
use accmarket::market::CorrectnessMatrix;
use accmarket::{Classifier, Dataset};
use proptest::prelude::*;

/// Payoffs counted directly: an example pays 1 to a lone correct player and
/// 1/2 to each of two correct players.
fn payoffs(r1: &[bool], r2: &[bool]) -> (f64, f64) {
    let m = r1.len() as f64;
    let (mut u1, mut u2) = (0.0, 0.0);
    for (&a, &b) in r1.iter().zip(r2) {
        match (a, b) {
            (true, true) => {
                u1 += 0.5;
                u2 += 0.5;
            }
            (true, false) => u1 += 1.0,
            (false, true) => u2 += 1.0,
            _ => {}
        }
    }
    (u1 / m, u2 / m)
}

/// Pure equilibria of the two-player game where both players pick from the
/// same menu of correctness rows.
fn brute_pne(menu: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let k = menu.len();
    let mut out = Vec::new();
    for s in 0..k {
        for t in 0..k {
            let (u1, u2) = payoffs(&menu[s], &menu[t]);
            let stable1 = (0..k).all(|s2| payoffs(&menu[s2], &menu[t]).0 <= u1 + 1e-12);
            let stable2 = (0..k).all(|t2| payoffs(&menu[s], &menu[t2]).1 <= u2 + 1e-12);
            if stable1 && stable2 {
                out.push(vec![s, t]);
            }
        }
    }
    out
}

fn menu(m: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), m), 2..=4)
}

proptest! {
    #[test]
    fn enumeration_matches_brute_force(rows in (1usize..=10).prop_flat_map(menu)) {
        let mut got = enumerate_pne_rows(&[rows.clone(), rows.clone()]).unwrap();
        got.sort();
        prop_assert_eq!(got, brute_pne(&rows));
    }

    #[test]
    fn classification_matches_brute_force(rows in (1usize..=10).prop_flat_map(|m| prop::collection::vec(prop::collection::vec(any::<bool>(), m), 2))) {
        let (r1, r2) = (&rows[0], &rows[1]);
        let m = r1.len() as f64;
        let count = |f: &dyn Fn(bool, bool) -> bool| r1.iter().zip(r2).filter(|(&a, &b)| f(a, b)).count() as f64 / m;
        let g = Game2x2::new(
            count(&|a, _| a),
            count(&|_, b| b),
            count(&|a, b| a && !b),
            count(&|a, b| b && !a),
        )
        .unwrap();
        let report = classify_2x2(&g);
        let mut states: Vec<Vec<usize>> = report.pne_states.iter().map(|s| s.to_vec()).collect();
        states.sort();
        prop_assert_eq!(&states, &brute_pne(&rows));
        if !report.boundary_tie {
            match report.kind {
                EquilibriumKind::AntiCoordination => {
                    prop_assert!(states.contains(&vec![0, 1]) && states.contains(&vec![1, 0]));
                }
                EquilibriumKind::DominantStrategy { dominant } => {
                    prop_assert_eq!(states, vec![vec![dominant, dominant]]);
                }
            }
        }
    }

    #[test]
    fn equilibria_respect_the_two_thirds_bound(rows in (1usize..=10).prop_flat_map(menu)) {
        for s in enumerate_pne_rows(&[rows.clone(), rows.clone()]).unwrap() {
            let (u1, u2) = payoffs(&rows[s[0]], &rows[s[1]]);
            prop_assert!(u1.max(u2) <= 2.0 / 3.0 * (u1 + u2) + 1e-12);
        }
    }

    #[test]
    fn best_response_maximizes_counted_payoff(
        (rows, opp) in (1usize..=10).prop_flat_map(|m| (menu(m), prop::collection::vec(any::<bool>(), m)))
    ) {
        let m = opp.len();
        let data = Dataset::from_scalars((0..m).map(|j| j as f64).collect(), vec![1; m]).unwrap();
        let items: Vec<Classifier> = rows.iter().map(|r| Classifier::from_correctness(&data, r).unwrap()).collect();
        let others = CorrectnessMatrix::new(vec![opp.clone()]).unwrap();
        let br = best_response_finite(&items, &others, &data).unwrap();
        let best = rows.iter().map(|r| payoffs(r, &opp).0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((br.share - best).abs() < 1e-12);
        prop_assert!((payoffs(&rows[br.index], &opp).0 - best).abs() < 1e-12);
    }
}

#[test]
fn dominant_strategy_when_one_classifier_is_much_better() {
    // a1 - a2 = 0.6 > (d12 + d21) / 3 = 0.2
    let g = Game2x2::new(0.9, 0.3, 0.6, 0.0).unwrap();
    let report = classify_2x2(&g);
    assert_eq!(report.kind, EquilibriumKind::DominantStrategy { dominant: 0 });
    assert_eq!(report.pne_states, vec![[0, 0]]);
}

#[test]
fn anti_coordination_when_errors_differ() {
    let g = Game2x2::new(0.6, 0.6, 0.4, 0.4).unwrap();
    let report = classify_2x2(&g);
    assert_eq!(report.kind, EquilibriumKind::AntiCoordination);
    assert_eq!(report.pne_states, vec![[0, 1], [1, 0]]);
}

#[test]
fn inconsistent_games_are_rejected() {
    assert!(Game2x2::new(0.5, 0.5, 0.6, 0.1).is_err());
    assert!(Game2x2::new(0.7, 0.5, 0.3, 0.3).is_err());
    assert!(Game2x2::new(1.2, 0.5, 0.0, 0.0).is_err());
}

#[test]
fn empty_menu_has_no_best_response() {
    let data = Dataset::from_scalars(vec![0.0], vec![1]).unwrap();
    let others = CorrectnessMatrix::new(vec![vec![true]]).unwrap();
    assert!(best_response_finite(&[], &others, &data).is_err());
}
