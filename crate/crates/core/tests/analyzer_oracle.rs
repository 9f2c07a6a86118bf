mod common;

use common::{analyzer_disagreement, mixed_state, rng};
use proptest::prelude::*;
use stabheap::fault::{generate, GenMode, StateGenSpec};
use stabheap::{check_legitimacy, gap_value, BalanceParams};

#[test]
fn analyzer_matches_brute_force_on_small_trees() {
    let mut r = rng(8);
    for i in 0..20_000 {
        let k = 1 + i % 15;
        let state = mixed_state(&mut r, k);
        if let Some(d) = analyzer_disagreement(&state) {
            panic!(
                "state {i} (K={k}): {d}\n{}",
                stabheap::snapshot::snapshot(&state)
            );
        }
    }
}

#[test]
fn every_three_node_value_pattern_matches() {
    // Every value assignment over {Absent, 0, 1, 2} at K=3, zeroed fields.
    let vals = [None, Some(0), Some(1), Some(2)];
    for a in vals {
        for b in vals {
            for c in vals {
                let s = common::state_from_vals(&[a, b, c]);
                assert_eq!(analyzer_disagreement(&s), None, "{a:?} {b:?} {c:?}");
            }
        }
    }
}

fn spec(seed: u64, capacity: usize, mode: GenMode) -> StateGenSpec {
    StateGenSpec {
        seed,
        capacity,
        mode,
    }
}

proptest! {
    #[test]
    fn analyzer_is_pure(seed in any::<u64>(), k in 1usize..40) {
        let state = generate(&spec(seed, k, GenMode::Arbitrary)).unwrap();
        let before = state.clone();
        let first = check_legitimacy(&state, &BalanceParams::default());
        let second = check_legitimacy(&state, &BalanceParams::default());
        prop_assert_eq!(&state, &before);
        prop_assert_eq!(first, second);
    }

    #[test]
    fn active_tree_is_inside_truncation_tree(seed in any::<u64>(), k in 1usize..64) {
        let state = generate(&spec(seed, k, GenMode::Arbitrary)).unwrap();
        let r = check_legitimacy(&state, &BalanceParams::default());
        prop_assert!(r.s_members.is_subset(&r.t_members));
        prop_assert_eq!(r.bag.len(), r.m);
        if r.legit_i {
            prop_assert_eq!(&r.s_members, &r.t_members);
        }
    }

    #[test]
    fn zero_gap_with_scan_conditions_implies_balance(
        seed in any::<u64>(),
        k in 1usize..64,
        items in 0usize..64,
        faults in 0usize..3,
    ) {
        let items = items.min(k);
        let state = generate(&spec(seed, k, GenMode::CorruptLegitimate { items, faults })).unwrap();
        let r = check_legitimacy(&state, &BalanceParams::default());
        if r.gap == 0 && r.scan_conditions() {
            prop_assert!(r.legit_ii);
        }
        prop_assert_eq!(r.gap, gap_value(&state, &BalanceParams::default()));
    }

    #[test]
    fn built_heaps_are_legitimate(seed in any::<u64>(), k in 1usize..200, items in 0usize..200) {
        let items = items.min(k);
        let state = generate(&spec(seed, k, GenMode::Legitimate { items })).unwrap();
        let r = check_legitimacy(&state, &BalanceParams::default());
        prop_assert!(r.legitimate);
        prop_assert_eq!(r.m, items);
        prop_assert_eq!(r.gap, 0);
    }
}
