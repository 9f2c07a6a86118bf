mod common;

use common::worked_state;
use stabheap::experiments::{convergence_trial, ExperimentConfig};
use stabheap::fault::{generate, GenMode, StateGenSpec};
use stabheap::history::{check_stabilization_with, record, Invocation, StepBound};
use stabheap::snapshot::restore;
use stabheap::{active_tree, check_legitimacy, BalanceParams, NodeId, Outcome, StabHeap, Toggle};

const P: BalanceParams = BalanceParams { a: 0, b: 1.0 };

#[test]
fn worked_state_is_repaired_by_two_scans() {
    let mut heap = StabHeap::from_state(worked_state());
    assert_eq!(active_tree(heap.state()).len(), 3);
    heap.verify_root();
    heap.verify_root();
    let r = check_legitimacy(heap.state(), &P);
    assert_eq!(r.t_members, r.s_members);
    assert!(r.scan_conditions());
    assert_eq!(r.bag, vec![5, 8, 9]);
}

#[test]
fn worked_state_insert_adds_exactly_the_item() {
    let mut heap = StabHeap::from_state(worked_state());
    assert_eq!(heap.insert(1).outcome, Outcome::Ack);
    assert_eq!(check_legitimacy(heap.state(), &P).bag, vec![1, 5, 8, 9]);
}

#[test]
fn worked_state_delete_returns_active_minimum() {
    let mut heap = StabHeap::from_state(worked_state());
    assert_eq!(heap.delete_min().outcome, Outcome::Item(5));
    assert_eq!(check_legitimacy(heap.state(), &P).bag, vec![8, 9]);
}

#[test]
fn hand_written_snapshot_restores_the_worked_state() {
    let doc = r#"{"K": 7, "nodes": [
        {"val": 5, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": 3, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": 8, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": null, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": null, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": 9, "height": 0, "nextslot": 0, "toggle": "L"},
        {"val": 2, "height": 0, "nextslot": 0, "toggle": "L"}
    ]}"#;
    let state = restore(doc).unwrap();
    assert_eq!(state, worked_state());
    let r = check_legitimacy(&state, &P);
    assert_eq!(r.bag, vec![5, 8, 9]);
    assert!(!r.legit_i);
    assert_eq!(r.gap, 1);
}

#[test]
fn left_fringe_of_a_perfect_tree_points_down_the_left_edge() {
    let mut heap = StabHeap::new(7).unwrap();
    for p in [1, 2, 3, 4, 5, 6, 7] {
        heap.insert(p);
    }
    for i in 0..7 {
        heap.state_mut().node_mut(NodeId(i)).toggle = Toggle::Right;
    }
    heap.left_fringe(Some(NodeId(0)));
    assert_eq!(heap.state().node(NodeId(0)).toggle, Toggle::Left);
    assert_eq!(heap.state().node(NodeId(1)).toggle, Toggle::Left);
    heap.set_tracing(true);
    heap.verify_root();
    assert_eq!(heap.probe().verify_leaves(), &[NodeId(3)]);
}

#[test]
fn legitimate_starts_need_no_convergence() {
    let cfg = ExperimentConfig {
        capacity: 63,
        ..ExperimentConfig::default()
    };
    let bound = StepBound { c0: 1000, c1: 1000 };
    for seed in 0..50 {
        let state = generate(&StateGenSpec {
            seed,
            capacity: 63,
            mode: GenMode::Legitimate {
                items: seed as usize,
            },
        })
        .unwrap();
        let mut rng = common::rng(seed);
        let row = convergence_trial(&cfg, &mut rng, state.clone(), 100);
        assert_eq!(row.ops_to_legit, 0);
        assert_eq!(row.gap_violations, 0);

        let invs: Vec<Invocation> = (0..50)
            .map(|i| {
                if i % 3 == 0 {
                    Invocation::DeleteMin
                } else {
                    Invocation::Insert(i)
                }
            })
            .collect();
        let mut heap = StabHeap::from_state(state);
        let rec = record(&mut heap, &invs, &P);
        let v = check_stabilization_with(&rec.history, &rec.witnesses, 63, &bound).unwrap();
        assert_eq!(v.convergence_period, Some(0));
        assert!(v.verdict.is_clean());
    }
}

#[test]
fn root_loss_empties_the_heap() {
    let mut heap = StabHeap::new(15).unwrap();
    for p in 0..15 {
        heap.insert(p);
    }
    heap.state_mut().node_mut(NodeId(0)).val = stabheap::ItemValue::Absent;
    assert_eq!(heap.delete_min().outcome, Outcome::HeapEmpty);
    assert_eq!(heap.insert(4).outcome, Outcome::Ack);
    assert_eq!(check_legitimacy(heap.state(), &P).bag, vec![4]);
}

/// Nodes 0..=4 plus three depth-3 children of nodes 3 and 4: eight items,
/// legitimate, zero gap. Balance moves one deep leaf up to node 5, then the
/// delete drops the size to 7, whose height bound is 2, while a depth-3 node
/// remains. The gap rises from 0 to 1 and the state is no longer balanced.
#[test]
fn delete_below_a_power_of_two_can_raise_the_gap() {
    let mut vals = vec![None; 15];
    for (i, v) in [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (7, 6),
        (8, 7),
        (9, 8),
    ] {
        vals[i] = Some(v);
    }
    let mut heap = StabHeap::from_state(common::state_from_vals(&vals));
    for _ in 0..8 {
        heap.verify_root();
    }
    let before = check_legitimacy(heap.state(), &P);
    assert!(before.legitimate);
    assert_eq!((before.m, before.gap), (8, 0));

    assert_eq!(heap.delete_min().outcome, Outcome::Item(1));
    let after = check_legitimacy(heap.state(), &P);
    assert!(after.scan_conditions());
    assert_eq!((after.m, after.gap), (7, 1));
    assert!(!after.legit_ii);

    // The next operation's balance step repairs it.
    heap.insert(100);
    let next = check_legitimacy(heap.state(), &P);
    assert!(next.legitimate, "{next:?}");
}
