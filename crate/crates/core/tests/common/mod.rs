//! Helpers shared by the integration tests, including a brute-force
//! analyzer written without reference to the library's bottom-up pass.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabheap::fault::{generate_with, GenMode};
use stabheap::{HeapState, ItemValue, NodeId};

/// `[5,3,8,-,-,9,2]` with zeroed fields and left toggles.
pub fn worked_state() -> HeapState<i64> {
    state_from_vals(&[Some(5), Some(3), Some(8), None, None, Some(9), Some(2)])
}

pub fn state_from_vals(vals: &[Option<i64>]) -> HeapState<i64> {
    let mut s = HeapState::new(vals.len()).unwrap();
    for (i, v) in vals.iter().enumerate() {
        let rec = s.node_mut(NodeId(i));
        rec.val = (*v).into();
        rec.height = 0;
        rec.nextslot = 0;
    }
    s
}

/// A random state from a mix of generator modes, so that legitimate and
/// nearly legitimate states show up as well as arbitrary ones.
pub fn mixed_state(rng: &mut ChaCha8Rng, capacity: usize) -> HeapState<i64> {
    let mode = match rng.gen_range(0..4) {
        0 | 1 => GenMode::Arbitrary,
        2 => GenMode::Legitimate {
            items: rng.gen_range(0..=capacity),
        },
        _ => GenMode::CorruptLegitimate {
            items: rng.gen_range(0..=capacity),
            faults: rng.gen_range(1..=3),
        },
    };
    generate_with(rng, capacity, mode).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force ground truth for one state.
#[derive(Debug, PartialEq)]
pub struct Brute {
    pub t: Vec<bool>,
    pub s: Vec<bool>,
    pub bag: Vec<i64>,
    pub legit_i: bool,
    pub legit_ii: bool,
    pub legit_iii: bool,
    pub legit_iv: bool,
    pub gap: usize,
}

fn parent(i: usize) -> Option<usize> {
    (i > 0).then(|| (i - 1) / 2)
}

fn depth(mut i: usize) -> usize {
    let mut d = 0;
    while let Some(p) = parent(i) {
        i = p;
        d += 1;
    }
    d
}

/// Root-to-`i` path, root first.
fn path(i: usize) -> Vec<usize> {
    let mut p = vec![i];
    let mut cur = i;
    while let Some(up) = parent(cur) {
        p.push(up);
        cur = up;
    }
    p.reverse();
    p
}

/// Whether `y` lies in the subtree rooted at `x` (including `x`).
fn descends(y: usize, x: usize) -> bool {
    path(y).contains(&x)
}

fn floor_lg(t: usize) -> usize {
    let mut h = 0;
    while 1usize << (h + 1) <= t {
        h += 1;
    }
    h
}

pub fn brute(state: &HeapState<i64>) -> Brute {
    let k = state.capacity();
    let val = |i: usize| *state.val(NodeId(i));
    let t: Vec<bool> = (0..k)
        .map(|i| path(i).iter().all(|&p| val(p) != ItemValue::Absent))
        .collect();
    let s: Vec<bool> = (0..k)
        .map(|i| t[i] && path(i).windows(2).all(|w| val(w[0]) <= val(w[1])))
        .collect();
    let mut bag: Vec<i64> = (0..k)
        .filter(|&i| s[i])
        .map(|i| match val(i) {
            ItemValue::Item(v) => v,
            ItemValue::Absent => unreachable!(),
        })
        .collect();
    bag.sort();

    let members: Vec<usize> = (0..k).filter(|&i| t[i]).collect();
    let legit_i = members
        .iter()
        .all(|&i| parent(i).is_none_or(|p| val(p) <= val(i)));

    let legit_ii = members.len() <= 1
        || members.iter().map(|&i| depth(i)).max().unwrap() <= floor_lg(members.len());

    let mut legit_iii = true;
    let mut legit_iv = true;
    for &x in &members {
        let below: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&y| descends(y, x))
            .collect();
        let h = below.iter().map(|&y| depth(y) - depth(x)).max().unwrap();
        if state.node(NodeId(x)).height != h as i64 {
            legit_iii = false;
        }
        // Nearest member below x that has an array child outside T_A.
        let slot = below
            .iter()
            .filter(|&&y| [2 * y + 1, 2 * y + 2].iter().any(|&c| c < k && !t[c]))
            .map(|&y| depth(y) - depth(x))
            .min();
        let stored = state.node(NodeId(x)).nextslot;
        let ok = match slot {
            Some(d) => stored == d as i64,
            None => stored >= k as i64,
        };
        if !ok {
            legit_iv = false;
        }
    }

    let m = s.iter().filter(|&&b| b).count();
    let gap = if m == 0 {
        0
    } else {
        (0..k).filter(|&i| s[i] && depth(i) > floor_lg(m)).count()
    };

    Brute {
        t,
        s,
        bag,
        legit_i,
        legit_ii,
        legit_iii,
        legit_iv,
        gap,
    }
}

/// Compares the library analyzer to [`brute`]; returns a description of
/// the first disagreement.
pub fn analyzer_disagreement(state: &HeapState<i64>) -> Option<String> {
    let r = stabheap::check_legitimacy(state, &stabheap::BalanceParams::default());
    let b = brute(state);
    let k = state.capacity();
    let t: Vec<bool> = (0..k).map(|i| r.t_members.contains(NodeId(i))).collect();
    let s: Vec<bool> = (0..k).map(|i| r.s_members.contains(NodeId(i))).collect();
    let got = (
        t,
        s,
        r.bag.clone(),
        r.legit_i,
        r.legit_ii,
        r.legit_iii,
        r.legit_iv,
        r.gap,
    );
    let want = (
        b.t.clone(),
        b.s.clone(),
        b.bag.clone(),
        b.legit_i,
        b.legit_ii,
        b.legit_iii,
        b.legit_iv,
        b.gap,
    );
    if got != want {
        return Some(format!("analyzer {got:?}\nbrute    {want:?}"));
    }
    let all = b.legit_i && b.legit_ii && b.legit_iii && b.legit_iv;
    (r.legitimate != all).then(|| format!("legitimate {} vs {}", r.legitimate, all))
}
