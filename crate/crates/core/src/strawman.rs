//! Two reference heaps for the history checkers.
//!
//! [`AlwaysFail`] answers every call with a failure. [`ResetHeap`] is a
//! conventional array heap that wipes itself when it notices damage.

use crate::analysis::BalanceParams;
use crate::history::HeapImpl;
use crate::node::HeapState;
use crate::ops::{OpResponse, Outcome};

#[derive(Clone, Debug)]
pub struct AlwaysFail {
    capacity: usize,
}

impl AlwaysFail {
    pub fn new(capacity: usize) -> Self {
        AlwaysFail { capacity }
    }
}

impl HeapImpl for AlwaysFail {
    fn capacity(&self) -> usize {
        self.capacity
    }

    fn insert(&mut self, _p: i64) -> OpResponse<i64> {
        OpResponse {
            outcome: Outcome::HeapFull,
            steps: 1,
        }
    }

    fn delete_min(&mut self) -> OpResponse<i64> {
        OpResponse {
            outcome: Outcome::HeapEmpty,
            steps: 1,
        }
    }

    fn legitimate_content(&self, _params: &BalanceParams) -> Option<Vec<i64>> {
        Some(Vec::new())
    }
}

/// Slots checked by the background sweep on every operation.
const SWEEP: usize = 2;

/// Array heap with a corruptible `len` and sweep cursor.
///
/// Each operation checks `len`, a sweep window of [`SWEEP`] slots and every
/// slot it reads; any inconsistency resets the heap to empty.
#[derive(Clone, Debug)]
pub struct ResetHeap {
    slots: Vec<Option<i64>>,
    len: i64,
    cursor: i64,
    resets: usize,
    steps: u64,
}

impl ResetHeap {
    pub fn new(capacity: usize) -> Self {
        Self::from_raw(vec![None; capacity], 0, 0)
    }

    pub fn from_raw(slots: Vec<Option<i64>>, len: i64, cursor: i64) -> Self {
        ResetHeap {
            slots,
            len,
            cursor,
            resets: 0,
            steps: 0,
        }
    }

    /// Reuses a (possibly corrupted) node array: the values become slots,
    /// the root's `nextslot` the length and its `height` the cursor.
    pub fn from_state(state: &HeapState<i64>) -> Self {
        let root = state.node(state.root());
        let slots = state.nodes().iter().map(|n| n.val.into()).collect();
        Self::from_raw(slots, root.nextslot, root.height)
    }

    pub fn resets(&self) -> usize {
        self.resets
    }

    fn k(&self) -> usize {
        self.slots.len()
    }

    /// Occupancy matches `len` and the slot is ordered under its parent.
    fn consistent_at(&mut self, i: usize) -> bool {
        self.steps += 1;
        let occupied = (i as i64) < self.len;
        if self.slots[i].is_some() != occupied {
            return false;
        }
        i == 0 || !occupied || self.slots[(i - 1) / 2] <= self.slots[i]
    }

    fn reset(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = None);
        self.len = 0;
        self.resets += 1;
    }

    fn precheck(&mut self) {
        let k = self.k();
        let mut ok = (0..=k as i64).contains(&self.len);
        for _ in 0..SWEEP {
            if !ok {
                break;
            }
            let i = self.cursor.rem_euclid(k as i64) as usize;
            self.cursor = (i as i64 + 1) % k as i64;
            ok = self.consistent_at(i);
        }
        if !ok {
            self.reset();
        }
    }

    fn respond(&mut self, outcome: Outcome<i64>) -> OpResponse<i64> {
        OpResponse {
            outcome,
            steps: std::mem::take(&mut self.steps),
        }
    }
}

impl HeapImpl for ResetHeap {
    fn capacity(&self) -> usize {
        self.k()
    }

    fn insert(&mut self, p: i64) -> OpResponse<i64> {
        self.precheck();
        if self.len as usize == self.k() {
            return self.respond(Outcome::HeapFull);
        }
        let mut i = self.len as usize;
        let mut a = i;
        while a > 0 {
            a = (a - 1) / 2;
            if !self.consistent_at(a) {
                self.reset();
                i = 0;
                break;
            }
        }
        self.slots[i] = Some(p);
        self.len += 1;
        while i > 0 && self.slots[(i - 1) / 2] > self.slots[i] {
            self.steps += 1;
            self.slots.swap(i, (i - 1) / 2);
            i = (i - 1) / 2;
        }
        self.respond(Outcome::Ack)
    }

    fn delete_min(&mut self) -> OpResponse<i64> {
        self.precheck();
        if self.len == 0 {
            return self.respond(Outcome::HeapEmpty);
        }
        let last = self.len as usize - 1;
        if !self.consistent_at(0) || !self.consistent_at(last) {
            self.reset();
            return self.respond(Outcome::HeapEmpty);
        }
        let q = self.slots[0].expect("checked occupied");
        self.slots.swap(0, last);
        self.slots[last] = None;
        self.len -= 1;
        let mut i = 0;
        loop {
            let mut best = i;
            for c in [2 * i + 1, 2 * i + 2] {
                if c >= self.k() {
                    continue;
                }
                let occupied = (c as i64) < self.len;
                self.steps += 1;
                if self.slots[c].is_some() != occupied {
                    self.reset();
                    return self.respond(Outcome::HeapEmpty);
                }
                if occupied && self.slots[c] < self.slots[best] {
                    best = c;
                }
            }
            if best == i {
                break;
            }
            self.slots.swap(i, best);
            i = best;
        }
        self.respond(Outcome::Item(q))
    }

    fn legitimate_content(&self, _params: &BalanceParams) -> Option<Vec<i64>> {
        if !(0..=self.k() as i64).contains(&self.len) {
            return None;
        }
        for i in 0..self.k() {
            let occupied = (i as i64) < self.len;
            if self.slots[i].is_some() != occupied
                || (i > 0 && occupied && self.slots[(i - 1) / 2] > self.slots[i])
            {
                return None;
            }
        }
        let mut items: Vec<i64> = self.slots.iter().flatten().copied().collect();
        items.sort();
        Some(items)
    }
}
