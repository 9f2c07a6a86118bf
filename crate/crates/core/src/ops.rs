//! Heap operations that tolerate arbitrary starting states.
//!
//! Every public operation starts with `verify(root); balance()` and then does
//! the conventional insert or delete-min. All traversing routines except the
//! two heapify walks truncate heap-order violations below each node they
//! visit, so "child" and "leaf" always mean child and leaf of the active
//! tree.
//!
//! Each routine counts node visits in a [`Probe`]: one visit for the node a
//! routine step is centred on, plus one for every other node whose fields it
//! reads or writes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::node::{HeapState, ItemValue, NodeId, Toggle};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<T> {
    Ack,
    HeapFull,
    Item(T),
    HeapEmpty,
}

impl<T> Outcome<T> {
    pub fn succeeded(&self) -> bool {
        matches!(self, Outcome::Ack | Outcome::Item(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpResponse<T> {
    pub outcome: Outcome<T>,
    /// Node visits for the whole operation.
    pub steps: u64,
}

/// How `deep_leaf` and `find_slot` resolve ties between two children.
#[derive(Clone, Debug, Default)]
pub enum TieBreak {
    #[default]
    Left,
    Seeded(Box<ChaCha8Rng>),
}

impl TieBreak {
    pub fn seeded(seed: u64) -> Self {
        TieBreak::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    fn pick(&mut self, left: NodeId, right: NodeId) -> NodeId {
        match self {
            TieBreak::Left => left,
            TieBreak::Seeded(rng) => {
                if rng.gen::<bool>() {
                    left
                } else {
                    right
                }
            }
        }
    }
}

/// Visit counter plus optional traces.
#[derive(Clone, Debug, Default)]
pub struct Probe {
    steps: u64,
    tracing: bool,
    trace: Vec<NodeId>,
    verify_leaves: Vec<NodeId>,
}

impl Probe {
    #[inline]
    fn visit(&mut self, x: NodeId) {
        self.steps += 1;
        if self.tracing {
            self.trace.push(x);
        }
    }

    /// Visits counted since the start of the current (or last) operation.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Every visited node in order; empty unless tracing is enabled.
    pub fn trace(&self) -> &[NodeId] {
        &self.trace
    }

    /// The active-tree leaf reached by each `verify(root)` call; recorded
    /// only while tracing is enabled.
    pub fn verify_leaves(&self) -> &[NodeId] {
        &self.verify_leaves
    }
}

/// A stabilizing heap over the storage in [`HeapState`].
#[derive(Clone, Debug)]
pub struct StabHeap<T> {
    state: HeapState<T>,
    tie: TieBreak,
    probe: Probe,
}

impl<T: Ord + Clone> StabHeap<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        Ok(Self::from_state(HeapState::new(capacity)?))
    }

    /// Wraps an arbitrary, possibly corrupted, state.
    pub fn from_state(state: HeapState<T>) -> Self {
        StabHeap {
            state,
            tie: TieBreak::Left,
            probe: Probe::default(),
        }
    }

    pub fn with_tie_break(mut self, tie: TieBreak) -> Self {
        self.tie = tie;
        self
    }

    pub fn state(&self) -> &HeapState<T> {
        &self.state
    }

    /// Direct access for fault injection between operations.
    pub fn state_mut(&mut self) -> &mut HeapState<T> {
        &mut self.state
    }

    pub fn into_state(self) -> HeapState<T> {
        self.state
    }

    pub fn capacity(&self) -> usize {
        self.state.capacity()
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.probe.tracing = on;
    }

    /// Zeroes the visit counter and clears traces.
    pub fn reset_probe(&mut self) {
        self.probe.steps = 0;
        self.probe.trace.clear();
        self.probe.verify_leaves.clear();
    }

    pub fn insert(&mut self, p: T) -> OpResponse<T> {
        self.reset_probe();
        self.verify_root();
        self.balance();
        let outcome = match self.find_slot(self.state.root()) {
            None => Outcome::HeapFull,
            Some(y) => {
                self.place(y, p);
                Outcome::Ack
            }
        };
        OpResponse {
            outcome,
            steps: self.probe.steps,
        }
    }

    pub fn delete_min(&mut self) -> OpResponse<T> {
        self.reset_probe();
        self.verify_root();
        self.balance();
        let root = self.state.root();
        let outcome = match self.deep_leaf(root) {
            None => Outcome::HeapEmpty,
            Some(y) => {
                self.probe.visit(root);
                let q = match std::mem::replace(
                    &mut self.state.node_mut(root).val,
                    ItemValue::Absent,
                ) {
                    ItemValue::Item(q) => q,
                    ItemValue::Absent => unreachable!("deep_leaf returned a leaf of an empty tree"),
                };
                if y == root {
                    self.recompute(root);
                } else {
                    self.probe.visit(y);
                    let moved =
                        std::mem::replace(&mut self.state.node_mut(y).val, ItemValue::Absent);
                    self.state.node_mut(root).val = moved;
                    self.fix_path(y);
                    self.down_heapify(root);
                }
                Outcome::Item(q)
            }
        };
        OpResponse {
            outcome,
            steps: self.probe.steps,
        }
    }

    /// Truncation on encounter at `x`, counting the children it reads.
    pub fn encounter_check(&mut self, x: NodeId) -> usize {
        for c in self.state.children(x).into_iter().flatten() {
            self.probe.visit(c);
        }
        self.state.encounter_check(x)
    }

    /// Children of `x` holding an item. After `encounter_check(x)` on an
    /// active node these are exactly its active-tree children.
    fn live_children(&self, x: NodeId) -> [Option<NodeId>; 2] {
        self.state
            .children(x)
            .map(|c| c.filter(|&c| !self.state.val(c).is_absent()))
    }

    /// Descends from `x` toward the child with the larger `height` field and
    /// returns the active-tree leaf it ends at, or `None` when `x` is empty.
    pub fn deep_leaf(&mut self, x: NodeId) -> Option<NodeId> {
        if self.state.val(x).is_absent() {
            self.probe.visit(x);
            return None;
        }
        let mut x = x;
        loop {
            self.probe.visit(x);
            self.encounter_check(x);
            x = match self.live_children(x) {
                [None, None] => return Some(x),
                [Some(c), None] | [None, Some(c)] => c,
                [Some(l), Some(r)] => {
                    let (hl, hr) = (self.state.node(l).height, self.state.node(r).height);
                    if hl > hr {
                        l
                    } else if hr > hl {
                        r
                    } else {
                        self.tie.pick(l, r)
                    }
                }
            };
        }
    }

    /// Finds an empty position whose parent is an active node, steering by
    /// `nextslot`. Returns `x` itself when `x` is empty and `None` when the
    /// walk reaches a node with no array children.
    pub fn find_slot(&mut self, x: NodeId) -> Option<NodeId> {
        self.probe.visit(x);
        if self.state.val(x).is_absent() {
            return Some(x);
        }
        let mut x = x;
        loop {
            self.encounter_check(x);
            let [l, r] = self.state.children(x);
            let free = |c: Option<NodeId>| c.filter(|&c| self.state.val(c).is_absent());
            match (free(l), free(r)) {
                (Some(a), Some(b)) => return Some(self.tie.pick(a, b)),
                (Some(a), None) | (None, Some(a)) => return Some(a),
                (None, None) => {}
            }
            x = match (l, r) {
                (None, _) => return None,
                (Some(c), None) => c,
                (Some(l), Some(r)) => {
                    let (nl, nr) = (self.state.node(l).nextslot, self.state.node(r).nextslot);
                    if nl < nr {
                        l
                    } else if nr < nl {
                        r
                    } else {
                        self.tie.pick(l, r)
                    }
                }
            };
            self.probe.visit(x);
        }
    }

    /// Walks `y` to the root swapping values out of order and recomputing
    /// `height` and `nextslot` at every node on the way. No truncation.
    pub fn up_heapify(&mut self, y: NodeId) {
        self.probe.visit(y);
        self.recompute(y);
        let mut c = y;
        while let Some(p) = self.state.parent_of(c) {
            self.probe.visit(p);
            if self.state.val(p) > self.state.val(c) {
                self.state.swap_vals(p, c);
            }
            self.recompute(p);
            c = p;
        }
    }

    /// Sifts the value at `x` down by swapping with its smallest child.
    ///
    /// Below the first level, a child only competes if its value is at least
    /// the value just moved up, i.e. if it was ordered under the node's old
    /// value. Children that were already out of order stay out of the active
    /// tree instead of being pulled into it. Values move; `height` and
    /// `nextslot` do not.
    pub fn down_heapify(&mut self, x: NodeId) {
        let mut x = x;
        let mut floor: Option<T> = None;
        loop {
            self.probe.visit(x);
            let mut best: Option<NodeId> = None;
            for c in self.state.children(x).into_iter().flatten() {
                self.probe.visit(c);
                let cv = match self.state.val(c) {
                    ItemValue::Item(v) => v,
                    ItemValue::Absent => continue,
                };
                if floor.as_ref().is_some_and(|f| cv < f) {
                    continue;
                }
                if best.is_none_or(|b| self.state.val(c) < self.state.val(b)) {
                    best = Some(c);
                }
            }
            match best {
                Some(c) if self.state.val(c) < self.state.val(x) => {
                    floor = self.state.val(c).item().cloned();
                    self.state.swap_vals(x, c);
                    x = c;
                }
                _ => return,
            }
        }
    }

    /// `verify(root)`; does nothing when the root is empty.
    pub fn verify_root(&mut self) {
        let root = self.state.root();
        if self.state.val(root).is_absent() {
            self.probe.visit(root);
            return;
        }
        self.verify(root);
    }

    fn verify(&mut self, x: NodeId) {
        self.probe.visit(x);
        self.encounter_check(x);
        let [l, r] = self.live_children(x);
        if l.is_none() {
            self.state.node_mut(x).toggle = Toggle::Right;
        }
        if r.is_none() {
            self.state.node_mut(x).toggle = Toggle::Left;
        }
        match (l, r) {
            (None, None) => {
                if self.probe.tracing {
                    self.probe.verify_leaves.push(x);
                }
                self.next_path(x);
            }
            _ => {
                let next = match self.state.node(x).toggle {
                    Toggle::Right => r,
                    Toggle::Left => l,
                };
                self.verify(next.expect("toggle points at a live child"));
            }
        }
        self.recompute(x);
    }

    /// Sets up the path the next `verify(root)` will follow.
    pub fn next_path(&mut self, x: NodeId) {
        match self.sw_ancestor(x) {
            Some(w) => {
                self.state.node_mut(w).toggle = Toggle::Right;
                let wr = self.state.right(w);
                self.left_fringe(wr);
            }
            None => {
                let root = self.state.root();
                self.left_fringe(Some(root));
            }
        }
    }

    /// Points every toggle on the leftmost active path below `x` along that
    /// path.
    pub fn left_fringe(&mut self, x: Option<NodeId>) {
        let mut cur = x;
        while let Some(x) = cur {
            self.probe.visit(x);
            if self.state.val(x).is_absent() {
                return;
            }
            self.encounter_check(x);
            cur = match self.live_children(x) {
                [None, None] => return,
                [None, r] => {
                    self.state.node_mut(x).toggle = Toggle::Right;
                    r
                }
                [l, _] => {
                    self.state.node_mut(x).toggle = Toggle::Left;
                    l
                }
            };
        }
    }

    /// Nearest proper ancestor of `x` with toggle `L` and two active
    /// children.
    pub fn sw_ancestor(&mut self, x: NodeId) -> Option<NodeId> {
        let mut cur = self.state.parent_of(x);
        while let Some(w) = cur {
            self.probe.visit(w);
            self.encounter_check(w);
            if self.state.node(w).toggle == Toggle::Left
                && matches!(self.live_children(w), [Some(_), Some(_)])
            {
                return Some(w);
            }
            cur = self.state.parent_of(w);
        }
        None
    }

    /// Moves one leaf found by `deep_leaf` to the slot `find_slot` picks,
    /// putting it back where it was when no slot is found.
    pub fn balance(&mut self) {
        let root = self.state.root();
        let Some(y) = self.deep_leaf(root) else {
            return;
        };
        self.probe.visit(y);
        let q = std::mem::replace(&mut self.state.node_mut(y).val, ItemValue::Absent);
        let ItemValue::Item(q) = q else {
            unreachable!("deep_leaf returned an empty node")
        };
        self.fix_path(y);
        match self.find_slot(root) {
            Some(r) => self.place(r, q),
            None => {
                self.probe.visit(y);
                self.state.node_mut(y).val = ItemValue::Item(q);
                self.fix_path(y);
            }
        }
    }

    /// Stores `p` at the empty position `y`, clears `y`'s children and
    /// sifts up.
    fn place(&mut self, y: NodeId, p: T) {
        self.probe.visit(y);
        let k = self.state.capacity_i64();
        let has_children = self.state.has_children(y);
        let rec = self.state.node_mut(y);
        rec.val = ItemValue::Item(p);
        rec.height = 0;
        rec.nextslot = if has_children { 0 } else { k };
        for z in self.state.children(y).into_iter().flatten() {
            self.probe.visit(z);
            self.state.node_mut(z).val = ItemValue::Absent;
        }
        self.up_heapify(y);
    }

    /// Recomputes `height`/`nextslot` from `y` up to the root.
    fn fix_path(&mut self, y: NodeId) {
        let mut cur = Some(y);
        while let Some(x) = cur {
            self.probe.visit(x);
            self.recompute(x);
            cur = self.state.parent_of(x);
        }
    }

    /// Field recompute from the children's stored fields:
    /// `height = 0` with no live child, else `1 + max(child heights)`;
    /// `nextslot = 0` if some array child is empty, `K` with no array
    /// children, else `min(K, 1 + min(child nextslots))`.
    fn recompute(&mut self, x: NodeId) {
        let k = self.state.capacity_i64();
        let mut height: Option<i64> = None;
        let mut nextslot: Option<i64> = None;
        let mut has_free = false;
        for c in self.state.children(x).into_iter().flatten() {
            self.probe.visit(c);
            let rec = self.state.node(c);
            if rec.val.is_absent() {
                has_free = true;
            } else {
                height = Some(height.map_or(rec.height, |h| h.max(rec.height)));
            }
            nextslot = Some(nextslot.map_or(rec.nextslot, |n| n.min(rec.nextslot)));
        }
        let rec = self.state.node_mut(x);
        rec.height = height.map_or(0, |h| h.saturating_add(1));
        rec.nextslot = match nextslot {
            None => k,
            Some(_) if has_free => 0,
            Some(n) => n.saturating_add(1).min(k),
        };
    }
}
