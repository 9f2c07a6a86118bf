//! Read-only views of a [`HeapState`]: the truncation tree, the active
//! tree, the four legitimacy conditions and the `gap` variant function.
//!
//! Everything here is `O(K)` and never mutates the state. Children always
//! have larger indices than their parents, so one forward pass computes
//! top-down properties and one backward pass computes bottom-up ones.

use serde::{Deserialize, Serialize};

use crate::node::{HeapState, ItemValue, NodeId};

/// Membership bitmap over the nodes of one tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeSet {
    bits: Vec<bool>,
    len: usize,
}

impl NodeSet {
    fn from_bits(bits: Vec<bool>) -> Self {
        let len = bits.iter().filter(|&&b| b).count();
        NodeSet { bits, len }
    }

    #[inline]
    pub fn contains(&self, x: NodeId) -> bool {
        self.bits.get(x.0).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| NodeId(i))
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    /// `'1'`/`'0'` per node, in array order.
    pub fn bitmap(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

/// Loose-balance constants: the minimum height of a `t`-node subtree
/// containing the root is taken to be at most `a + b·lg t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceParams {
    pub a: i64,
    pub b: f64,
}

impl Default for BalanceParams {
    /// `h_t = ⌊lg t⌋`, exact for the array layout.
    fn default() -> Self {
        BalanceParams { a: 0, b: 1.0 }
    }
}

impl BalanceParams {
    /// Height bound `h_t` for `t >= 1` nodes.
    pub fn height_bound(&self, t: usize) -> i64 {
        if t == 0 {
            return self.a;
        }
        let lg = t.ilog2() as i64;
        if self.b == 1.0 {
            self.a + lg
        } else {
            self.a + (self.b * (t as f64).log2()).floor() as i64
        }
    }
}

/// `T_A`: nodes reachable from the root through non-empty values.
pub fn truncation_tree<T>(state: &HeapState<T>) -> NodeSet {
    let mut bits = vec![false; state.capacity()];
    for x in state.ids() {
        bits[x.0] = !state.val(x).is_absent() && state.parent_of(x).is_none_or(|p| bits[p.0]);
    }
    NodeSet::from_bits(bits)
}

/// `S_A`: the largest root fragment of `T_A` in heap order.
pub fn active_tree<T: Ord>(state: &HeapState<T>) -> NodeSet {
    let mut bits = vec![false; state.capacity()];
    for x in state.ids() {
        let v = state.val(x);
        bits[x.0] = !v.is_absent()
            && state
                .parent_of(x)
                .is_none_or(|p| bits[p.0] && v >= state.val(p));
    }
    NodeSet::from_bits(bits)
}

/// Number of active nodes deeper than `h_m`, where `m = |S_A|`.
pub fn gap_value<T: Ord>(state: &HeapState<T>, params: &BalanceParams) -> usize {
    gap_of(&active_tree(state), params)
}

fn gap_of(active: &NodeSet, params: &BalanceParams) -> usize {
    if active.is_empty() {
        return 0;
    }
    let bound = params.height_bound(active.len());
    active.iter().filter(|x| x.depth() as i64 > bound).count()
}

/// Height of a member set (depth of its deepest node); `-1` when empty.
pub fn tree_height(set: &NodeSet) -> i64 {
    set.iter().map(|x| x.depth() as i64).max().unwrap_or(-1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisReport<T> {
    pub t_members: NodeSet,
    pub s_members: NodeSet,
    /// Items of the active tree, sorted.
    pub bag: Vec<T>,
    /// Heap property at every node of `T_A`.
    pub legit_i: bool,
    /// Height of `T_A` within `h_{|T_A|}`.
    pub legit_ii: bool,
    /// Stored heights match `T_A`.
    pub legit_iii: bool,
    /// Stored nextslots match `T_A`.
    pub legit_iv: bool,
    pub legitimate: bool,
    pub gap: usize,
    pub m: usize,
}

impl<T> AnalysisReport<T> {
    /// Conditions (i), (iii) and (iv), the part a `verify` scan restores.
    pub fn scan_conditions(&self) -> bool {
        self.legit_i && self.legit_iii && self.legit_iv
    }
}

pub fn check_legitimacy<T: Ord + Clone>(
    state: &HeapState<T>,
    params: &BalanceParams,
) -> AnalysisReport<T> {
    let k = state.capacity_i64();
    let t = truncation_tree(state);
    let s = active_tree(state);

    // Bottom-up ground truth over T_A: subtree height, and distance to the
    // nearest node with fewer T_A children than array children.
    let n = state.capacity();
    let mut height = vec![-1i64; n];
    let mut slot_dist: Vec<Option<i64>> = vec![None; n];
    let mut legit_i = true;
    for x in state.ids().rev() {
        if !t.contains(x) {
            continue;
        }
        let mut h = 0;
        let mut free = false;
        let mut below: Option<i64> = None;
        for c in state.children(x).into_iter().flatten() {
            if t.contains(c) {
                h = h.max(height[c.0] + 1);
                if state.val(c) < state.val(x) {
                    legit_i = false;
                }
                if let Some(d) = slot_dist[c.0] {
                    below = Some(below.map_or(d + 1, |b| b.min(d + 1)));
                }
            } else {
                free = true;
            }
        }
        height[x.0] = h;
        slot_dist[x.0] = if free { Some(0) } else { below };
    }

    let mut legit_iii = true;
    let mut legit_iv = true;
    for x in t.iter() {
        let rec = state.node(x);
        if rec.height != height[x.0] {
            legit_iii = false;
        }
        let ok = match slot_dist[x.0] {
            Some(d) => rec.nextslot == d,
            None => rec.nextslot >= k,
        };
        if !ok {
            legit_iv = false;
        }
    }

    let legit_ii = t.len() <= 1 || tree_height(&t) <= params.height_bound(t.len());

    let mut bag: Vec<T> = s
        .iter()
        .filter_map(|x| match state.val(x) {
            ItemValue::Item(v) => Some(v.clone()),
            ItemValue::Absent => None,
        })
        .collect();
    bag.sort();

    let gap = gap_of(&s, params);
    let m = s.len();
    AnalysisReport {
        t_members: t,
        s_members: s,
        bag,
        legit_i,
        legit_ii,
        legit_iii,
        legit_iv,
        legitimate: legit_i && legit_ii && legit_iii && legit_iv,
        gap,
        m,
    }
}

/// Serializable form of an [`AnalysisReport`] for the CLI.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    #[serde(rename = "K")]
    pub capacity: usize,
    pub t_members: String,
    pub s_members: String,
    pub bag: Vec<i64>,
    pub legit_i: bool,
    pub legit_ii: bool,
    pub legit_iii: bool,
    pub legit_iv: bool,
    pub legitimate: bool,
    pub gap: usize,
    pub m: usize,
}

impl From<&AnalysisReport<i64>> for ReportDoc {
    fn from(r: &AnalysisReport<i64>) -> Self {
        ReportDoc {
            capacity: r.t_members.bits.len(),
            t_members: r.t_members.bitmap(),
            s_members: r.s_members.bitmap(),
            bag: r.bag.clone(),
            legit_i: r.legit_i,
            legit_ii: r.legit_ii,
            legit_iii: r.legit_iii,
            legit_iv: r.legit_iv,
            legitimate: r.legitimate,
            gap: r.gap,
            m: r.m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::StabHeap;

    fn with_vals(vals: &[Option<i64>]) -> HeapState<i64> {
        let mut s = HeapState::new(vals.len()).unwrap();
        for (i, v) in vals.iter().enumerate() {
            s.node_mut(NodeId(i)).val = (*v).into();
        }
        s
    }

    fn ids(set: &NodeSet) -> Vec<usize> {
        set.iter().map(|x| x.0).collect()
    }

    /// vals = [5, 3, 8, -, -, 9, 2]
    fn worked_state() -> HeapState<i64> {
        with_vals(&[Some(5), Some(3), Some(8), None, None, Some(9), Some(2)])
    }

    #[test]
    fn truncation_tree_examples() {
        assert!(truncation_tree(&HeapState::<i64>::new(7).unwrap()).is_empty());
        assert_eq!(ids(&truncation_tree(&worked_state())), vec![0, 1, 2, 5, 6]);
        let cut = with_vals(&[Some(5), None, Some(8), Some(1), Some(1), Some(9), Some(2)]);
        assert_eq!(ids(&truncation_tree(&cut)), vec![0, 2, 5, 6]);
    }

    #[test]
    fn active_tree_of_worked_state() {
        let s = worked_state();
        assert_eq!(ids(&active_tree(&s)), vec![0, 2, 5]);
        let r = check_legitimacy(&s, &BalanceParams::default());
        assert_eq!(r.bag, vec![5, 8, 9]);
        assert_eq!(r.m, 3);
        assert!(!r.legit_i);
        assert!(!r.legitimate);
    }

    #[test]
    fn active_tree_of_empty_root() {
        let s = with_vals(&[None, Some(1), Some(2)]);
        assert!(active_tree(&s).is_empty());
    }

    #[test]
    fn legitimate_heap_has_equal_trees() {
        let mut h = StabHeap::new(15).unwrap();
        for p in [5, 3, 9, 1, 1, 7, 2, 8] {
            h.insert(p);
        }
        let r = check_legitimacy(h.state(), &BalanceParams::default());
        assert!(r.legitimate);
        assert_eq!(r.t_members, r.s_members);
        assert_eq!(r.gap, 0);
    }

    #[test]
    fn corrupted_height_is_detected() {
        let mut h = StabHeap::new(7).unwrap();
        for p in [1, 2, 3] {
            h.insert(p);
        }
        h.state_mut().node_mut(NodeId(1)).height = 99;
        let r = check_legitimacy(h.state(), &BalanceParams::default());
        assert!(!r.legit_iii);
        assert!(r.legit_i && r.legit_ii && r.legit_iv);
    }

    #[test]
    fn nextslot_accepts_anything_at_least_k_when_full() {
        let mut h = StabHeap::new(3).unwrap();
        for p in [1, 2, 3] {
            h.insert(p);
        }
        h.state_mut().node_mut(NodeId(0)).nextslot = i64::MAX;
        assert!(check_legitimacy(h.state(), &BalanceParams::default()).legit_iv);
        h.state_mut().node_mut(NodeId(0)).nextslot = 2;
        assert!(!check_legitimacy(h.state(), &BalanceParams::default()).legit_iv);
    }

    #[test]
    fn gap_examples() {
        let p = BalanceParams::default();
        assert_eq!(gap_value(&worked_state(), &p), 1);

        // Chain 0 -> 1 -> 3 -> 7 at depths 0..3; h_4 = 2.
        let mut vals = vec![None; 15];
        for (i, v) in [(0, 1), (1, 2), (3, 3), (7, 4)] {
            vals[i] = Some(v);
        }
        assert_eq!(gap_value(&with_vals(&vals), &p), 1);

        let mut h = StabHeap::new(15).unwrap();
        for p in 0..7 {
            h.insert(p);
        }
        assert_eq!(gap_value(h.state(), &p), 0);
    }

    #[test]
    fn height_bound_values() {
        let p = BalanceParams::default();
        assert_eq!(p.height_bound(1), 0);
        assert_eq!(p.height_bound(3), 1);
        assert_eq!(p.height_bound(4), 2);
        let loose = BalanceParams { a: 1, b: 2.0 };
        assert_eq!(loose.height_bound(4), 5);
    }

    #[test]
    fn report_doc_bitmaps() {
        let r = check_legitimacy(&worked_state(), &BalanceParams::default());
        let doc = ReportDoc::from(&r);
        assert_eq!(doc.t_members, "1110011");
        assert_eq!(doc.s_members, "1010010");
    }
}
