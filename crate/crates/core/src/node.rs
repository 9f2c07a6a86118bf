//! Storage for the capacity-`K` implicit binary tree.
//!
//! Node `i` has children `2i+1` and `2i+2` (when below `K`) and parent
//! `(i-1)/2`. That mapping is arithmetic, so it cannot be corrupted; every
//! stored field of a [`NodeRecord`] can be.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a slot in the tree. `Option<NodeId>::None` plays the role of the
/// "no such node" marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    #[inline]
    pub fn is_root(self) -> bool {
        self.0 == 0
    }

    /// Distance from the root; the root has depth 0.
    #[inline]
    pub fn depth(self) -> u32 {
        (self.0 + 1).ilog2()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Contents of a slot: a heap item, or `Absent`.
///
/// The derived ordering puts `Absent` above every item, which is exactly the
/// comparison the heap routines need.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemValue<T> {
    Item(T),
    Absent,
}

impl<T> ItemValue<T> {
    #[inline]
    pub fn is_absent(&self) -> bool {
        matches!(self, ItemValue::Absent)
    }

    #[inline]
    pub fn item(&self) -> Option<&T> {
        match self {
            ItemValue::Item(v) => Some(v),
            ItemValue::Absent => None,
        }
    }
}

impl<T> From<Option<T>> for ItemValue<T> {
    fn from(v: Option<T>) -> Self {
        match v {
            Some(v) => ItemValue::Item(v),
            None => ItemValue::Absent,
        }
    }
}

impl<T> From<ItemValue<T>> for Option<T> {
    fn from(v: ItemValue<T>) -> Self {
        match v {
            ItemValue::Item(v) => Some(v),
            ItemValue::Absent => None,
        }
    }
}

/// Steering bit used by `verify` to rotate through root-to-leaf paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Toggle {
    #[default]
    Left,
    Right,
}

impl Toggle {
    /// Any raw integer is a legal toggle: only the low bit is kept.
    pub fn from_raw(raw: i64) -> Toggle {
        if raw & 1 == 0 {
            Toggle::Left
        } else {
            Toggle::Right
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Toggle::Left => "L",
            Toggle::Right => "R",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord<T> {
    pub val: ItemValue<T>,
    /// Height of the subtree below this node; a leaf has height 0.
    pub height: i64,
    /// Distance to the nearest descendant with a free child position, or
    /// anything `>= K` when there is none.
    pub nextslot: i64,
    pub toggle: Toggle,
}

impl<T> NodeRecord<T> {
    pub fn empty() -> Self {
        NodeRecord {
            val: ItemValue::Absent,
            height: 0,
            nextslot: 0,
            toggle: Toggle::Left,
        }
    }
}

/// The whole tree: `K` node records in array order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeapState<T> {
    nodes: Vec<NodeRecord<T>>,
}

impl<T> HeapState<T> {
    /// An empty tree of capacity `capacity`. Leaves of the array get
    /// `nextslot = K`, everything else `0`, so the empty tree is legitimate.
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity(0));
        }
        let k = capacity as i64;
        let nodes = (0..capacity)
            .map(|i| {
                let mut rec = NodeRecord::empty();
                if 2 * i + 1 >= capacity {
                    rec.nextslot = k;
                }
                rec
            })
            .collect();
        Ok(HeapState { nodes })
    }

    /// Builds a state from raw records; the capacity is `nodes.len()`.
    pub fn from_nodes(nodes: Vec<NodeRecord<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidCapacity(0));
        }
        Ok(HeapState { nodes })
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    /// `K` as a signed field value, for comparisons against `nextslot`.
    #[inline]
    pub fn capacity_i64(&self) -> i64 {
        self.nodes.len() as i64
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn node_id(&self, index: usize) -> Result<NodeId> {
        if index < self.capacity() {
            Ok(NodeId(index))
        } else {
            Err(Error::InvalidNode {
                node: index,
                capacity: self.capacity(),
            })
        }
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator {
        (0..self.capacity()).map(NodeId)
    }

    #[inline]
    pub fn node(&self, x: NodeId) -> &NodeRecord<T> {
        &self.nodes[x.0]
    }

    #[inline]
    pub fn node_mut(&mut self, x: NodeId) -> &mut NodeRecord<T> {
        &mut self.nodes[x.0]
    }

    pub fn nodes(&self) -> &[NodeRecord<T>] {
        &self.nodes
    }

    #[inline]
    pub fn val(&self, x: NodeId) -> &ItemValue<T> {
        &self.nodes[x.0].val
    }

    #[inline]
    pub fn child_of(&self, x: NodeId, side: Side) -> Option<NodeId> {
        let c = match side {
            Side::Left => 2 * x.0 + 1,
            Side::Right => 2 * x.0 + 2,
        };
        (c < self.capacity()).then_some(NodeId(c))
    }

    #[inline]
    pub fn left(&self, x: NodeId) -> Option<NodeId> {
        self.child_of(x, Side::Left)
    }

    #[inline]
    pub fn right(&self, x: NodeId) -> Option<NodeId> {
        self.child_of(x, Side::Right)
    }

    /// Children of `x` in the array tree, left first.
    #[inline]
    pub fn children(&self, x: NodeId) -> [Option<NodeId>; 2] {
        [self.left(x), self.right(x)]
    }

    #[inline]
    pub fn has_children(&self, x: NodeId) -> bool {
        self.left(x).is_some()
    }

    #[inline]
    pub fn parent_of(&self, x: NodeId) -> Option<NodeId> {
        (x.0 > 0).then(|| NodeId((x.0 - 1) / 2))
    }

    pub fn swap_vals(&mut self, a: NodeId, b: NodeId) {
        let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        if lo == hi {
            return;
        }
        let (head, tail) = self.nodes.split_at_mut(hi);
        std::mem::swap(&mut head[lo].val, &mut tail[0].val);
    }
}

impl<T: Ord> HeapState<T> {
    /// Truncation on encounter: every child of `x` whose value is below
    /// `x`'s becomes `Absent`. Returns the number of children cleared.
    ///
    /// The caller treats `x` as an active-tree member; a cleared child was
    /// never in the active tree, so the active tree is unchanged.
    pub fn encounter_check(&mut self, x: NodeId) -> usize {
        let mut truncated = 0;
        for c in self.children(x).into_iter().flatten() {
            if self.nodes[c.0].val < self.nodes[x.0].val {
                self.nodes[c.0].val = ItemValue::Absent;
                truncated += 1;
            }
        }
        truncated
    }
}
