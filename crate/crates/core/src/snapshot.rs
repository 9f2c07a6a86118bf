//! Text snapshot format for [`HeapState<i64>`].
//!
//! ```text
//! {"K":3,"nodes":[{"val":5,"height":0,"nextslot":0,"toggle":"L"}, ...]}
//! ```
//!
//! `val: null` encodes `Absent`. Every field round-trips exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::{HeapState, ItemValue, NodeRecord, Toggle};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDoc {
    #[serde(rename = "K")]
    pub capacity: usize,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub val: Option<i64>,
    pub height: i64,
    pub nextslot: i64,
    pub toggle: String,
}

impl SnapshotDoc {
    pub fn from_state(state: &HeapState<i64>) -> Self {
        SnapshotDoc {
            capacity: state.capacity(),
            nodes: state
                .nodes()
                .iter()
                .map(|n| NodeDoc {
                    val: n.val.into(),
                    height: n.height,
                    nextslot: n.nextslot,
                    toggle: n.toggle.as_str().to_string(),
                })
                .collect(),
        }
    }

    pub fn to_state(&self) -> Result<HeapState<i64>> {
        if self.capacity == 0 {
            return Err(Error::Snapshot("K must be at least 1".into()));
        }
        if self.nodes.len() != self.capacity {
            return Err(Error::Snapshot(format!(
                "K is {} but {} nodes were given",
                self.capacity,
                self.nodes.len()
            )));
        }
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let toggle = match n.toggle.as_str() {
                    "L" => Toggle::Left,
                    "R" => Toggle::Right,
                    other => {
                        return Err(Error::Snapshot(format!(
                            "node {i}: toggle must be \"L\" or \"R\", got {other:?}"
                        )))
                    }
                };
                Ok(NodeRecord {
                    val: ItemValue::from(n.val),
                    height: n.height,
                    nextslot: n.nextslot,
                    toggle,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HeapState::from_nodes(nodes)
    }
}

pub fn snapshot(state: &HeapState<i64>) -> String {
    serde_json::to_string(&SnapshotDoc::from_state(state)).expect("snapshot serializes")
}

pub fn snapshot_pretty(state: &HeapState<i64>) -> String {
    serde_json::to_string_pretty(&SnapshotDoc::from_state(state)).expect("snapshot serializes")
}

pub fn restore(doc: &str) -> Result<HeapState<i64>> {
    let doc: SnapshotDoc = serde_json::from_str(doc).map_err(|e| Error::Snapshot(e.to_string()))?;
    doc.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::NodeId;

    #[test]
    fn round_trips_extreme_fields() {
        let mut s = HeapState::new(3).unwrap();
        *s.node_mut(NodeId(0)) = NodeRecord {
            val: ItemValue::Item(i64::MIN),
            height: i64::MAX,
            nextslot: -7,
            toggle: Toggle::Right,
        };
        s.node_mut(NodeId(2)).val = ItemValue::Item(i64::MAX);
        let text = snapshot(&s);
        assert_eq!(restore(&text).unwrap(), s);
    }

    #[test]
    fn rejects_zero_capacity() {
        assert!(restore(r#"{"K":0,"nodes":[]}"#).is_err());
    }

    #[test]
    fn rejects_length_mismatch() {
        let doc = r#"{"K":2,"nodes":[{"val":null,"height":0,"nextslot":0,"toggle":"L"}]}"#;
        assert!(restore(doc).is_err());
    }

    #[test]
    fn rejects_unknown_toggle() {
        let doc = r#"{"K":1,"nodes":[{"val":null,"height":0,"nextslot":1,"toggle":"X"}]}"#;
        let err = restore(doc).unwrap_err();
        assert!(err.to_string().contains("toggle"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(restore("not a snapshot").is_err());
        assert!(restore(r#"{"K":1}"#).is_err());
    }
}
