//! Implementation-independent behaviour checks over recorded operation
//! histories.
//!
//! A history is a finite list of events; point `t` is the gap before event
//! `t` (point `n` follows the last event). The heap content `C_t` is the bag
//! of successfully inserted items minus the bag of returned items, as a
//! multiset difference, on top of an initial content.
//!
//! Three checkers are provided:
//! * [`check_legitimate_history`]: delete-min fails iff `C_t` is empty and
//!   otherwise returns `min(C_t)`; insert fails iff `|C_t| = K`; each
//!   operation takes at most `c0 + c1·max(1, ⌈lg(|C_t|+1)⌉)` steps.
//! * [`check_availability`]: the delete-min rule exactly, insert must fail
//!   when `|C_t| = K` but may fail otherwise, and steps bounded in terms of
//!   `K` instead of `|C_t|`. The initial content is the active-tree bag of
//!   the starting state.
//! * [`check_stabilization`]: the strict rules from the first legitimate
//!   point on, with that point's active-tree bag as initial content.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{check_legitimacy, BalanceParams};
use crate::error::{Error, Result};
use crate::node::HeapState;
use crate::ops::{OpResponse, Outcome, StabHeap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "item", rename_all = "snake_case")]
pub enum Invocation {
    Insert(i64),
    DeleteMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Response {
    Ack,
    HeapFull,
    Item(i64),
    HeapEmpty,
}

impl From<Outcome<i64>> for Response {
    fn from(o: Outcome<i64>) -> Self {
        match o {
            Outcome::Ack => Response::Ack,
            Outcome::HeapFull => Response::HeapFull,
            Outcome::Item(q) => Response::Item(q),
            Outcome::HeapEmpty => Response::HeapEmpty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEvent {
    pub invocation: Invocation,
    pub response: Response,
    pub steps: u64,
    /// Index of the snapshot taken just before this event, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    pub events: Vec<HistoryEvent>,
}

impl History {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let events = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::History(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(History { events })
    }
}

/// Step-bound constants `(c0, c1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBound {
    pub c0: u64,
    pub c1: u64,
}

/// `⌈lg x⌉` for `x >= 1`.
pub fn ceil_lg(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        ((x - 1).ilog2() + 1) as u64
    }
}

impl StepBound {
    /// Bound for a heap of `n` items.
    pub fn for_content(&self, n: usize) -> u64 {
        self.c0 + self.c1 * ceil_lg(n + 1).max(1)
    }

    /// Bound for capacity `k`; equal to `c0 + c1·(⌊lg k⌋ + 1)`.
    pub fn for_capacity(&self, k: usize) -> u64 {
        self.c0 + self.c1 * ceil_lg(k + 1)
    }

    /// Bound for a tree whose deepest node is at depth `height`.
    pub fn for_height(&self, height: i64) -> u64 {
        self.c0 + self.c1 * (height + 1).max(0) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Delete-min failed with content, or succeeded without.
    DeleteOutcome,
    /// Delete-min returned something other than the content minimum.
    DeleteValue,
    /// Insert outcome wrong for the current content size.
    InsertOutcome,
    /// Too many steps.
    Steps,
    /// The witness prefix holds more than `K` items.
    PrefixTooLarge,
    /// No legitimate point in the recorded window.
    NoLegitimatePoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Point immediately before the offending event, indexed in the recorded
    /// history (not counting the witness prefix).
    pub point: usize,
    pub constraint: Constraint,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "point {}: {:?}: {}",
            self.point, self.constraint, self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Number of events examined.
    pub window: usize,
    /// Size of the witness prefix.
    pub prefix_len: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationVerdict {
    pub verdict: Verdict,
    /// Events before the first legitimate point; `None` when there is none.
    pub convergence_period: Option<usize>,
}

impl StabilizationVerdict {
    pub fn is_clean(&self) -> bool {
        self.verdict.is_clean()
    }
}

/// `C_t = I_t ∖ D_t` maintained incrementally.
#[derive(Clone, Debug, Default)]
struct Content {
    inserted: BTreeMap<i64, usize>,
    deleted: BTreeMap<i64, usize>,
    content: BTreeMap<i64, usize>,
    len: usize,
}

impl Content {
    fn from_items(items: &[i64]) -> Self {
        let mut c = Content::default();
        for &p in items {
            c.add_inserted(p);
        }
        c
    }

    fn net(&self, v: i64) -> usize {
        let i = self.inserted.get(&v).copied().unwrap_or(0);
        let d = self.deleted.get(&v).copied().unwrap_or(0);
        i.saturating_sub(d)
    }

    fn update(&mut self, v: i64, before: usize) {
        let after = self.net(v);
        self.len = self.len + after - before;
        if after == 0 {
            self.content.remove(&v);
        } else {
            self.content.insert(v, after);
        }
    }

    fn add_inserted(&mut self, v: i64) {
        let before = self.net(v);
        *self.inserted.entry(v).or_insert(0) += 1;
        self.update(v, before);
    }

    fn add_deleted(&mut self, v: i64) {
        let before = self.net(v);
        *self.deleted.entry(v).or_insert(0) += 1;
        self.update(v, before);
    }

    fn min(&self) -> Option<i64> {
        self.content.keys().next().copied()
    }

    fn items(&self) -> Vec<i64> {
        self.content
            .iter()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect()
    }
}

/// The content `C_t` at every point `0..=n`, each sorted.
pub fn content_trace(history: &History, initial: &[i64]) -> Vec<Vec<i64>> {
    let mut c = Content::from_items(initial);
    let mut out = Vec::with_capacity(history.len() + 1);
    out.push(c.items());
    for e in &history.events {
        apply(&mut c, e);
        out.push(c.items());
    }
    out
}

fn apply(c: &mut Content, e: &HistoryEvent) {
    match (e.invocation, e.response) {
        (Invocation::Insert(p), Response::Ack) => c.add_inserted(p),
        (Invocation::DeleteMin, Response::Item(q)) => c.add_deleted(q),
        _ => {}
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rules {
    Strict,
    Available,
}

fn check_rules(
    events: &[HistoryEvent],
    initial: &[i64],
    capacity: usize,
    bound: &StepBound,
    rules: Rules,
    offset: usize,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if initial.len() > capacity {
        out.push(Violation {
            point: offset,
            constraint: Constraint::PrefixTooLarge,
            detail: format!("{} items for capacity {capacity}", initial.len()),
        });
    }
    let mut c = Content::from_items(initial);
    for (i, e) in events.iter().enumerate() {
        let point = offset + i;
        let mut flag = |constraint, detail: String| {
            out.push(Violation {
                point,
                constraint,
                detail,
            })
        };
        match (e.invocation, e.response) {
            (Invocation::DeleteMin, Response::HeapEmpty) => {
                if c.len != 0 {
                    flag(
                        Constraint::DeleteOutcome,
                        format!("failed with |C_t| = {}", c.len),
                    );
                }
            }
            (Invocation::DeleteMin, Response::Item(q)) => match c.min() {
                None => flag(
                    Constraint::DeleteOutcome,
                    format!("returned {q} from empty content"),
                ),
                Some(min) if min != q => flag(
                    Constraint::DeleteValue,
                    format!("returned {q}, min(C_t) = {min}"),
                ),
                Some(_) => {}
            },
            (Invocation::Insert(_), Response::Ack) => {
                if c.len >= capacity {
                    flag(
                        Constraint::InsertOutcome,
                        format!("succeeded with |C_t| = {}", c.len),
                    );
                }
            }
            (Invocation::Insert(_), Response::HeapFull) => {
                if rules == Rules::Strict && c.len != capacity {
                    flag(
                        Constraint::InsertOutcome,
                        format!("failed with |C_t| = {}", c.len),
                    );
                }
            }
            (inv, resp) => flag(
                Constraint::InsertOutcome,
                format!("response {resp:?} does not answer {inv:?}"),
            ),
        }
        let limit = match rules {
            Rules::Strict => bound.for_content(c.len),
            Rules::Available => bound.for_capacity(capacity),
        };
        if e.steps > limit {
            flag(
                Constraint::Steps,
                format!("{} steps, bound {limit}", e.steps),
            );
        }
        apply(&mut c, e);
    }
    out
}

/// Strict constraints from `initial_content`.
pub fn check_legitimate_history(
    history: &History,
    initial_content: &[i64],
    capacity: usize,
    bound: &StepBound,
) -> Verdict {
    Verdict {
        window: history.len(),
        prefix_len: initial_content.len(),
        violations: check_rules(
            &history.events,
            initial_content,
            capacity,
            bound,
            Rules::Strict,
            0,
        ),
    }
}

/// Availability with the initial active-tree bag as witness prefix.
pub fn check_availability(
    history: &History,
    initial: &HeapState<i64>,
    bound: &StepBound,
) -> Verdict {
    let prefix = check_legitimacy(initial, &BalanceParams::default()).bag;
    check_availability_with(history, &prefix, initial.capacity(), bound)
}

/// Availability with an explicit witness prefix (its items, in any order).
pub fn check_availability_with(
    history: &History,
    prefix: &[i64],
    capacity: usize,
    bound: &StepBound,
) -> Verdict {
    Verdict {
        window: history.len(),
        prefix_len: prefix.len(),
        violations: check_rules(
            &history.events,
            prefix,
            capacity,
            bound,
            Rules::Available,
            0,
        ),
    }
}

/// Stabilization using per-point snapshots of our heap; a point counts as
/// legitimate when the analyzer says so.
pub fn check_stabilization(
    history: &History,
    snapshots: &[HeapState<i64>],
    params: &BalanceParams,
    bound: &StepBound,
) -> Result<StabilizationVerdict> {
    let capacity = snapshots
        .first()
        .map(|s| s.capacity())
        .ok_or_else(|| Error::History("no snapshots".into()))?;
    let witnesses: Vec<Option<Vec<i64>>> = snapshots
        .iter()
        .map(|s| {
            let r = check_legitimacy(s, params);
            r.legitimate.then_some(r.bag)
        })
        .collect();
    check_stabilization_with(history, &witnesses, capacity, bound)
}

/// Stabilization given, per point, the content of a legitimate state or
/// `None` for an illegitimate one. Needs `history.len() + 1` witnesses.
pub fn check_stabilization_with(
    history: &History,
    witnesses: &[Option<Vec<i64>>],
    capacity: usize,
    bound: &StepBound,
) -> Result<StabilizationVerdict> {
    if witnesses.len() != history.len() + 1 {
        return Err(Error::History(format!(
            "{} events need {} point witnesses, got {}",
            history.len(),
            history.len() + 1,
            witnesses.len()
        )));
    }
    let Some((t, content)) = witnesses
        .iter()
        .enumerate()
        .find_map(|(t, w)| w.as_ref().map(|c| (t, c)))
    else {
        return Ok(StabilizationVerdict {
            verdict: Verdict {
                window: history.len(),
                prefix_len: 0,
                violations: vec![Violation {
                    point: history.len(),
                    constraint: Constraint::NoLegitimatePoint,
                    detail: format!("none of {} points is legitimate", witnesses.len()),
                }],
            },
            convergence_period: None,
        });
    };
    let violations = check_rules(
        &history.events[t..],
        content,
        capacity,
        bound,
        Rules::Strict,
        t,
    );
    Ok(StabilizationVerdict {
        verdict: Verdict {
            window: history.len(),
            prefix_len: content.len(),
            violations,
        },
        convergence_period: Some(t),
    })
}

/// Anything that answers heap operations and can say whether its current
/// state is legitimate (returning its content if so).
pub trait HeapImpl {
    fn capacity(&self) -> usize;
    fn insert(&mut self, p: i64) -> OpResponse<i64>;
    fn delete_min(&mut self) -> OpResponse<i64>;
    fn legitimate_content(&self, params: &BalanceParams) -> Option<Vec<i64>>;
}

impl HeapImpl for StabHeap<i64> {
    fn capacity(&self) -> usize {
        StabHeap::capacity(self)
    }

    fn insert(&mut self, p: i64) -> OpResponse<i64> {
        StabHeap::insert(self, p)
    }

    fn delete_min(&mut self) -> OpResponse<i64> {
        StabHeap::delete_min(self)
    }

    fn legitimate_content(&self, params: &BalanceParams) -> Option<Vec<i64>> {
        let r = check_legitimacy(self.state(), params);
        r.legitimate.then_some(r.bag)
    }
}

/// A history together with the legitimacy witness at every point.
#[derive(Clone, Debug, Default)]
pub struct Recording {
    pub history: History,
    pub witnesses: Vec<Option<Vec<i64>>>,
}

/// Runs `invocations` against `heap`, recording responses and witnesses.
pub fn record<H: HeapImpl>(
    heap: &mut H,
    invocations: &[Invocation],
    params: &BalanceParams,
) -> Recording {
    let mut rec = Recording::default();
    rec.witnesses.push(heap.legitimate_content(params));
    for &inv in invocations {
        let r = match inv {
            Invocation::Insert(p) => heap.insert(p),
            Invocation::DeleteMin => heap.delete_min(),
        };
        rec.history.events.push(HistoryEvent {
            invocation: inv,
            response: r.outcome.into(),
            steps: r.steps,
            snapshot: None,
        });
        rec.witnesses.push(heap.legitimate_content(params));
    }
    rec
}

/// Like [`record`] for our heap, also keeping a snapshot before every event
/// and after the last one.
pub fn record_with_snapshots(
    heap: &mut StabHeap<i64>,
    invocations: &[Invocation],
) -> (History, Vec<HeapState<i64>>) {
    let mut history = History::default();
    let mut snaps = vec![heap.state().clone()];
    for &inv in invocations {
        let r = match inv {
            Invocation::Insert(p) => heap.insert(p),
            Invocation::DeleteMin => heap.delete_min(),
        };
        history.events.push(HistoryEvent {
            invocation: inv,
            response: r.outcome.into(),
            steps: r.steps,
            snapshot: Some(snaps.len() - 1),
        });
        snaps.push(heap.state().clone());
    }
    (history, snaps)
}
