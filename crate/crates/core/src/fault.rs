//! Fault injection and deterministic state generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::{HeapState, ItemValue, NodeId, Toggle};
use crate::ops::StabHeap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Val,
    Height,
    Nextslot,
    Toggle,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Val, Field::Height, Field::Nextslot, Field::Toggle];

    fn name(self) -> &'static str {
        match self {
            Field::Val => "val",
            Field::Height => "height",
            Field::Nextslot => "nextslot",
            Field::Toggle => "toggle",
        }
    }
}

/// One corruption. `value: None` means `Absent` and is only accepted for
/// `val`; toggles keep the low bit of the raw value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultEdit {
    pub node: usize,
    pub field: Field,
    pub value: Option<i64>,
}

/// Edits applied in order; a later edit to the same field wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaultSpec {
    pub edits: Vec<FaultEdit>,
}

impl FaultSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Applies `spec` to `state`. Every edit is validated before any is applied,
/// so a rejected spec leaves the state untouched.
pub fn inject(state: &mut HeapState<i64>, spec: &FaultSpec) -> Result<()> {
    for e in &spec.edits {
        state.node_id(e.node)?;
        if e.value.is_none() && e.field != Field::Val {
            return Err(Error::AbsentNotAllowed {
                field: e.field.name(),
            });
        }
    }
    for e in &spec.edits {
        let rec = state.node_mut(NodeId(e.node));
        match (e.field, e.value) {
            (Field::Val, v) => rec.val = ItemValue::from(v),
            (Field::Height, Some(v)) => rec.height = v,
            (Field::Nextslot, Some(v)) => rec.nextslot = v,
            (Field::Toggle, Some(v)) => rec.toggle = Toggle::from_raw(v),
            (_, None) => unreachable!("validated above"),
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GenMode {
    /// Built by `items` random inserts into an empty heap.
    Legitimate { items: usize },
    /// Every field of every node drawn from the corruption pool.
    Arbitrary,
    /// A legitimate state hit by `faults` random edits.
    CorruptLegitimate { items: usize, faults: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateGenSpec {
    pub seed: u64,
    pub capacity: usize,
    #[serde(flatten)]
    pub mode: GenMode,
}

/// Deterministic in `spec`.
pub fn generate(spec: &StateGenSpec) -> Result<HeapState<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate_with(&mut rng, spec.capacity, spec.mode)
}

pub fn generate_with<R: Rng>(
    rng: &mut R,
    capacity: usize,
    mode: GenMode,
) -> Result<HeapState<i64>> {
    match mode {
        GenMode::Legitimate { items } => legitimate(rng, capacity, items),
        GenMode::Arbitrary => arbitrary(rng, capacity),
        GenMode::CorruptLegitimate { items, faults } => {
            let mut state = legitimate(rng, capacity, items)?;
            let edits = (0..faults).map(|_| random_edit(rng, capacity)).collect();
            inject(&mut state, &FaultSpec { edits })?;
            Ok(state)
        }
    }
}

/// Item drawn from a range wide enough to be mostly distinct but narrow
/// enough to produce duplicates.
pub fn random_item<R: Rng>(rng: &mut R, capacity: usize) -> i64 {
    let span = 4 * capacity as i64 + 16;
    rng.gen_range(-span..=span)
}

fn legitimate<R: Rng>(rng: &mut R, capacity: usize, items: usize) -> Result<HeapState<i64>> {
    if items > capacity {
        return Err(Error::TooManyItems { items, capacity });
    }
    let mut heap = StabHeap::new(capacity)?;
    for _ in 0..items {
        let p = random_item(rng, capacity);
        heap.insert(p);
    }
    Ok(heap.into_state())
}

fn arbitrary<R: Rng>(rng: &mut R, capacity: usize) -> Result<HeapState<i64>> {
    let mut state = HeapState::new(capacity)?;
    for i in 0..capacity {
        let rec = state.node_mut(NodeId(i));
        rec.val = pool_val(rng, capacity);
        rec.height = pool_field(rng, capacity);
        rec.nextslot = pool_field(rng, capacity);
        rec.toggle = Toggle::from_raw(rng.gen());
    }
    Ok(state)
}

fn random_edit<R: Rng>(rng: &mut R, capacity: usize) -> FaultEdit {
    let field = *Field::ALL.choose(rng).expect("non-empty");
    let value = match field {
        Field::Val => pool_val(rng, capacity).into(),
        Field::Toggle => Some(rng.gen()),
        Field::Height | Field::Nextslot => Some(pool_field(rng, capacity)),
    };
    FaultEdit {
        node: rng.gen_range(0..capacity),
        field,
        value,
    }
}

/// Value pool for `val`, biased toward boundary values.
fn pool_val<R: Rng>(rng: &mut R, capacity: usize) -> ItemValue<i64> {
    let k = capacity as i64;
    let v = match rng.gen_range(0..20) {
        0..=4 => return ItemValue::Absent,
        5 => 0,
        6 => k - 1,
        7 => k,
        8 => k + 1,
        9 => -1,
        10 => i64::MIN,
        11 => i64::MAX,
        12 => rng.gen(),
        _ => rng.gen_range(-k..=2 * k),
    };
    ItemValue::Item(v)
}

/// Value pool for `height` and `nextslot`.
fn pool_field<R: Rng>(rng: &mut R, capacity: usize) -> i64 {
    let k = capacity as i64;
    let lg = capacity.ilog2() as i64;
    match rng.gen_range(0..12) {
        0 => -1,
        1 => 0,
        2 => k - 1,
        3 => k,
        4 => k + 1,
        5 => i64::MIN,
        6 => i64::MAX,
        7 => rng.gen(),
        _ => rng.gen_range(-2..=lg + 2),
    }
}
