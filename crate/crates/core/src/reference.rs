//! Sorted multiset used as the reference priority queue.

use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, usize>,
    len: usize,
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Multiset {
            counts: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, v: T) {
        *self.counts.entry(v).or_insert(0) += 1;
        self.len += 1;
    }

    /// Removes one copy of `v`; returns whether it was present.
    pub fn remove(&mut self, v: &T) -> bool {
        match self.counts.get_mut(v) {
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(v);
                }
                self.len -= 1;
                true
            }
            None => false,
        }
    }

    pub fn count(&self, v: &T) -> usize {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn min(&self) -> Option<&T> {
        self.counts.keys().next()
    }

    pub fn pop_min(&mut self) -> Option<T> {
        let v = self.min()?.clone();
        self.remove(&v);
        Some(v)
    }

    /// All items in ascending order, with repeats.
    pub fn to_sorted_vec(&self) -> Vec<T> {
        self.counts
            .iter()
            .flat_map(|(v, &c)| std::iter::repeat_n(v.clone(), c))
            .collect()
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for v in iter {
            m.insert(v);
        }
        m
    }
}
