//! Word-packed sets of state ids over a fixed universe `0..n`.

use std::cell::Cell;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

const WORD: usize = 64;

/// Counts how many tracked sets are alive at once. Shared between an engine
/// and every set it hands out.
#[derive(Debug, Default)]
pub(crate) struct LiveCounter {
    live: Cell<u64>,
    peak: Cell<u64>,
}

impl LiveCounter {
    fn acquire(&self) {
        let live = self.live.get() + 1;
        self.live.set(live);
        if live > self.peak.get() {
            self.peak.set(live);
        }
    }

    fn release(&self) {
        self.live.set(self.live.get().saturating_sub(1));
    }

    pub(crate) fn peak(&self) -> u64 {
        self.peak.get()
    }

    pub(crate) fn reset_peak(&self) {
        self.peak.set(self.live.get());
    }
}

/// A set of states within the universe `0..universe`.
///
/// Equality is extensional: two sets are equal iff they have the same
/// universe and the same members. Binary operations panic when the operands
/// live in different universes.
pub struct StateSet {
    universe: usize,
    words: Vec<u64>,
    tracker: Option<Rc<LiveCounter>>,
}

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet {
            universe,
            words: vec![0; universe.div_ceil(WORD)],
            tracker: None,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for w in set.words.iter_mut() {
            *w = u64::MAX;
        }
        set.trim();
        set
    }

    /// # Panics
    /// If `id` is outside the universe.
    pub fn singleton(universe: usize, id: usize) -> Self {
        let mut set = Self::empty(universe);
        set.insert(id);
        set
    }

    /// # Panics
    /// If any id is outside the universe.
    pub fn from_ids<I: IntoIterator<Item = usize>>(universe: usize, ids: I) -> Self {
        let mut set = Self::empty(universe);
        for id in ids {
            set.insert(id);
        }
        set
    }

    /// Builds the set of ids whose flag is true.
    pub fn from_mask(mask: &[bool]) -> Self {
        Self::from_ids(
            mask.len(),
            mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
        )
    }

    pub(crate) fn tracked(mut self, counter: &Rc<LiveCounter>) -> Self {
        if self.tracker.is_none() {
            counter.acquire();
            self.tracker = Some(Rc::clone(counter));
        }
        self
    }

    fn trim(&mut self) {
        let rem = self.universe % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn contains(&self, id: usize) -> bool {
        id < self.universe && self.words[id / WORD] >> (id % WORD) & 1 == 1
    }

    /// Returns true if the id was newly inserted.
    ///
    /// # Panics
    /// If `id` is outside the universe.
    #[inline]
    pub fn insert(&mut self, id: usize) -> bool {
        assert!(
            id < self.universe,
            "state {id} outside universe of {}",
            self.universe
        );
        let word = &mut self.words[id / WORD];
        let bit = 1u64 << (id % WORD);
        let fresh = *word & bit == 0;
        *word |= bit;
        fresh
    }

    #[inline]
    pub fn remove(&mut self, id: usize) -> bool {
        if id >= self.universe {
            return false;
        }
        let word = &mut self.words[id / WORD];
        let bit = 1u64 << (id % WORD);
        let present = *word & bit != 0;
        *word &= !bit;
        present
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn check(&self, other: &StateSet) {
        assert_eq!(
            self.universe, other.universe,
            "state sets over different universes"
        );
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersect(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn minus(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.minus_with(other);
        out
    }

    pub fn complement(&self) -> StateSet {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.trim();
        out
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn minus_with(&mut self, other: &StateSet) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.check(other);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        self.check(other);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }
}

impl Clone for StateSet {
    fn clone(&self) -> Self {
        if let Some(t) = &self.tracker {
            t.acquire();
        }
        StateSet {
            universe: self.universe,
            words: self.words.clone(),
            tracker: self.tracker.clone(),
        }
    }
}

impl Drop for StateSet {
    fn drop(&mut self) {
        if let Some(t) = &self.tracker {
            t.release();
        }
    }
}

impl PartialEq for StateSet {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.words == other.words
    }
}

impl Eq for StateSet {}

impl Hash for StateSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.universe.hash(state);
        self.words.hash(state);
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.index * WORD + bit);
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

impl<'a> IntoIterator for &'a StateSet {
    type Item = usize;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_masks_tail_bits() {
        let s = StateSet::full(70);
        assert_eq!(s.len(), 70);
        assert_eq!(s.complement().len(), 0);
        assert_eq!(StateSet::full(0).len(), 0);
    }

    #[test]
    fn algebra() {
        let a = StateSet::from_ids(10, [1, 2]);
        let b = StateSet::from_ids(10, [2, 3]);
        assert_eq!(a.intersect(&b).to_vec(), vec![2]);
        assert_eq!(a.union(&b), b.union(&a));
        let full = StateSet::full(10);
        assert!(full.minus(&full).is_empty());
        assert!(a.is_subset(&a.union(&b)));
        assert!(a.intersects(&b));
        assert_eq!(a.first(), Some(1));
    }

    #[test]
    fn iteration_crosses_words() {
        let ids = [0, 63, 64, 65, 127, 128, 199];
        let s = StateSet::from_ids(200, ids);
        assert_eq!(s.to_vec(), ids.to_vec());
    }

    #[test]
    #[should_panic(expected = "different universes")]
    fn universe_mismatch_panics() {
        let _ = StateSet::empty(3).union(&StateSet::empty(4));
    }

    #[test]
    fn tracker_counts_live_sets() {
        let counter = Rc::new(LiveCounter::default());
        let a = StateSet::empty(4).tracked(&counter);
        let b = a.clone();
        let c = a.union(&b);
        assert_eq!(counter.peak(), 3);
        drop((a, b, c));
        assert_eq!(counter.live.get(), 0);
    }
}
