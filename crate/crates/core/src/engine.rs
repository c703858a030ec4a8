//! Set-of-states engine with symbolic-step accounting.
//!
//! Every invocation of an image operator (`pre`, `post`, `cpre`, `cpre1`)
//! costs exactly one symbolic step, including the invocation that confirms a
//! fixpoint. Set algebra on [`StateSet`] is free. Cardinality tests are
//! counted separately in [`StepLedger::cardinality_ops`].
//!
//! The images are computed by an [`ImageBackend`]. The default backend scans
//! explicit adjacency lists over word-packed sets; any other backend must
//! keep the same step semantics (steps count invocations, not internal work).

use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Digraph, MdpGraph};
use crate::set::{LiveCounter, StateSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("state set over universe {found}, engine universe is {expected}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("state {id} outside universe of {n}")]
    StateOutOfRange { id: usize, n: usize },
}

/// Symbolic-step counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepLedger {
    pub pre_steps: u64,
    pub post_steps: u64,
    pub cpre_steps: u64,
    pub cpre1_steps: u64,
    pub cardinality_ops: u64,
    /// Most tracked sets alive at once (diagnostic only).
    pub peak_live_sets: u64,
}

impl StepLedger {
    /// The symbolic-step metric: total image-operator invocations.
    pub fn image_steps(&self) -> u64 {
        self.pre_steps + self.post_steps + self.cpre_steps + self.cpre1_steps
    }

    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &StepLedger) -> StepLedger {
        StepLedger {
            pre_steps: self.pre_steps - earlier.pre_steps,
            post_steps: self.post_steps - earlier.post_steps,
            cpre_steps: self.cpre_steps - earlier.cpre_steps,
            cpre1_steps: self.cpre1_steps - earlier.cpre1_steps,
            cardinality_ops: self.cardinality_ops - earlier.cardinality_ops,
            peak_live_sets: self.peak_live_sets,
        }
    }
}

/// Result of a budgeted cardinality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CardinalityVerdict {
    Exact(usize),
    MoreThan(usize),
}

/// One image-operator invocation, as recorded in the trace log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageKind {
    Pre,
    Post,
    CPre,
    CPre1,
}

/// Computes images and enumerations for one fixed graph.
pub trait ImageBackend {
    fn universe(&self) -> usize;
    /// States with an edge into `x`.
    fn pre(&self, x: &StateSet) -> StateSet;
    /// Successors of states in `x`.
    fn post(&self, x: &StateSet) -> StateSet;
    /// Random-attractor step in the subgraph induced by `within`: random
    /// states of `within` with an edge into `x`, and player-1 states of
    /// `within` whose successors inside `within` all lie in `x`.
    fn cpre(&self, x: &StateSet, within: &StateSet) -> StateSet;
    /// Player-1-attractor step, the dual of [`ImageBackend::cpre`].
    fn cpre1(&self, x: &StateSet, within: &StateSet) -> StateSet;
    /// Lists the members of `x` if there are at most `budget` of them.
    /// Also reports how many enumeration units were consumed.
    fn enumerate(&self, x: &StateSet, budget: usize) -> (Option<Vec<usize>>, u64);
}

/// Adjacency-scan backend over word-packed sets.
pub struct ExplicitBackend<'g> {
    graph: &'g Digraph,
    player1: Option<&'g [bool]>,
}

impl<'g> ExplicitBackend<'g> {
    pub fn new(graph: &'g Digraph, player1: Option<&'g [bool]>) -> Self {
        ExplicitBackend { graph, player1 }
    }

    #[inline]
    fn is_player1(&self, s: usize) -> bool {
        self.player1.is_some_and(|p| p[s])
    }

    /// `controller` states need one edge into `x`; the others need all their
    /// `within` edges in `x`.
    fn controlled_pre(
        &self,
        x: &StateSet,
        within: &StateSet,
        controller_is_player1: bool,
    ) -> StateSet {
        let n = self.graph.n();
        let mut out = StateSet::empty(n);
        let mut checked = StateSet::empty(n);
        for t in x {
            for &s in self.graph.pred(t) {
                if !within.contains(s) || out.contains(s) {
                    continue;
                }
                let joins = self.is_player1(s) == controller_is_player1
                    || (checked.insert(s)
                        && self
                            .graph
                            .succ(s)
                            .iter()
                            .all(|&v| x.contains(v) || !within.contains(v)));
                if joins {
                    out.insert(s);
                }
            }
        }
        out
    }
}

impl ImageBackend for ExplicitBackend<'_> {
    fn universe(&self) -> usize {
        self.graph.n()
    }

    fn pre(&self, x: &StateSet) -> StateSet {
        let mut out = StateSet::empty(self.graph.n());
        for t in x {
            for &s in self.graph.pred(t) {
                out.insert(s);
            }
        }
        out
    }

    fn post(&self, x: &StateSet) -> StateSet {
        let mut out = StateSet::empty(self.graph.n());
        for s in x {
            for &t in self.graph.succ(s) {
                out.insert(t);
            }
        }
        out
    }

    fn cpre(&self, x: &StateSet, within: &StateSet) -> StateSet {
        self.controlled_pre(x, within, false)
    }

    fn cpre1(&self, x: &StateSet, within: &StateSet) -> StateSet {
        self.controlled_pre(x, within, true)
    }

    fn enumerate(&self, x: &StateSet, budget: usize) -> (Option<Vec<usize>>, u64) {
        let mut members = Vec::new();
        for s in x {
            if members.len() == budget {
                return (None, budget as u64 + 1);
            }
            members.push(s);
        }
        let units = members.len() as u64;
        (Some(members), units)
    }
}

/// A set-of-states engine bound to one graph, owning a [`StepLedger`].
///
/// Single-threaded; build one engine per thread over a shared graph.
pub struct SymbolicEngine<'g> {
    backend: Box<dyn ImageBackend + 'g>,
    universe: usize,
    ledger: StepLedger,
    live: Rc<LiveCounter>,
    trace: Option<Vec<ImageKind>>,
    full: StateSet,
}

impl<'g> SymbolicEngine<'g> {
    pub fn new(g: &'g MdpGraph) -> Self {
        Self::with_backend(Box::new(ExplicitBackend::new(
            g.digraph(),
            Some(g.player1_mask()),
        )))
    }

    /// Engine over a plain digraph; every state counts as random.
    pub fn for_digraph(d: &'g Digraph) -> Self {
        Self::with_backend(Box::new(ExplicitBackend::new(d, None)))
    }

    pub fn with_backend(backend: Box<dyn ImageBackend + 'g>) -> Self {
        let universe = backend.universe();
        SymbolicEngine {
            backend,
            universe,
            ledger: StepLedger::default(),
            live: Rc::new(LiveCounter::default()),
            trace: None,
            full: StateSet::full(universe),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Snapshot of the counters.
    pub fn ledger(&self) -> StepLedger {
        StepLedger {
            peak_live_sets: self.live.peak(),
            ..self.ledger
        }
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = StepLedger::default();
        self.live.reset_peak();
        if let Some(trace) = self.trace.as_mut() {
            trace.clear();
        }
    }

    /// Starts recording every image invocation.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[ImageKind] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn check(&self, x: &StateSet) -> Result<(), EngineError> {
        if x.universe() == self.universe {
            Ok(())
        } else {
            Err(EngineError::UniverseMismatch {
                expected: self.universe,
                found: x.universe(),
            })
        }
    }

    fn record(&mut self, kind: ImageKind) {
        match kind {
            ImageKind::Pre => self.ledger.pre_steps += 1,
            ImageKind::Post => self.ledger.post_steps += 1,
            ImageKind::CPre => self.ledger.cpre_steps += 1,
            ImageKind::CPre1 => self.ledger.cpre1_steps += 1,
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push(kind);
        }
    }

    fn track(&self, set: StateSet) -> StateSet {
        set.tracked(&self.live)
    }

    pub fn empty(&self) -> StateSet {
        self.track(StateSet::empty(self.universe))
    }

    pub fn full(&self) -> StateSet {
        self.track(StateSet::full(self.universe))
    }

    pub fn singleton(&self, id: usize) -> Result<StateSet, EngineError> {
        self.from_ids([id])
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(&self, ids: I) -> Result<StateSet, EngineError> {
        let mut set = StateSet::empty(self.universe);
        for id in ids {
            if id >= self.universe {
                return Err(EngineError::StateOutOfRange {
                    id,
                    n: self.universe,
                });
            }
            set.insert(id);
        }
        Ok(self.track(set))
    }

    /// `{s | E(s) ∩ X ≠ ∅}`. One step.
    pub fn pre(&mut self, x: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.record(ImageKind::Pre);
        Ok(self.track(self.backend.pre(x)))
    }

    /// `⋃_{s ∈ X} E(s)`. One step.
    pub fn post(&mut self, x: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.record(ImageKind::Post);
        Ok(self.track(self.backend.post(x)))
    }

    /// `{s ∈ SP | E(s) ∩ X ≠ ∅} ∪ {s ∈ S1 | E(s) ⊆ X}`. One step.
    pub fn cpre(&mut self, x: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.record(ImageKind::CPre);
        Ok(self.track(self.backend.cpre(x, &self.full)))
    }

    /// `{s ∈ S1 | E(s) ∩ X ≠ ∅} ∪ {s ∈ SP | E(s) ⊆ X}`. One step.
    pub fn cpre1(&mut self, x: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.record(ImageKind::CPre1);
        Ok(self.track(self.backend.cpre1(x, &self.full)))
    }

    /// [`SymbolicEngine::cpre`] taken in the subgraph induced by `live`;
    /// the result lies inside `live`. One step.
    pub fn cpre_in(&mut self, x: &StateSet, live: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.check(live)?;
        self.record(ImageKind::CPre);
        Ok(self.track(self.backend.cpre(x, live)))
    }

    /// [`SymbolicEngine::cpre1`] taken in the subgraph induced by `live`. One step.
    pub fn cpre1_in(&mut self, x: &StateSet, live: &StateSet) -> Result<StateSet, EngineError> {
        self.check(x)?;
        self.check(live)?;
        self.record(ImageKind::CPre1);
        Ok(self.track(self.backend.cpre1(x, live)))
    }

    /// Decides `|X| ≤ k`, consuming at most `min(k + 1, |X|)` enumeration units.
    pub fn count_at_most(
        &mut self,
        x: &StateSet,
        k: usize,
    ) -> Result<CardinalityVerdict, EngineError> {
        Ok(match self.members_at_most(x, k)? {
            Some(members) => CardinalityVerdict::Exact(members.len()),
            None => CardinalityVerdict::MoreThan(k),
        })
    }

    /// Members of `X` in ascending order when `|X| ≤ k`, otherwise `None`.
    /// Same cost as [`SymbolicEngine::count_at_most`].
    pub fn members_at_most(
        &mut self,
        x: &StateSet,
        k: usize,
    ) -> Result<Option<Vec<usize>>, EngineError> {
        self.check(x)?;
        let (members, units) = self.backend.enumerate(x, k);
        self.ledger.cardinality_ops += units;
        Ok(members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m1;

    fn ids(s: &StateSet) -> Vec<usize> {
        s.to_vec()
    }

    #[test]
    fn m1_images() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        let set = |ids: &[usize]| StateSet::from_ids(4, ids.iter().copied());
        assert_eq!(ids(&e.pre(&set(&[])).unwrap()), Vec::<usize>::new());
        assert_eq!(ids(&e.pre(&set(&[3])).unwrap()), vec![1, 3]);
        assert_eq!(ids(&e.pre(&set(&[0])).unwrap()), vec![1]);
        assert_eq!(ids(&e.post(&set(&[])).unwrap()), Vec::<usize>::new());
        assert_eq!(ids(&e.post(&set(&[0])).unwrap()), vec![1, 2]);
        assert_eq!(ids(&e.post(&set(&[2])).unwrap()), vec![2]);
        assert_eq!(ids(&e.cpre(&set(&[])).unwrap()), Vec::<usize>::new());
        assert_eq!(ids(&e.cpre(&set(&[3])).unwrap()), vec![1, 3]);
        assert_eq!(ids(&e.cpre(&StateSet::full(4)).unwrap()), vec![0, 1, 2, 3]);
        assert_eq!(ids(&e.cpre1(&set(&[])).unwrap()), Vec::<usize>::new());
        assert_eq!(ids(&e.cpre1(&set(&[2])).unwrap()), vec![0, 2]);
        assert_eq!(ids(&e.cpre1(&StateSet::full(4)).unwrap()), vec![0, 1, 2, 3]);
        let l = e.ledger();
        assert_eq!(
            (l.pre_steps, l.post_steps, l.cpre_steps, l.cpre1_steps),
            (3, 3, 3, 3)
        );
        assert_eq!(l.image_steps(), 12);
        assert_eq!(l.cardinality_ops, 0);
    }

    #[test]
    fn restricted_cpre_ignores_dead_successors() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        // With 2 dead, player-1 state 0 only keeps the edge to 1.
        let live = StateSet::from_ids(4, [0, 1, 3]);
        let x = StateSet::from_ids(4, [1]);
        assert_eq!(ids(&e.cpre_in(&x, &live).unwrap()), vec![0]);
        assert_eq!(ids(&e.cpre(&x).unwrap()), Vec::<usize>::new());
    }

    #[test]
    fn cardinality() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        assert_eq!(
            e.count_at_most(&e.empty(), 0).unwrap(),
            CardinalityVerdict::Exact(0)
        );
        let big = StateSet::from_ids(4, [0, 1, 2, 3]);
        assert_eq!(
            e.count_at_most(&big, 2).unwrap(),
            CardinalityVerdict::MoreThan(2)
        );
        assert_eq!(e.ledger().cardinality_ops, 3);
        assert_eq!(
            e.count_at_most(&big, 10).unwrap(),
            CardinalityVerdict::Exact(4)
        );
        assert_eq!(e.ledger().cardinality_ops, 7);
        assert_eq!(e.ledger().image_steps(), 0);
    }

    #[test]
    fn mismatch_is_an_error() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        assert_eq!(
            e.pre(&StateSet::empty(5)),
            Err(EngineError::UniverseMismatch {
                expected: 4,
                found: 5
            })
        );
        assert!(e.singleton(4).is_err());
        assert_eq!(e.ledger().image_steps(), 0);
    }

    #[test]
    fn trace_replays_to_ledger() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        e.enable_trace();
        let x = e.singleton(3).unwrap();
        e.pre(&x).unwrap();
        e.post(&x).unwrap();
        e.cpre1(&x).unwrap();
        assert_eq!(
            e.trace(),
            &[ImageKind::Pre, ImageKind::Post, ImageKind::CPre1]
        );
        assert_eq!(e.ledger().image_steps(), e.trace().len() as u64);
        e.reset_ledger();
        assert_eq!(e.ledger().image_steps(), 0);
        assert!(e.trace().is_empty());
    }
}
