//! Fixpoint primitives shared by the solvers: backward reachability, random
//! and player-1 attractors, and lockstep searches from a batch of sources.
//!
//! Each primitive has a symbolic form driven by a [`SymbolicEngine`] and an
//! explicit twin working on adjacency lists at zero ledger cost. All of them
//! work inside the subgraph induced by a `live` set.

use serde::Serialize;

use crate::engine::{EngineError, SymbolicEngine};
use crate::model::{Digraph, MdpGraph};
use crate::set::StateSet;

/// Live states with a path (inside `live`) to `target`.
///
/// Iterates `X := X ∪ (Pre(X) ∩ live)` from `X = target`; the last `pre`
/// confirms the fixpoint.
pub fn reach_backward(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    target: &StateSet,
) -> Result<StateSet, EngineError> {
    engine.check(live)?;
    engine.check(target)?;
    let mut reached = target.intersect(live);
    let mut frontier = reached.clone();
    loop {
        let mut layer = engine.pre(&frontier)?;
        layer.intersect_with(live);
        layer.minus_with(&reached);
        if layer.is_empty() {
            return Ok(reached);
        }
        reached.union_with(&layer);
        frontier = layer;
    }
}

/// Live states reachable (inside `live`) from `source`.
pub fn reach_forward(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    source: &StateSet,
) -> Result<StateSet, EngineError> {
    engine.check(live)?;
    engine.check(source)?;
    let mut reached = source.intersect(live);
    let mut frontier = reached.clone();
    loop {
        let mut layer = engine.post(&frontier)?;
        layer.intersect_with(live);
        layer.minus_with(&reached);
        if layer.is_empty() {
            return Ok(reached);
        }
        reached.union_with(&layer);
        frontier = layer;
    }
}

/// Random attractor of `u` in the subgraph induced by `live`: least fixpoint
/// of `X ↦ X ∪ CPre(X)` from `u`.
pub fn attr_random(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    u: &StateSet,
) -> Result<StateSet, EngineError> {
    engine.check(live)?;
    engine.check(u)?;
    let mut x = u.intersect(live);
    loop {
        let step = engine.cpre_in(&x, live)?;
        if step.is_subset(&x) {
            return Ok(x);
        }
        x.union_with(&step);
    }
}

/// Player-1 attractor of `u` in the subgraph induced by `live`.
pub fn attr_player1(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    u: &StateSet,
) -> Result<StateSet, EngineError> {
    engine.check(live)?;
    engine.check(u)?;
    let mut x = u.intersect(live);
    loop {
        let step = engine.cpre1_in(&x, live)?;
        if step.is_subset(&x) {
            return Ok(x);
        }
        x.union_with(&step);
    }
}

/// Reverse BFS twin of [`reach_backward`].
pub fn reach_backward_explicit(g: &Digraph, live: &StateSet, target: &StateSet) -> StateSet {
    let mut reached = target.intersect(live);
    let mut queue: Vec<usize> = reached.iter().collect();
    while let Some(t) = queue.pop() {
        for &s in g.pred(t) {
            if live.contains(s) && reached.insert(s) {
                queue.push(s);
            }
        }
    }
    reached
}

/// Forward BFS twin of [`reach_forward`].
pub fn reach_forward_explicit(g: &Digraph, live: &StateSet, source: &StateSet) -> StateSet {
    let mut reached = source.intersect(live);
    let mut queue: Vec<usize> = reached.iter().collect();
    while let Some(s) = queue.pop() {
        for &t in g.succ(s) {
            if live.contains(t) && reached.insert(t) {
                queue.push(t);
            }
        }
    }
    reached
}

fn attr_explicit(
    g: &MdpGraph,
    live: &StateSet,
    u: &StateSet,
    controller_is_player1: bool,
) -> StateSet {
    let x = u.intersect(live);
    let seeds: Vec<usize> = x.iter().collect();
    extend_attractor_explicit(g, live, x, seeds, controller_is_player1)
}

/// Grows the attractor `x` inside `live`, propagating only from `seeds`
/// (members of `x` whose predecessors still need a visit).
pub(crate) fn extend_attractor_explicit<I: IntoIterator<Item = usize>>(
    g: &MdpGraph,
    live: &StateSet,
    mut x: StateSet,
    seeds: I,
    controller_is_player1: bool,
) -> StateSet {
    const UNSEEN: usize = usize::MAX;
    let mut remaining = vec![UNSEEN; g.n()];
    let mut queue: Vec<usize> = seeds.into_iter().collect();
    while let Some(t) = queue.pop() {
        for &s in g.pred(t) {
            if !live.contains(s) || x.contains(s) {
                continue;
            }
            let joins = if g.is_player1(s) == controller_is_player1 {
                true
            } else {
                let left = &mut remaining[s];
                if *left == UNSEEN {
                    *left = g.succ(s).iter().filter(|&&v| live.contains(v)).count();
                }
                *left -= 1;
                *left == 0
            };
            if joins {
                x.insert(s);
                queue.push(s);
            }
        }
    }
    x
}

/// Counter-based twin of [`attr_random`], linear in the edges touched.
pub fn attr_random_explicit(g: &MdpGraph, live: &StateSet, u: &StateSet) -> StateSet {
    attr_explicit(g, live, u, false)
}

/// Counter-based twin of [`attr_player1`].
pub fn attr_player1_explicit(g: &MdpGraph, live: &StateSet, u: &StateSet) -> StateSet {
    attr_explicit(g, live, u, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LockstepResult {
    /// The search from `source` closed off without touching the stop set;
    /// `trap` is everything it visited and is forward-closed in `live`.
    TrapFound { source: usize, trap: StateSet },
    /// Every search met the stop set.
    AllReachedTarget,
}

/// Work done by one search of a lockstep batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceProgress {
    pub source: usize,
    /// Edges traversed (explicit) or images taken (symbolic).
    pub units: usize,
    pub reached_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockstepOutcome {
    pub result: LockstepResult,
    pub rounds: usize,
    pub progress: Vec<SourceProgress>,
}

fn sorted_sources(sources: &[usize]) -> Vec<usize> {
    let mut s = sources.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

struct Dfs {
    source: usize,
    stack: Vec<(usize, usize)>,
    visited: StateSet,
    active: bool,
    edges: usize,
    reached_stop: bool,
}

enum DfsStep {
    Advanced,
    HitStop,
    Completed,
}

impl Dfs {
    /// Traverses one live edge, popping exhausted frames on the way.
    fn step(&mut self, g: &Digraph, live: &StateSet, stop: &StateSet) -> DfsStep {
        loop {
            let Some(top) = self.stack.last_mut() else {
                return DfsStep::Completed;
            };
            let (u, next) = *top;
            let succ = g.succ(u);
            if next == succ.len() {
                self.stack.pop();
                continue;
            }
            top.1 += 1;
            let v = succ[next];
            if !live.contains(v) {
                continue;
            }
            self.edges += 1;
            if self.visited.insert(v) {
                if stop.contains(v) {
                    return DfsStep::HitStop;
                }
                self.stack.push((v, 0));
            }
            return DfsStep::Advanced;
        }
    }
}

/// Explicit lockstep DFS: each round advances every active DFS by one edge,
/// in ascending source order. A DFS that meets `stop` is dropped; the first
/// DFS to finish without meeting `stop` yields its visited set as a trap.
pub fn lockstep_dfs_explicit(
    g: &Digraph,
    live: &StateSet,
    sources: &[usize],
    stop: &StateSet,
) -> LockstepOutcome {
    let n = g.n();
    let mut searches: Vec<Dfs> = sorted_sources(sources)
        .into_iter()
        .map(|s| {
            let in_stop = stop.contains(s);
            Dfs {
                source: s,
                stack: vec![(s, 0)],
                visited: StateSet::singleton(n, s),
                active: !in_stop,
                edges: 0,
                reached_stop: in_stop,
            }
        })
        .collect();

    let progress = |searches: &[Dfs]| {
        searches
            .iter()
            .map(|d| SourceProgress {
                source: d.source,
                units: d.edges,
                reached_stop: d.reached_stop,
            })
            .collect::<Vec<_>>()
    };

    let mut rounds = 0;
    loop {
        if searches.iter().all(|d| !d.active) {
            return LockstepOutcome {
                result: LockstepResult::AllReachedTarget,
                rounds,
                progress: progress(&searches),
            };
        }
        rounds += 1;
        for i in 0..searches.len() {
            let dfs = &mut searches[i];
            if !dfs.active {
                continue;
            }
            match dfs.step(g, live, stop) {
                DfsStep::Advanced => {}
                DfsStep::HitStop => {
                    dfs.active = false;
                    dfs.reached_stop = true;
                }
                DfsStep::Completed => {
                    let source = dfs.source;
                    let trap = dfs.visited.clone();
                    return LockstepOutcome {
                        result: LockstepResult::TrapFound { source, trap },
                        rounds,
                        progress: progress(&searches),
                    };
                }
            }
        }
    }
}

/// Symbolic lockstep forward search: each round takes one `post` per active
/// source, in ascending source order, growing `P := P ∪ (Post(P) ∩ live)`.
/// A search whose set meets `stop` is dropped; the first search whose set
/// stops growing yields that set as a trap.
pub fn lockstep_forward_symbolic(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    sources: &[usize],
    stop: &StateSet,
) -> Result<LockstepOutcome, EngineError> {
    struct Search {
        source: usize,
        reached: StateSet,
        frontier: StateSet,
        active: bool,
        steps: usize,
        reached_stop: bool,
    }
    let mut searches = Vec::new();
    for s in sorted_sources(sources) {
        let start = engine.singleton(s)?;
        let in_stop = stop.contains(s);
        searches.push(Search {
            source: s,
            reached: start.clone(),
            frontier: start,
            active: !in_stop,
            steps: 0,
            reached_stop: in_stop,
        });
    }
    let progress = |searches: &[Search]| {
        searches
            .iter()
            .map(|d| SourceProgress {
                source: d.source,
                units: d.steps,
                reached_stop: d.reached_stop,
            })
            .collect::<Vec<_>>()
    };

    let mut rounds = 0;
    loop {
        if searches.iter().all(|d| !d.active) {
            return Ok(LockstepOutcome {
                result: LockstepResult::AllReachedTarget,
                rounds,
                progress: progress(&searches),
            });
        }
        rounds += 1;
        for i in 0..searches.len() {
            if !searches[i].active {
                continue;
            }
            let search = &mut searches[i];
            let mut layer = engine.post(&search.frontier)?;
            search.steps += 1;
            layer.intersect_with(live);
            layer.minus_with(&search.reached);
            if layer.is_empty() {
                let (source, trap) = (search.source, search.reached.clone());
                return Ok(LockstepOutcome {
                    result: LockstepResult::TrapFound { source, trap },
                    rounds,
                    progress: progress(&searches),
                });
            }
            search.reached.union_with(&layer);
            if layer.intersects(stop) {
                search.active = false;
                search.reached_stop = true;
            }
            search.frontier = layer;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{chain, m1};
    use crate::model::TargetSet;

    /// Attractor straight from the inductive definition: repeatedly scan all
    /// live states until nothing joins.
    fn attr_by_definition(g: &MdpGraph, live: &StateSet, u: &StateSet, random: bool) -> StateSet {
        let mut x = u.clone();
        loop {
            let mut grown = false;
            let outside: Vec<usize> = live.iter().filter(|&s| !x.contains(s)).collect();
            for s in outside {
                let live_succ: Vec<usize> = g
                    .succ(s)
                    .iter()
                    .copied()
                    .filter(|&v| live.contains(v))
                    .collect();
                let some = live_succ.iter().any(|&v| x.contains(v));
                let all = live_succ.iter().all(|&v| x.contains(v));
                let controller = g.is_player1(s) != random;
                if (controller && some) || (!controller && all) {
                    x.insert(s);
                    grown = true;
                }
            }
            if !grown {
                return x;
            }
        }
    }

    fn set(n: usize, ids: &[usize]) -> StateSet {
        StateSet::from_ids(n, ids.iter().copied())
    }

    #[test]
    fn backward_reach_step_counts() {
        let g = chain(5, true, TargetSet::new([4]));
        let mut e = SymbolicEngine::new(&g);
        let live = StateSet::full(5);
        let y = reach_backward(&mut e, &live, &set(5, &[4])).unwrap();
        assert_eq!(y, live);
        assert_eq!(e.ledger().pre_steps, 5);

        e.reset_ledger();
        assert_eq!(reach_backward(&mut e, &live, &live).unwrap(), live);
        assert_eq!(e.ledger().pre_steps, 1);
    }

    #[test]
    fn m1_fixpoints() {
        let g = m1();
        let mut e = SymbolicEngine::new(&g);
        let all = StateSet::full(4);
        // 1 reaches 2 through 0.
        assert_eq!(
            reach_backward(&mut e, &all, &set(4, &[2]))
                .unwrap()
                .to_vec(),
            vec![0, 1, 2]
        );
        assert_eq!(
            reach_backward_explicit(g.digraph(), &all, &set(4, &[2])).to_vec(),
            vec![0, 1, 2]
        );
        assert_eq!(
            attr_random(&mut e, &all, &set(4, &[3])).unwrap().to_vec(),
            vec![1, 3]
        );
        assert_eq!(
            attr_player1(&mut e, &all, &set(4, &[2])).unwrap().to_vec(),
            vec![0, 2]
        );
        assert_eq!(
            attr_player1(&mut e, &all, &set(4, &[3])).unwrap().to_vec(),
            vec![3]
        );
        assert!(attr_random(&mut e, &all, &StateSet::empty(4))
            .unwrap()
            .is_empty());
        assert_eq!(attr_random(&mut e, &all, &all).unwrap(), all);
        assert_eq!(
            attr_random_explicit(&g, &all, &set(4, &[3])).to_vec(),
            vec![1, 3]
        );
        assert_eq!(
            attr_player1_explicit(&g, &all, &set(4, &[3])).to_vec(),
            vec![3]
        );
        for u in [vec![], vec![0], vec![3], vec![1, 2]] {
            let u = set(4, &u);
            assert_eq!(
                attr_random_explicit(&g, &all, &u),
                attr_by_definition(&g, &all, &u, true)
            );
            assert_eq!(
                attr_player1_explicit(&g, &all, &u),
                attr_by_definition(&g, &all, &u, false)
            );
        }
    }

    #[test]
    fn explicit_lockstep_on_m1() {
        let g = m1();
        let all = StateSet::full(4);
        let stop = set(4, &[2]);
        let out = lockstep_dfs_explicit(g.digraph(), &all, &[2], &stop);
        assert_eq!(out.result, LockstepResult::AllReachedTarget);
        assert_eq!(out.rounds, 0);
        let out = lockstep_dfs_explicit(g.digraph(), &all, &[3], &stop);
        assert_eq!(
            out.result,
            LockstepResult::TrapFound {
                source: 3,
                trap: set(4, &[3])
            }
        );
        let out = lockstep_dfs_explicit(g.digraph(), &all, &[0], &stop);
        assert_eq!(out.result, LockstepResult::AllReachedTarget);
    }

    #[test]
    fn symbolic_lockstep_on_m1() {
        let g = m1();
        let all = StateSet::full(4);
        let stop = set(4, &[2]);
        let mut e = SymbolicEngine::new(&g);
        let out = lockstep_forward_symbolic(&mut e, &all, &[2], &stop).unwrap();
        assert_eq!(out.result, LockstepResult::AllReachedTarget);
        assert_eq!(e.ledger().post_steps, 0);
        let out = lockstep_forward_symbolic(&mut e, &all, &[3], &stop).unwrap();
        assert_eq!(
            out.result,
            LockstepResult::TrapFound {
                source: 3,
                trap: set(4, &[3])
            }
        );
        assert_eq!(e.ledger().post_steps, 1);
    }

    #[test]
    fn lockstep_returns_the_small_trap() {
        // 0 -> 1 -> 2 -> 3 -> 4 -> 4 and a separate trap 5 <-> 6; 0 also reaches 5.
        let d = Digraph::from_edges(
            7,
            [
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 4),
                (0, 5),
                (5, 6),
                (6, 5),
            ],
        );
        let g = MdpGraph::from_digraph(d, TargetSet::default()).unwrap();
        let all = StateSet::full(7);
        let stop = StateSet::empty(7);
        let mut e = SymbolicEngine::new(&g);
        let sym = lockstep_forward_symbolic(&mut e, &all, &[0, 5], &stop).unwrap();
        let exp = lockstep_dfs_explicit(g.digraph(), &all, &[0, 5], &stop);
        let small = set(7, &[5, 6]);
        assert_eq!(
            sym.result,
            LockstepResult::TrapFound {
                source: 5,
                trap: small.clone()
            }
        );
        assert_eq!(
            exp.result,
            LockstepResult::TrapFound {
                source: 5,
                trap: small
            }
        );
    }
}
