//! Symbolic almost-sure Büchi solvers. Every solver resets the engine's
//! ledger on entry and reports the steps it spent.

use crate::engine::{EngineError, StepLedger, SymbolicEngine};
use crate::model::MdpGraph;
use crate::reach::{
    attr_player1, attr_random, lockstep_forward_symbolic, reach_backward, LockstepResult,
};
use crate::scc::improved_scc_find;
use crate::set::StateSet;
use crate::trace::{sqrt_threshold, Case, IterationRecord, Verdict, VerdictStream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicSolveReport {
    pub winning: StateSet,
    pub ledger: StepLedger,
    pub trace: Vec<IterationRecord>,
}

fn target_in(engine: &SymbolicEngine<'_>, g: &MdpGraph) -> Result<StateSet, EngineError> {
    engine.from_ids(g.target().ids().iter().copied())
}

fn finish(
    engine: &SymbolicEngine<'_>,
    winning: StateSet,
    trace: Vec<IterationRecord>,
) -> SymbolicSolveReport {
    SymbolicSolveReport {
        winning,
        ledger: engine.ledger(),
        trace,
    }
}

/// Classical iteration: remove the random attractor of the states that
/// cannot reach the target until none are left.
pub fn symb_classical(
    engine: &mut SymbolicEngine<'_>,
    g: &MdpGraph,
) -> Result<SymbolicSolveReport, EngineError> {
    engine.reset_ledger();
    let target = target_in(engine, g)?;
    let mut live = engine.full();
    let mut trace = Vec::new();
    loop {
        let y = reach_backward(engine, &live, &target.intersect(&live))?;
        let q = live.minus(&y);
        if q.is_empty() {
            trace.push(IterationRecord {
                case: Case::Full,
                live: live.len(),
                frontier: 0,
                removed: 0,
            });
            return Ok(finish(engine, live, trace));
        }
        let a = attr_random(engine, &live, &q)?;
        trace.push(IterationRecord {
            case: Case::Full,
            live: live.len(),
            frontier: 0,
            removed: a.len(),
        });
        live.minus_with(&a);
    }
}

/// SymbImprAlgo: Case 1 recomputes reachability, Case 2 runs the symbolic
/// lockstep forward search from the frontier J.
pub fn symb_impr_algo(
    engine: &mut SymbolicEngine<'_>,
    g: &MdpGraph,
) -> Result<SymbolicSolveReport, EngineError> {
    solve_impr(engine, g, false)
}

/// SymbImprAlgo with smart dovetailing: Case 2 also grows the set U of
/// states known to reach the target, one `pre` per `post`, and finishes the
/// iteration early when U stops growing.
pub fn smdv_symb_impr_algo(
    engine: &mut SymbolicEngine<'_>,
    g: &MdpGraph,
) -> Result<SymbolicSolveReport, EngineError> {
    solve_impr(engine, g, true)
}

enum Phase2 {
    Trap(StateSet),
    Done,
    /// U reached its fixpoint; it holds exactly the live states reaching T.
    Reaching(StateSet),
}

struct Search {
    reached: StateSet,
    frontier: StateSet,
    active: bool,
}

fn solve_impr(
    engine: &mut SymbolicEngine<'_>,
    g: &MdpGraph,
    dovetail: bool,
) -> Result<SymbolicSolveReport, EngineError> {
    engine.reset_ledger();
    let threshold = sqrt_threshold(g.m());
    let target = target_in(engine, g)?;
    let mut live = engine.full();
    let mut lost = engine.empty();
    let mut frontier = engine.empty();
    // U and its newest layer, kept across consecutive Case-2 iterations.
    let mut reaching: Option<(StateSet, StateSet)> = None;
    let mut trace = Vec::new();
    let mut first = true;
    loop {
        let live_target = target.intersect(&live);
        let sources = if first {
            None
        } else {
            engine.members_at_most(&frontier, threshold)?
        };
        first = false;
        let j_len = sources.as_ref().map_or(frontier.len(), Vec::len);
        let (case, q) = match sources {
            None => {
                reaching = None;
                let y = reach_backward(engine, &live, &live_target)?;
                (Case::Full, live.minus(&y))
            }
            Some(ids) if !dovetail => {
                match lockstep_forward_symbolic(engine, &live, &ids, &live_target)?.result {
                    LockstepResult::TrapFound { trap, .. } => (Case::Lockstep, trap),
                    LockstepResult::AllReachedTarget => (Case::Lockstep, engine.empty()),
                }
            }
            Some(ids) => {
                let (mut u, mut u_front) = match reaching.take() {
                    Some(pair) => pair,
                    None => (live_target.clone(), live_target.clone()),
                };
                match dovetailed(engine, &live, &ids, &mut u, &mut u_front)? {
                    Phase2::Trap(trap) => {
                        reaching = Some((u, u_front));
                        (Case::Lockstep, trap)
                    }
                    Phase2::Done => (Case::Lockstep, engine.empty()),
                    Phase2::Reaching(u) => (Case::Dovetail, live.minus(&u)),
                }
            }
        };
        if q.is_empty() {
            trace.push(IterationRecord {
                case,
                live: live.len(),
                frontier: j_len,
                removed: 0,
            });
            return Ok(finish(engine, live, trace));
        }
        let a = attr_random(engine, &live, &q)?;
        trace.push(IterationRecord {
            case,
            live: live.len(),
            frontier: j_len,
            removed: a.len(),
        });
        live.minus_with(&a);
        if case == Case::Lockstep {
            lost.union_with(&a);
        } else {
            lost = a;
        }
        if let Some((u, _)) = &reaching {
            if u.intersects(&lost) {
                reaching = None;
            }
        }
        frontier = engine.pre(&lost)?;
        frontier.intersect_with(&live);
    }
}

/// Lockstep forward searches from `sources`, each `post` paired with one
/// backward step on `u`.
fn dovetailed(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    sources: &[usize],
    u: &mut StateSet,
    u_front: &mut StateSet,
) -> Result<Phase2, EngineError> {
    let mut searches = Vec::with_capacity(sources.len());
    for &s in sources {
        let start = engine.singleton(s)?;
        let active = !u.contains(s);
        searches.push(Search {
            reached: start.clone(),
            frontier: start,
            active,
        });
    }
    loop {
        if searches.iter().all(|s| !s.active) {
            return Ok(Phase2::Done);
        }
        for search in searches.iter_mut() {
            if !search.active {
                continue;
            }
            if search.reached.intersects(u) {
                search.active = false;
                continue;
            }
            let mut layer = engine.post(&search.frontier)?;
            layer.intersect_with(live);
            layer.minus_with(&search.reached);

            let mut grow = engine.pre(u_front)?;
            grow.intersect_with(live);
            grow.minus_with(u);
            if grow.is_empty() {
                return Ok(Phase2::Reaching(u.clone()));
            }
            u.union_with(&grow);
            *u_front = grow;

            if layer.is_empty() {
                return Ok(Phase2::Trap(search.reached.clone()));
            }
            search.reached.union_with(&layer);
            search.frontier = layer;
            if search.reached.intersects(u) {
                search.active = false;
            }
        }
    }
}

struct Classifier {
    target: StateSet,
    w1: StateSet,
    w2: StateSet,
}

impl Classifier {
    /// `image` is `Post(C)` in the whole graph.
    fn wins(&self, component: &StateSet, image: &StateSet) -> bool {
        component.intersects(&self.target) || image.intersects(&self.w1)
    }
}

/// SymbImprWinLose as a single loop: Case 1 decomposes the live graph with
/// the improved symbolic SCC algorithm, Case 2 looks for one bottom SCC with
/// paired forward/backward searches from the frontier.
pub fn symb_impr_win_lose(
    engine: &mut SymbolicEngine<'_>,
    g: &MdpGraph,
) -> Result<(VerdictStream, SymbolicSolveReport), EngineError> {
    engine.reset_ledger();
    let n = g.n();
    let threshold = sqrt_threshold(g.m());
    let mut c = Classifier {
        target: target_in(engine, g)?,
        w1: engine.empty(),
        w2: engine.empty(),
    };
    let mut stream = VerdictStream::new(n);
    let mut live = engine.full();
    let mut lost = engine.empty();
    let mut frontier = engine.empty();
    let mut trace = Vec::new();
    let mut first = true;
    let mut iteration = 0;
    while !live.is_empty() {
        let sources = if first {
            None
        } else {
            engine.members_at_most(&frontier, threshold)?
        };
        first = false;
        let j_len = sources.as_ref().map_or(frontier.len(), Vec::len);
        let mut wins = engine.empty();
        let mut loses = engine.empty();
        let found = match sources {
            Some(ids) => bottom_scc_search(engine, &live, &ids)?,
            None => None,
        };
        let case = match found {
            Some((scc, image)) => {
                if c.wins(&scc, &image) {
                    wins = scc;
                } else {
                    loses = scc;
                }
                Case::Lockstep
            }
            None => {
                let run = improved_scc_find(engine, g.digraph(), &live)?;
                for comp in &run.partition.components {
                    let comp = engine.from_ids(comp.iter().copied())?;
                    let image = engine.post(&comp)?;
                    if !image.intersect(&live).is_subset(&comp) {
                        continue;
                    }
                    if c.wins(&comp, &image) {
                        wins.union_with(&comp);
                    } else {
                        loses.union_with(&comp);
                    }
                }
                Case::Full
            }
        };
        let a1 = if wins.is_empty() {
            wins
        } else {
            attr_player1(engine, &live, &wins)?
        };
        let a2 = if loses.is_empty() {
            loses
        } else {
            attr_random(engine, &live, &loses)?
        };
        debug_assert!(!a1.intersects(&a2), "winning and losing attractors overlap");
        stream.push(iteration, Verdict::Win, &a1);
        stream.push(iteration, Verdict::Lose, &a2);
        iteration += 1;
        let removed = a1.union(&a2);
        trace.push(IterationRecord {
            case,
            live: live.len(),
            frontier: j_len,
            removed: removed.len(),
        });
        c.w1.union_with(&a1);
        c.w2.union_with(&a2);
        live.minus_with(&removed);
        if case == Case::Lockstep {
            lost.union_with(&removed);
        } else {
            lost = removed;
        }
        if !live.is_empty() {
            frontier = engine.pre(&lost)?;
            frontier.intersect_with(&live);
        }
    }
    let winning = c.w1.clone();
    Ok((stream, finish(engine, winning, trace)))
}

struct SccSearch {
    forward: StateSet,
    forward_front: StateSet,
    /// Union of the raw `post` images taken so far, i.e. `Post(forward)`
    /// once the forward search is stable.
    image: StateSet,
    forward_done: bool,
    backward: StateSet,
    active: bool,
}

/// Round-robin over sources: one `post` on the forward set while it grows,
/// then one `pre` on the backward set inside it. A source whose stable
/// forward set equals its backward set has found a bottom SCC.
fn bottom_scc_search(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    sources: &[usize],
) -> Result<Option<(StateSet, StateSet)>, EngineError> {
    let mut searches = Vec::with_capacity(sources.len());
    for &s in sources {
        let start = engine.singleton(s)?;
        searches.push(SccSearch {
            forward: start.clone(),
            forward_front: start.clone(),
            image: engine.empty(),
            forward_done: false,
            backward: start,
            active: true,
        });
    }
    loop {
        if searches.iter().all(|s| !s.active) {
            return Ok(None);
        }
        for search in searches.iter_mut().filter(|s| s.active) {
            if !search.forward_done {
                let raw = engine.post(&search.forward_front)?;
                search.image.union_with(&raw);
                let mut layer = raw;
                layer.intersect_with(live);
                layer.minus_with(&search.forward);
                if layer.is_empty() {
                    search.forward_done = true;
                } else {
                    search.forward.union_with(&layer);
                    search.forward_front = layer;
                }
            }
            let mut back = engine.pre(&search.backward)?;
            back.intersect_with(&search.forward);
            let grew = !back.is_subset(&search.backward);
            search.backward.union_with(&back);
            if search.forward_done {
                if search.backward == search.forward {
                    debug_assert!(search.image.intersect(live).is_subset(&search.forward));
                    return Ok(Some((search.forward.clone(), search.image.clone())));
                }
                if !grew {
                    search.active = false;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ImageKind;
    use crate::explicit::classical_explicit;
    use crate::model::fixtures::{chain, m1};
    use crate::model::{Digraph, TargetSet};

    type Solver =
        fn(&mut SymbolicEngine<'_>, &MdpGraph) -> Result<SymbolicSolveReport, EngineError>;

    fn solvers() -> [(&'static str, Solver); 4] {
        [
            ("symb-classical", symb_classical),
            ("symb-impr", symb_impr_algo),
            ("smdv", smdv_symb_impr_algo),
            ("symb-impr-win-lose", |e, g| Ok(symb_impr_win_lose(e, g)?.1)),
        ]
    }

    fn check_all(g: &MdpGraph) -> Vec<StepLedger> {
        let expected = classical_explicit(g).states;
        let mut ledgers = Vec::new();
        for (name, solve) in solvers() {
            let mut e = SymbolicEngine::new(g);
            let r = solve(&mut e, g).unwrap();
            assert_eq!(r.winning, expected, "{name}");
            ledgers.push(r.ledger);
        }
        ledgers
    }

    #[test]
    fn m1_all_solvers() {
        let g = m1();
        let first = check_all(&g);
        assert_eq!(first, check_all(&g));
        let mut e = SymbolicEngine::new(&g);
        let (stream, _) = symb_impr_win_lose(&mut e, &g).unwrap();
        assert_eq!(stream.winning().to_vec(), vec![0, 2]);
        assert_eq!(stream.losing().to_vec(), vec![1, 3]);
        assert!(stream.is_partition());
    }

    #[test]
    fn everything_in_target() {
        let g = m1().with_target(TargetSet::all(4)).unwrap();
        check_all(&g);
        let mut e = SymbolicEngine::new(&g);
        e.enable_trace();
        let r = symb_classical(&mut e, &g).unwrap();
        assert_eq!(r.winning, StateSet::full(4));
        assert_eq!(e.trace(), &[ImageKind::Pre]);
        let r = symb_impr_algo(&mut e, &g).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(e.trace(), &[ImageKind::Pre]);
    }

    #[test]
    fn long_chain_step_count() {
        let g = chain(100, false, TargetSet::new([99]));
        let mut e = SymbolicEngine::new(&g);
        let r = symb_classical(&mut e, &g).unwrap();
        assert_eq!(r.winning, StateSet::full(100));
        assert_eq!(r.ledger.pre_steps, 100);
        assert_eq!(r.ledger.image_steps(), 100);
    }

    #[test]
    fn cycle_is_one_win_event() {
        let d = Digraph::from_edges(5, (0..5).map(|i| (i, (i + 1) % 5)));
        let g = MdpGraph::from_digraph(d, TargetSet::new([3])).unwrap();
        let mut e = SymbolicEngine::new(&g);
        let (stream, _) = symb_impr_win_lose(&mut e, &g).unwrap();
        assert_eq!(stream.events().len(), 1);
        assert_eq!(stream.events()[0].states, (0..5).collect::<Vec<_>>());
    }

    /// Target 0 and a trap 1 with a random state 2 leaning on both. Removing
    /// 2 strands a `d`-cycle of player-1 states and leaves `k` player-1
    /// sources whose remaining route to the target is a line of length `len`.
    fn stranded_cycle(k: usize, len: usize, d: usize) -> MdpGraph {
        let mut edges = vec![(0, 0), (1, 1), (2, 0), (2, 1)];
        let mut player1 = vec![3];
        edges.push((3, 2));
        for j in 0..d {
            edges.push((3 + j, 3 + (j + 1) % d));
        }
        let mut next = 3 + d;
        for _ in 0..k {
            let s = next;
            player1.push(s);
            edges.push((s, 2));
            for step in 0..len {
                edges.push((s + step, s + step + 1));
            }
            edges.push((s + len, 0));
            next += len + 1;
        }
        MdpGraph::new(next, player1, edges, TargetSet::new([0])).unwrap()
    }

    #[test]
    fn lockstep_can_cost_more_than_classical() {
        let g = stranded_cycle(4, 20, 20);
        let mut e = SymbolicEngine::new(&g);
        let classical = symb_classical(&mut e, &g).unwrap();
        let impr = symb_impr_algo(&mut e, &g).unwrap();
        let smdv = smdv_symb_impr_algo(&mut e, &g).unwrap();
        assert_eq!(impr.winning, classical.winning);
        assert_eq!(smdv.winning, classical.winning);
        assert!(impr.ledger.image_steps() > classical.ledger.image_steps());
        let bound = 2 * impr
            .ledger
            .image_steps()
            .min(classical.ledger.image_steps())
            + 3 * g.m() as u64;
        assert!(smdv.ledger.image_steps() <= bound);
    }
}
