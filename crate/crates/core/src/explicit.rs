//! Explicit-graph almost-sure Büchi solvers: the classical iteration,
//! ImprAlgo, WinLose and ImprWinLose.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::model::{MdpGraph, MemorylessStrategy};
use crate::reach::{
    attr_player1_explicit, attr_random_explicit, extend_attractor_explicit, lockstep_dfs_explicit,
    reach_backward_explicit, LockstepResult,
};
use crate::scc::{scc_explicit, scc_explicit_in};
use crate::set::StateSet;
use crate::trace::{sqrt_threshold, Case, IterationRecord, Verdict, VerdictStream};

/// The almost-sure winning set with a pure memoryless witness strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningSet {
    pub states: StateSet,
    pub strategy: MemorylessStrategy,
}

impl WinningSet {
    /// Attaches the shortest-path witness to `states`, which must be the
    /// winning set of `g`.
    pub fn with_witness(g: &MdpGraph, states: StateSet) -> Self {
        let n = g.n();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &t in g.target().ids() {
            if states.contains(t) {
                dist[t] = 0;
                queue.push_back(t);
            }
        }
        while let Some(t) = queue.pop_front() {
            for &s in g.pred(t) {
                if states.contains(s) && dist[s] == usize::MAX {
                    dist[s] = dist[t] + 1;
                    queue.push_back(s);
                }
            }
        }
        let mut strategy = MemorylessStrategy::new(n);
        for s in states.iter().filter(|&s| g.is_player1(s)) {
            let inside = g.succ(s).iter().copied().filter(|&t| states.contains(t));
            let pick = if dist[s] == 0 {
                inside.min()
            } else {
                inside
                    .filter(|&t| dist[t].saturating_add(1) == dist[s])
                    .min()
            };
            if let Some(t) = pick {
                strategy.set(s, t);
            }
        }
        WinningSet { states, strategy }
    }

    /// Checks the witness: player-1 choices stay inside the set, no random
    /// edge leaves it, and under the strategy every member reaches the target.
    pub fn check_witness(&self, g: &MdpGraph) -> bool {
        let w = &self.states;
        if !self.strategy.is_consistent_with(g) {
            return false;
        }
        for s in w.iter() {
            if g.is_player1(s) {
                match self.strategy.choice(s) {
                    Some(t) if w.contains(t) => {}
                    _ => return false,
                }
            } else if g.succ(s).iter().any(|&t| !w.contains(t)) {
                return false;
            }
        }
        let mut reached = StateSet::empty(g.n());
        let mut queue: Vec<usize> = g
            .target()
            .ids()
            .iter()
            .copied()
            .filter(|&t| w.contains(t))
            .collect();
        for &t in &queue {
            reached.insert(t);
        }
        while let Some(t) = queue.pop() {
            for &s in g.pred(t) {
                if !w.contains(s) || reached.contains(s) {
                    continue;
                }
                let uses_edge = !g.is_player1(s) || self.strategy.choice(s) == Some(t);
                if uses_edge {
                    reached.insert(s);
                    queue.push(s);
                }
            }
        }
        reached == *w
    }
}

/// Repeatedly removes the random attractor of the states that cannot reach
/// the target.
pub fn classical_explicit(g: &MdpGraph) -> WinningSet {
    let target = g.target().to_state_set(g.n());
    let mut live = StateSet::full(g.n());
    loop {
        let y = reach_backward_explicit(g.digraph(), &live, &target.intersect(&live));
        let q = live.minus(&y);
        if q.is_empty() {
            return WinningSet::with_witness(g, live);
        }
        let a = attr_random_explicit(g, &live, &q);
        live.minus_with(&a);
    }
}

/// ImprAlgo: full reachability when the frontier J is large, lockstep DFS
/// from J otherwise.
pub fn impr_algo(g: &MdpGraph) -> WinningSet {
    impr_algo_traced(g).0
}

pub fn impr_algo_traced(g: &MdpGraph) -> (WinningSet, Vec<IterationRecord>) {
    let d = g.digraph();
    let threshold = sqrt_threshold(g.m());
    let target = g.target().to_state_set(g.n());
    let mut live = StateSet::full(g.n());
    let mut lost = StateSet::empty(g.n());
    let mut trace = Vec::new();
    let mut first = true;
    loop {
        let frontier = lost.len();
        let full = first || frontier > threshold;
        first = false;
        let live_target = target.intersect(&live);
        let q = if full {
            let y = reach_backward_explicit(d, &live, &live_target);
            live.minus(&y)
        } else {
            let sources = lost.to_vec();
            match lockstep_dfs_explicit(d, &live, &sources, &live_target).result {
                LockstepResult::TrapFound { trap, .. } => trap,
                LockstepResult::AllReachedTarget => StateSet::empty(g.n()),
            }
        };
        let case = if full { Case::Full } else { Case::Lockstep };
        if q.is_empty() {
            trace.push(IterationRecord {
                case,
                live: live.len(),
                frontier,
                removed: 0,
            });
            return (WinningSet::with_witness(g, live), trace);
        }
        let a = attr_random_explicit(g, &live, &q);
        trace.push(IterationRecord {
            case,
            live: live.len(),
            frontier,
            removed: a.len(),
        });
        live.minus_with(&a);
        if full {
            lost = StateSet::empty(g.n());
        }
        lost.intersect_with(&live);
        for s in a.iter() {
            for &p in g.pred(s) {
                if live.contains(p) {
                    lost.insert(p);
                }
            }
        }
    }
}

struct WinLose<'g> {
    g: &'g MdpGraph,
    target: StateSet,
    w1: StateSet,
    w2: StateSet,
    stream: VerdictStream,
    iteration: usize,
}

impl<'g> WinLose<'g> {
    fn new(g: &'g MdpGraph) -> Self {
        let n = g.n();
        WinLose {
            g,
            target: g.target().to_state_set(n),
            w1: StateSet::empty(n),
            w2: StateSet::empty(n),
            stream: VerdictStream::new(n),
            iteration: 0,
        }
    }

    fn wins(&self, component: &[usize]) -> bool {
        component.iter().any(|&s| {
            self.target.contains(s) || self.g.succ(s).iter().any(|&t| self.w1.contains(t))
        })
    }

    fn record(&mut self, a1: StateSet, a2: StateSet) -> StateSet {
        debug_assert!(!a1.intersects(&a2), "winning and losing attractors overlap");
        self.stream.push(self.iteration, Verdict::Win, &a1);
        self.stream.push(self.iteration, Verdict::Lose, &a2);
        self.iteration += 1;
        self.w1.union_with(&a1);
        self.w2.union_with(&a2);
        a1.union(&a2)
    }

    /// Classifies and removes bottom SCCs of `region` until it is empty.
    fn run_region(&mut self, region: StateSet, improved: bool, threshold: usize) {
        let g = self.g;
        let n = g.n();
        let mut live = region;
        let mut lost = StateSet::empty(n);
        let mut first = true;
        while !live.is_empty() {
            let mut full = !improved || first || lost.len() > threshold;
            first = false;
            let mut wins = StateSet::empty(n);
            let mut loses = StateSet::empty(n);
            if !full {
                match lockstep_dfs_explicit(g.digraph(), &live, &lost.to_vec(), &StateSet::empty(n))
                    .result
                {
                    LockstepResult::TrapFound { trap, .. } => {
                        if self.wins(&trap.to_vec()) {
                            wins = trap;
                        } else {
                            loses = trap;
                        }
                    }
                    // Every bottom SCC holds a frontier state, so this only
                    // happens on an empty frontier; recompute in full.
                    LockstepResult::AllReachedTarget => full = true,
                }
            }
            if full {
                let p = scc_explicit_in(g.digraph(), &live);
                for c in p.bottom_components() {
                    let side = if self.wins(c) { &mut wins } else { &mut loses };
                    for &s in c {
                        side.insert(s);
                    }
                }
            }
            let a1 = attr_player1_explicit(g, &live, &wins);
            let a2 = attr_random_explicit(g, &live, &loses);
            let removed = self.record(a1, a2);
            live.minus_with(&removed);
            if full {
                lost = StateSet::empty(n);
            }
            lost.intersect_with(&live);
            for s in removed.iter() {
                for &p in g.pred(s) {
                    if live.contains(p) {
                        lost.insert(p);
                    }
                }
            }
        }
    }

    /// Runs over the SCC DAG of the input, bottom components first. Each
    /// component first absorbs the attractors of what lies below it, then
    /// runs the loop on what is left with its own threshold.
    fn run_bottom_up(&mut self, improved: bool) {
        let g = self.g;
        let n = g.n();
        let p = scc_explicit(g.digraph());
        let k = p.components.len();
        let mut owner = vec![0; n];
        for (i, c) in p.components.iter().enumerate() {
            for &s in c {
                owner[s] = i;
            }
        }
        let mut below = vec![0usize; k];
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (u, v) in g.digraph().edges() {
            let (cu, cv) = (owner[u], owner[v]);
            if cu != cv {
                below[cu] += 1;
                above[cv].push(cu);
            }
        }
        let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
            .filter(|&i| below[i] == 0)
            .map(|i| Reverse((p.components[i][0], i)))
            .collect();
        let mut done = StateSet::empty(n);
        while let Some(Reverse((_, i))) = ready.pop() {
            let comp = &p.components[i];
            let region = StateSet::from_ids(n, comp.iter().copied());
            let mut scope = done.union(&region);
            let seeds = |side: &StateSet| {
                let mut hit = StateSet::empty(n);
                for &s in comp {
                    for &t in g.succ(s) {
                        if side.contains(t) {
                            hit.insert(t);
                        }
                    }
                }
                hit
            };
            let s1 = seeds(&self.w1);
            let s2 = seeds(&self.w2);
            let mut a1 = extend_attractor_explicit(g, &scope, self.w1.clone(), s1.iter(), true);
            a1.intersect_with(&region);
            let mut a2 = extend_attractor_explicit(g, &scope, self.w2.clone(), s2.iter(), false);
            a2.intersect_with(&region);
            if !a1.is_empty() || !a2.is_empty() {
                let removed = self.record(a1, a2);
                scope.minus_with(&removed);
            }
            let rest = region.intersect(&scope);
            let inner_edges = comp
                .iter()
                .map(|&s| g.succ(s).iter().filter(|&&t| owner[t] == i).count())
                .sum();
            self.run_region(rest, improved, sqrt_threshold(inner_edges));
            done.union_with(&region);
            for &j in &above[i] {
                below[j] -= 1;
                if below[j] == 0 {
                    ready.push(Reverse((p.components[j][0], j)));
                }
            }
        }
    }
}

/// WinLose run bottom-up over the SCC DAG of the input.
pub fn win_lose(g: &MdpGraph) -> VerdictStream {
    let mut w = WinLose::new(g);
    w.run_bottom_up(false);
    w.stream
}

/// WinLose as a single loop over the whole graph.
pub fn win_lose_flat(g: &MdpGraph) -> VerdictStream {
    let mut w = WinLose::new(g);
    w.run_region(StateSet::full(g.n()), false, 0);
    w.stream
}

/// ImprWinLose run bottom-up over the SCC DAG of the input.
pub fn impr_win_lose(g: &MdpGraph) -> VerdictStream {
    let mut w = WinLose::new(g);
    w.run_bottom_up(true);
    w.stream
}

/// ImprWinLose as a single loop with threshold ⌈√m⌉.
pub fn impr_win_lose_flat(g: &MdpGraph) -> VerdictStream {
    let mut w = WinLose::new(g);
    w.run_region(StateSet::full(g.n()), true, sqrt_threshold(g.m()));
    w.stream
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{chain, m1};
    use crate::model::{Digraph, TargetSet};

    type Solver = fn(&MdpGraph) -> StateSet;

    fn solvers() -> Vec<(&'static str, Solver)> {
        vec![
            ("classical", |g| classical_explicit(g).states),
            ("impr", |g| impr_algo(g).states),
            ("win-lose", |g| win_lose(g).winning()),
            ("win-lose-flat", |g| win_lose_flat(g).winning()),
            ("impr-win-lose", |g| impr_win_lose(g).winning()),
            ("impr-win-lose-flat", |g| impr_win_lose_flat(g).winning()),
        ]
    }

    fn check_all(g: &MdpGraph, expected: &[usize]) {
        for (name, solve) in solvers() {
            assert_eq!(solve(g).to_vec(), expected, "{name}");
        }
    }

    #[test]
    fn m1_winning_set() {
        let g = m1();
        check_all(&g, &[0, 2]);
        let w = classical_explicit(&g);
        assert_eq!(w.strategy.choice(0), Some(2));
        assert!(w.check_witness(&g));
    }

    #[test]
    fn trivial_targets() {
        let g = m1();
        let all = g.with_target(TargetSet::all(4)).unwrap();
        check_all(&all, &[0, 1, 2, 3]);
        let (_, trace) = impr_algo_traced(&all);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].case, Case::Full);

        let none = g.with_target(TargetSet::default()).unwrap();
        check_all(&none, &[]);
        for stream in [win_lose(&none), impr_win_lose(&none), win_lose_flat(&none)] {
            assert!(stream.events().iter().all(|e| e.verdict == Verdict::Lose));
            assert!(stream.is_partition());
        }
    }

    #[test]
    fn m1_flat_stream() {
        let s = win_lose_flat(&m1());
        let events: Vec<(Verdict, Vec<usize>)> = s
            .events()
            .iter()
            .map(|e| (e.verdict, e.states.clone()))
            .collect();
        assert_eq!(
            events,
            vec![(Verdict::Win, vec![0, 2]), (Verdict::Lose, vec![1, 3])]
        );
    }

    #[test]
    fn m1_bottom_up_stream() {
        for s in [win_lose(&m1()), impr_win_lose(&m1())] {
            let events: Vec<(Verdict, Vec<usize>)> = s
                .events()
                .iter()
                .map(|e| (e.verdict, e.states.clone()))
                .collect();
            assert_eq!(
                events,
                vec![
                    (Verdict::Win, vec![2]),
                    (Verdict::Lose, vec![3]),
                    (Verdict::Win, vec![0]),
                    (Verdict::Lose, vec![1]),
                ]
            );
            assert!(s.is_partition());
        }
    }

    #[test]
    fn single_self_loop_in_target() {
        let g =
            MdpGraph::from_digraph(Digraph::from_edges(1, [(0, 0)]), TargetSet::new([0])).unwrap();
        let s = win_lose(&g);
        assert_eq!(s.events().len(), 1);
        assert_eq!(s.events()[0].verdict, Verdict::Win);
    }

    #[test]
    fn chain_of_singletons_all_win() {
        for k in 1..=8 {
            let g = chain(k, true, TargetSet::new([k - 1]));
            check_all(&g, &(0..k).collect::<Vec<_>>());
            let g = chain(k, false, TargetSet::new([k - 1]));
            check_all(&g, &(0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn random_choice_can_lose() {
        // 0 random -> {1, 2}; 1 -> 1 in target; 2 -> 2 outside.
        let g =
            MdpGraph::new(3, [], [(0, 1), (0, 2), (1, 1), (2, 2)], TargetSet::new([1])).unwrap();
        check_all(&g, &[1]);
        // Same shape with 0 controlled by player 1 wins from 0.
        let g = MdpGraph::new(
            3,
            [0],
            [(0, 1), (0, 2), (1, 1), (2, 2)],
            TargetSet::new([1]),
        )
        .unwrap();
        check_all(&g, &[0, 1]);
    }
}
