use std::collections::BTreeSet;

use buchi_core::explicit::{
    classical_explicit, impr_algo, impr_algo_traced, impr_win_lose, impr_win_lose_flat, win_lose,
    win_lose_flat,
};
use buchi_core::reach::{
    attr_player1, attr_player1_explicit, attr_random, attr_random_explicit, lockstep_dfs_explicit,
    lockstep_forward_symbolic, reach_backward, reach_backward_explicit, reach_forward,
    reach_forward_explicit, LockstepResult,
};
use buchi_core::scc::{
    decompose, improved_skel_fwd, scc_explicit, scc_explicit_in, skel_fwd, SccVariant,
};
use buchi_core::symbolic::{
    smdv_symb_impr_algo, symb_classical, symb_impr_algo, symb_impr_win_lose,
};
use buchi_core::trace::IterationRecord;
use buchi_core::CardinalityVerdict;
use buchi_core::{
    parse_mdp, serialize_mdp, Digraph, MdpGraph, StateSet, SymbolicEngine, TargetSet,
};
use proptest::prelude::*;

/// Random MDP with up to 24 states; sinks get a self-loop.
fn mdp() -> impl Strategy<Value = MdpGraph> {
    (1usize..24).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec((0..n, 0..n), 0..4 * n),
            proptest::collection::vec(0..n, 0..=n / 3 + 1),
        )
            .prop_map(|(n, owners, mut edges, targets)| {
                let mut has_out = vec![false; n];
                edges.sort_unstable();
                edges.dedup();
                for &(u, _) in &edges {
                    has_out[u] = true;
                }
                edges.extend((0..n).filter(|&s| !has_out[s]).map(|s| (s, s)));
                let p1 = (0..n).filter(|&s| owners[s]);
                MdpGraph::new(n, p1, edges, TargetSet::new(targets)).unwrap()
            })
    })
}

fn digraph() -> impl Strategy<Value = Digraph> {
    (1usize..40).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n)
            .prop_map(move |edges| Digraph::from_edges(n, edges))
    })
}

fn subset(n: usize) -> impl Strategy<Value = StateSet> {
    proptest::collection::vec(any::<bool>(), n).prop_map(|mask| StateSet::from_mask(&mask))
}

fn mdp_with_sets() -> impl Strategy<Value = (MdpGraph, StateSet, StateSet)> {
    mdp().prop_flat_map(|g| {
        let n = g.n();
        (Just(g), subset(n), subset(n))
    })
}

/// Attractor by its inductive definition, one state at a time.
fn attractor_oracle(g: &MdpGraph, live: &StateSet, u: &StateSet, player1: bool) -> StateSet {
    let mut x = u.intersect(live);
    loop {
        let add: Vec<usize> = live
            .iter()
            .filter(|&s| !x.contains(s))
            .filter(|&s| {
                let succ: Vec<usize> = g
                    .succ(s)
                    .iter()
                    .copied()
                    .filter(|&t| live.contains(t))
                    .collect();
                let some = succ.iter().any(|&t| x.contains(t));
                let all = !succ.is_empty() && succ.iter().all(|&t| x.contains(t));
                if g.is_player1(s) == player1 {
                    some
                } else {
                    all
                }
            })
            .collect();
        if add.is_empty() {
            return x;
        }
        for s in add {
            x.insert(s);
        }
    }
}

/// Each iteration starts from what the previous one left, and only the last
/// may remove nothing.
fn monotone(trace: &[IterationRecord]) -> bool {
    trace
        .windows(2)
        .all(|w| w[0].removed > 0 && w[1].live == w[0].live - w[0].removed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn set_algebra_matches_btreeset(n in 1usize..200, a in proptest::collection::vec(any::<usize>(), 0..50),
                                    b in proptest::collection::vec(any::<usize>(), 0..50)) {
        let a: BTreeSet<usize> = a.into_iter().map(|x| x % n).collect();
        let b: BTreeSet<usize> = b.into_iter().map(|x| x % n).collect();
        let (sa, sb) = (StateSet::from_ids(n, a.iter().copied()), StateSet::from_ids(n, b.iter().copied()));
        prop_assert_eq!(sa.union(&sb).to_vec(), a.union(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.intersect(&sb).to_vec(), a.intersection(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.minus(&sb).to_vec(), a.difference(&b).copied().collect::<Vec<_>>());
        prop_assert_eq!(sa.complement().len(), n - a.len());
        prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        prop_assert_eq!(sa.first(), a.first().copied());
    }

    #[test]
    fn instance_text_round_trips(g in mdp()) {
        prop_assert_eq!(parse_mdp(&serialize_mdp(&g)).unwrap(), g);
    }

    #[test]
    fn attractors_match_definition((g, live, u) in mdp_with_sets()) {
        let mut engine = SymbolicEngine::new(&g);
        let r = attr_random(&mut engine, &live, &u).unwrap();
        let p = attr_player1(&mut engine, &live, &u).unwrap();
        prop_assert_eq!(&r, &attractor_oracle(&g, &live, &u, false));
        prop_assert_eq!(&p, &attractor_oracle(&g, &live, &u, true));
        prop_assert_eq!(&r, &attr_random_explicit(&g, &live, &u));
        prop_assert_eq!(&p, &attr_player1_explicit(&g, &live, &u));
        prop_assert_eq!(&attr_random(&mut engine, &live, &r).unwrap(), &r);
        prop_assert_eq!(&attr_player1(&mut engine, &live, &p).unwrap(), &p);
        prop_assert!(u.intersect(&live).is_subset(&r) && r.is_subset(&live));
    }

    #[test]
    fn reachability_is_closed((g, live, t) in mdp_with_sets()) {
        let mut engine = SymbolicEngine::new(&g);
        let back = reach_backward(&mut engine, &live, &t).unwrap();
        prop_assert_eq!(&back, &reach_backward_explicit(g.digraph(), &live, &t));
        prop_assert!(t.intersect(&live).is_subset(&back) && back.is_subset(&live));
        let pre = engine.pre(&back).unwrap().intersect(&live);
        prop_assert!(pre.is_subset(&back));

        let fwd = reach_forward(&mut engine, &live, &t).unwrap();
        prop_assert_eq!(&fwd, &reach_forward_explicit(g.digraph(), &live, &t));
        let post = engine.post(&fwd).unwrap().intersect(&live);
        prop_assert!(post.is_subset(&fwd));
    }

    #[test]
    fn lockstep_traps_are_closed((g, live, stop) in mdp_with_sets(), picks in proptest::collection::vec(any::<usize>(), 1..6)) {
        let inside: Vec<usize> = live.iter().collect();
        prop_assume!(!inside.is_empty());
        let mut sources: Vec<usize> = picks.iter().map(|p| inside[p % inside.len()]).collect();
        sources.sort_unstable();
        sources.dedup();
        let mut engine = SymbolicEngine::new(&g);
        let outcomes = [
            lockstep_dfs_explicit(g.digraph(), &live, &sources, &stop),
            lockstep_forward_symbolic(&mut engine, &live, &sources, &stop).unwrap(),
        ];
        for out in outcomes {
            match out.result {
                LockstepResult::TrapFound { source, trap } => {
                    prop_assert!(sources.contains(&source) && trap.contains(source));
                    prop_assert!(!trap.intersects(&stop));
                    prop_assert!(trap.is_subset(&live));
                    let post = engine.post(&trap).unwrap().intersect(&live);
                    prop_assert!(post.is_subset(&trap));
                }
                LockstepResult::AllReachedTarget => {
                    let hit = reach_backward_explicit(g.digraph(), &live, &stop);
                    prop_assert!(sources.iter().all(|&s| hit.contains(s)));
                }
            }
        }
    }

    #[test]
    fn solvers_agree_and_streams_are_sound(g in mdp()) {
        let reference = classical_explicit(&g);
        prop_assert!(reference.check_witness(&g));
        let w = &reference.states;
        prop_assert_eq!(&impr_algo(&g).states, w);
        let mut engine = SymbolicEngine::new(&g);
        prop_assert_eq!(&symb_classical(&mut engine, &g).unwrap().winning, w);
        prop_assert_eq!(&symb_impr_algo(&mut engine, &g).unwrap().winning, w);
        prop_assert_eq!(&smdv_symb_impr_algo(&mut engine, &g).unwrap().winning, w);
        let (symb_stream, report) = symb_impr_win_lose(&mut engine, &g).unwrap();
        prop_assert_eq!(&report.winning, w);
        for s in [win_lose(&g), win_lose_flat(&g), impr_win_lose(&g), impr_win_lose_flat(&g), symb_stream] {
            prop_assert_eq!(s.first_unsound_event(w), None);
            prop_assert!(s.is_partition());
            prop_assert_eq!(&s.winning(), w);
        }
    }

    #[test]
    fn removal_is_monotone(g in mdp()) {
        prop_assert!(monotone(&impr_algo_traced(&g).1));
        let mut engine = SymbolicEngine::new(&g);
        prop_assert!(monotone(&symb_classical(&mut engine, &g).unwrap().trace));
        prop_assert!(monotone(&symb_impr_algo(&mut engine, &g).unwrap().trace));
        prop_assert!(monotone(&smdv_symb_impr_algo(&mut engine, &g).unwrap().trace));
    }

    #[test]
    fn symbolic_partitions_match_tarjan(d in digraph(), mask in proptest::collection::vec(any::<bool>(), 40)) {
        let live = StateSet::from_mask(&mask[..d.n()]);
        let full = StateSet::full(d.n());
        let truth = scc_explicit(&d);
        let mut engine = SymbolicEngine::for_digraph(&d);
        let mut steps = [0u64; 2];
        for (i, variant) in [SccVariant::Prior, SccVariant::Improved].into_iter().enumerate() {
            engine.reset_ledger();
            let run = decompose(&mut engine, &d, &full, variant).unwrap();
            prop_assert!(run.partition.same_partition(&truth));
            steps[i] = engine.ledger().image_steps();
            let cap = if variant == SccVariant::Improved { 1 } else { 2 };
            prop_assert!(run.max_spine_insertions() <= cap);
            let sub = decompose(&mut engine, &d, &live, variant).unwrap();
            prop_assert!(sub.partition.same_partition(&scc_explicit_in(&d, &live)));
        }
        prop_assert!(steps[1] <= steps[0]);
    }

    #[test]
    fn digraph_degrees_and_transpose(d in digraph()) {
        prop_assert_eq!(d.transpose().transpose(), d.clone());
        let out: usize = (0..d.n()).map(|s| d.succ(s).len()).sum();
        let inc: usize = (0..d.n()).map(|s| d.pred(s).len()).sum();
        prop_assert_eq!((out, inc), (d.m(), d.m()));
    }

    #[test]
    fn images_match_adjacency_scan((g, x, y) in mdp_with_sets()) {
        let n = g.n();
        let mut engine = SymbolicEngine::new(&g);
        let into = |s: usize, x: &StateSet| g.succ(s).iter().any(|&t| x.contains(t));
        let all_into = |s: usize, x: &StateSet| g.succ(s).iter().all(|&t| x.contains(t));
        let pre = StateSet::from_ids(n, (0..n).filter(|&s| into(s, &x)));
        let post = StateSet::from_ids(n, x.iter().flat_map(|s| g.succ(s).iter().copied()));
        let cpre = StateSet::from_ids(n, (0..n).filter(|&s| if g.is_player1(s) { all_into(s, &x) } else { into(s, &x) }));
        let cpre1 = StateSet::from_ids(n, (0..n).filter(|&s| if g.is_player1(s) { into(s, &x) } else { all_into(s, &x) }));
        prop_assert_eq!(&engine.pre(&x).unwrap(), &pre);
        prop_assert_eq!(&engine.post(&x).unwrap(), &post);
        prop_assert_eq!(&engine.cpre(&x).unwrap(), &cpre);
        prop_assert_eq!(&engine.cpre1(&x).unwrap(), &cpre1);

        let random = StateSet::from_ids(n, (0..n).filter(|&s| !g.is_player1(s)));
        prop_assert_eq!(cpre.intersect(&random), pre.intersect(&random));
        prop_assert_eq!(cpre1.intersect(&random.complement()), pre.intersect(&random.complement()));

        let big = x.union(&y);
        prop_assert!(pre.is_subset(&engine.pre(&big).unwrap()));
        prop_assert!(post.is_subset(&engine.post(&big).unwrap()));
        prop_assert!(cpre.is_subset(&engine.cpre(&big).unwrap()));
        prop_assert!(cpre1.is_subset(&engine.cpre1(&big).unwrap()));

        let k = y.len();
        let expected = if x.len() <= k { CardinalityVerdict::Exact(x.len()) } else { CardinalityVerdict::MoreThan(k) };
        engine.reset_ledger();
        prop_assert_eq!(engine.count_at_most(&x, k).unwrap(), expected);
        prop_assert_eq!(engine.ledger().cardinality_ops, (k + 1).min(x.len()) as u64);
        prop_assert_eq!(engine.ledger().image_steps(), 0);
    }

    #[test]
    fn ledger_matches_trace_log(g in mdp()) {
        let mut engine = SymbolicEngine::new(&g);
        engine.enable_trace();
        let ledger = symb_classical(&mut engine, &g).unwrap().ledger;
        prop_assert_eq!(ledger.image_steps(), engine.trace().len() as u64);
        let ledger = symb_impr_algo(&mut engine, &g).unwrap().ledger;
        prop_assert_eq!(ledger.image_steps(), engine.trace().len() as u64);
        let ledger = smdv_symb_impr_algo(&mut engine, &g).unwrap().ledger;
        prop_assert_eq!(ledger.image_steps(), engine.trace().len() as u64);
        let ledger = symb_impr_win_lose(&mut engine, &g).unwrap().1.ledger;
        prop_assert_eq!(ledger.image_steps(), engine.trace().len() as u64);
        engine.reset_ledger();
        let live = engine.full();
        decompose(&mut engine, g.digraph(), &live, SccVariant::Improved).unwrap();
        prop_assert_eq!(engine.ledger().image_steps(), engine.trace().len() as u64);
    }

    #[test]
    fn truncated_skeleton_omits_only_end_scc(d in digraph(), pick in any::<usize>()) {
        let n = d.n();
        let full = StateSet::full(n);
        let mut engine = SymbolicEngine::for_digraph(&d);
        let r = pick % n;
        let first = skel_fwd(&mut engine, &full, r).unwrap();
        let reach_r = scc_explicit_in(&d, &first.fw_set);
        let scc_r = reach_r.components.iter().find(|c| c.contains(&r)).unwrap();
        let scc_r = StateSet::from_ids(n, scc_r.iter().copied());
        prop_assume!(!scc_r.contains(first.new_state));

        // The frame the recursion builds for FW(r) minus SCC(r).
        let inner = first.fw_set.minus(&scc_r);
        let spine = first.new_set.minus(&scc_r);
        let end = first.new_state;
        let whole = skel_fwd(&mut engine, &inner, end).unwrap();
        let cut = improved_skel_fwd(&mut engine, &inner, &spine, end).unwrap();
        prop_assert_eq!(&whole.fw_set, &cut.fw_set);
        prop_assert!(cut.new_set.is_subset(&whole.new_set));
        let parts = scc_explicit_in(&d, &inner);
        let scc_end = parts.components.iter().find(|c| c.contains(&end)).unwrap();
        let scc_end = StateSet::from_ids(n, scc_end.iter().copied());
        let omitted = spine.intersect(&cut.fw_set).minus(&cut.new_set);
        prop_assert!(omitted.is_subset(&scc_end));
    }
}
