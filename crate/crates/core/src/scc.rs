//! Strongly connected components: an explicit iterative Tarjan oracle and
//! the two spine-set based symbolic decompositions (the prior `SCCFind` and
//! its improved variant that stops skeleton construction at the old spine).

use std::collections::VecDeque;

use serde::Serialize;

use crate::engine::{EngineError, SymbolicEngine};
use crate::model::Digraph;
use crate::set::StateSet;

/// Default size above which [`scc_diameters`] skips a component.
pub const DIAMETER_AUDIT_CAP: usize = 2000;

/// A decomposition of a (sub)graph into SCCs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SccPartition {
    /// Components in discovery order, each sorted ascending.
    pub components: Vec<Vec<usize>>,
    /// Whether no edge leaves the component (within the decomposed subgraph).
    pub bottom: Vec<bool>,
    /// Per-component diameter, filled in by [`SccPartition::with_diameters`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameters: Option<Vec<Option<usize>>>,
}

impl SccPartition {
    fn from_components(g: &Digraph, live: &StateSet, components: Vec<Vec<usize>>) -> Self {
        let mut owner = vec![usize::MAX; g.n()];
        for (i, c) in components.iter().enumerate() {
            for &s in c {
                owner[s] = i;
            }
        }
        let bottom = components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.iter().all(|&s| {
                    g.succ(s)
                        .iter()
                        .all(|&t| !live.contains(t) || owner[t] == i)
                })
            })
            .collect();
        SccPartition {
            components,
            bottom,
            diameters: None,
        }
    }

    /// N: the number of components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Components sorted by their smallest member.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut c = self.components.clone();
        c.sort_unstable_by_key(|c| c[0]);
        c
    }

    /// Equality as unordered partitions.
    pub fn same_partition(&self, other: &SccPartition) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn bottom_components(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.components
            .iter()
            .zip(&self.bottom)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c.as_slice())
    }

    pub fn with_diameters(mut self, g: &Digraph, cap: usize) -> Self {
        self.diameters = Some(scc_diameters(&self, g, cap));
        self
    }

    /// D*: the sum of component diameters, if all of them were computed.
    pub fn diameter_sum(&self) -> Option<usize> {
        self.diameters.as_ref()?.iter().copied().sum()
    }
}

/// Iterative Tarjan over the whole graph.
pub fn scc_explicit(g: &Digraph) -> SccPartition {
    scc_explicit_in(g, &StateSet::full(g.n()))
}

/// Iterative Tarjan over the subgraph induced by `live`. Components come out
/// ordered by smallest member.
pub fn scc_explicit_in(g: &Digraph, live: &StateSet) -> SccPartition {
    const UNVISITED: usize = usize::MAX;
    let n = g.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut components = Vec::new();
    let mut next = 0;

    for root in live.iter() {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            let succ = g.succ(v);
            if frame.1 < succ.len() {
                let w = succ[frame.1];
                frame.1 += 1;
                if !live.contains(w) {
                    continue;
                }
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components.sort_unstable_by_key(|c| c[0]);
    SccPartition::from_components(g, live, components)
}

/// Per-component diameter by BFS from every member inside the component.
/// Components larger than `cap` get `None`.
pub fn scc_diameters(p: &SccPartition, g: &Digraph, cap: usize) -> Vec<Option<usize>> {
    let mut owner = vec![usize::MAX; g.n()];
    for (i, c) in p.components.iter().enumerate() {
        for &s in c {
            owner[s] = i;
        }
    }
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    p.components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.len() > cap {
                return None;
            }
            let mut diameter = 0;
            for &src in c {
                for &s in c {
                    dist[s] = usize::MAX;
                }
                dist[src] = 0;
                queue.push_back(src);
                while let Some(u) = queue.pop_front() {
                    diameter = diameter.max(dist[u]);
                    for &v in g.succ(u) {
                        if owner[v] == i && dist[v] == usize::MAX {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
            }
            Some(diameter)
        })
        .collect()
}

/// A set of states forming a chordless path that ends in `end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpineSet {
    pub states: StateSet,
    pub end: usize,
}

impl SpineSet {
    /// Brute-force check that `states` can be ordered into a chordless path
    /// of `g` ending in `end`. Exponential; meant for small sets in tests.
    pub fn is_chordless_path(&self, g: &Digraph) -> bool {
        let members = self.states.to_vec();
        if !self.states.contains(self.end) {
            return false;
        }
        let edge = |a: usize, b: usize| g.succ(a).binary_search(&b).is_ok();
        // Extend the path backwards from `end`.
        fn extend(
            path: &mut Vec<usize>,
            members: &[usize],
            used: &mut Vec<bool>,
            edge: &dyn Fn(usize, usize) -> bool,
        ) -> bool {
            if path.len() == members.len() {
                return true;
            }
            let head = *path.last().unwrap();
            for (i, &m) in members.iter().enumerate() {
                if used[i] || !edge(m, head) {
                    continue;
                }
                // `m` precedes `head`; it must not reach any later state directly.
                let chord = path[..path.len() - 1].iter().any(|&later| edge(m, later));
                if chord {
                    continue;
                }
                used[i] = true;
                path.push(m);
                if extend(path, members, used, edge) {
                    return true;
                }
                path.pop();
                used[i] = false;
            }
            false
        }
        let mut used: Vec<bool> = members.iter().map(|&m| m == self.end).collect();
        let mut path = vec![self.end];
        extend(&mut path, &members, &mut used, &edge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkelFwdResult {
    pub fw_set: StateSet,
    pub new_set: StateSet,
    pub new_state: usize,
    /// `fw_set ∩ Q`; only produced by the improved variant.
    pub p: Option<StateSet>,
}

struct Skeleton {
    result: SkelFwdResult,
    /// States added to `new_set`, in insertion order.
    inserted: Vec<usize>,
    /// Whether the seed pick already belonged to P.
    seed_in_p: bool,
}

fn skeleton(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    q: Option<&StateSet>,
    s: usize,
) -> Result<Skeleton, EngineError> {
    let mut layers = Vec::new();
    let mut fw = engine.empty();
    let mut layer = engine.singleton(s)?;
    while !layer.is_empty() {
        fw.union_with(&layer);
        let mut next = engine.post(&layer)?;
        next.intersect_with(live);
        next.minus_with(&fw);
        layers.push(layer);
        layer = next;
    }
    let p = q.map(|q| fw.intersect(q));

    let deepest = layers.pop().expect("forward search has at least one layer");
    let new_state = deepest.first().expect("layers are non-empty");
    let mut new_set = engine.singleton(new_state)?;
    let mut inserted = vec![new_state];
    let seed_in_p = p.as_ref().is_some_and(|p| p.contains(new_state));
    let mut last = new_state;
    while let Some(layer) = layers.pop() {
        if p.as_ref().is_some_and(|p| p.intersects(&layer)) {
            break;
        }
        // Only the most recent pick has predecessors in the next shallower layer.
        let last_set = engine.singleton(last)?;
        let mut preds = engine.pre(&last_set)?;
        preds.intersect_with(&layer);
        last = preds.first().expect("every layer feeds the next one");
        new_set.insert(last);
        inserted.push(last);
    }
    Ok(Skeleton {
        result: SkelFwdResult {
            fw_set: fw,
            new_set,
            new_state,
            p,
        },
        inserted,
        seed_in_p,
    })
}

/// Forward set of `s` inside `live` together with a skeleton of it.
pub fn skel_fwd(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    s: usize,
) -> Result<SkelFwdResult, EngineError> {
    Ok(skeleton(engine, live, None, s)?.result)
}

/// As [`skel_fwd`], also returning `P = FWSet ∩ q` and stopping the skeleton
/// at the first layer that meets `P`.
pub fn improved_skel_fwd(
    engine: &mut SymbolicEngine<'_>,
    live: &StateSet,
    q: &StateSet,
    s: usize,
) -> Result<SkelFwdResult, EngineError> {
    Ok(skeleton(engine, live, Some(q), s)?.result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SccVariant {
    Prior,
    Improved,
}

/// Outcome of a symbolic decomposition plus spine instrumentation.
#[derive(Debug, Clone)]
pub struct SccRun {
    pub partition: SccPartition,
    /// How often each state was added to a skeleton, not counting seeds
    /// that were already in P.
    pub spine_insertions: Vec<u32>,
    /// Seeds of the improved skeleton that were already in P.
    pub seed_reinsertions: usize,
}

impl SccRun {
    pub fn max_spine_insertions(&self) -> u32 {
        self.spine_insertions.iter().copied().max().unwrap_or(0)
    }
}

struct Frame {
    set: StateSet,
    spine: Vec<usize>,
    end: Option<usize>,
}

/// The prior spine-set decomposition of the subgraph induced by `live`.
pub fn scc_find(
    engine: &mut SymbolicEngine<'_>,
    g: &Digraph,
    live: &StateSet,
) -> Result<SccRun, EngineError> {
    decompose(engine, g, live, SccVariant::Prior)
}

/// The improved decomposition: skeletons stop at the old spine and the
/// backward closure starts from P.
pub fn improved_scc_find(
    engine: &mut SymbolicEngine<'_>,
    g: &Digraph,
    live: &StateSet,
) -> Result<SccRun, EngineError> {
    decompose(engine, g, live, SccVariant::Improved)
}

pub fn decompose(
    engine: &mut SymbolicEngine<'_>,
    g: &Digraph,
    live: &StateSet,
    variant: SccVariant,
) -> Result<SccRun, EngineError> {
    engine.check(live)?;
    let n = engine.universe();
    let mut components = Vec::new();
    let mut spine_insertions = vec![0u32; n];
    let mut seed_reinsertions = 0;
    let mut work = vec![Frame {
        set: live.clone(),
        spine: Vec::new(),
        end: None,
    }];

    while let Some(Frame { set, spine, end }) = work.pop() {
        if set.is_empty() {
            continue;
        }
        let (u, s) = match end {
            Some(s) if !spine.is_empty() => (StateSet::from_ids(n, spine), s),
            _ => (StateSet::empty(n), set.first().expect("non-empty")),
        };
        let sk = match variant {
            SccVariant::Prior => skeleton(engine, &set, None, s)?,
            SccVariant::Improved => skeleton(engine, &set, Some(&u), s)?,
        };
        for (i, &v) in sk.inserted.iter().enumerate() {
            if i == 0 && sk.seed_in_p {
                seed_reinsertions += 1;
            } else {
                spine_insertions[v] += 1;
            }
        }
        let SkelFwdResult {
            fw_set,
            new_set,
            new_state,
            p,
        } = sk.result;

        let mut scc = match p {
            Some(mut p) => {
                p.insert(s);
                p
            }
            None => StateSet::singleton(n, s),
        };
        let mut frontier = scc.clone();
        loop {
            let mut layer = engine.pre(&frontier)?;
            layer.intersect_with(&fw_set);
            layer.minus_with(&scc);
            if layer.is_empty() {
                break;
            }
            scc.union_with(&layer);
            frontier = layer;
        }

        let scc_in_u = scc.intersect(&u);
        let mut u_rest = u;
        u_rest.minus_with(&scc);
        let mut next_end = engine.pre(&scc_in_u)?;
        next_end.intersect_with(&u_rest);
        let next_end = next_end.first();

        let inner_spine = new_set.minus(&scc);
        let inner_end = (!scc.contains(new_state)).then_some(new_state);
        let inner = fw_set.minus(&scc);
        let outer = set.minus(&fw_set);
        components.push(scc.to_vec());

        work.push(Frame {
            set: inner,
            spine: inner_spine.to_vec(),
            end: inner_end,
        });
        work.push(Frame {
            set: outer,
            spine: u_rest.to_vec(),
            end: next_end,
        });
    }
    Ok(SccRun {
        partition: SccPartition::from_components(g, live, components),
        spine_insertions,
        seed_reinsertions,
    })
}
