//! MDP graphs, target sets, memoryless strategies and the line-oriented
//! instance format.
//!
//! ```text
//! states <n>
//! player1 <id> <id> ...        # remaining states are random
//! edge <u> <v> [<prob>]        # prob only on random sources
//! target <id> <id> ...         # may repeat; union taken
//! ```
//!
//! Probabilities are carried through parsing, validation and serialization
//! but none of the solvers look at them: qualitative analysis only depends on
//! the edge relation and the owner partition.

use std::fmt::Write as _;

use thiserror::Error;

use crate::set::StateSet;

/// Tolerance on the sum of a random state's outgoing probabilities.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Player1,
    Random,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("sink state {0}: no outgoing edge")]
    SinkState(usize),
    #[error("transpose mismatch at state {0}")]
    TransposeMismatch(usize),
    #[error("adjacency of state {0} is not strictly sorted")]
    UnsortedAdjacency(usize),
    #[error("edge {from} -> {to} leaves the universe")]
    EdgeOutOfRange { from: usize, to: usize },
    #[error("state {0}: probabilities given on a player-1 state")]
    ProbabilityOnPlayer1(usize),
    #[error("state {state}: {given} probabilities for {edges} edges")]
    ProbabilityArity {
        state: usize,
        given: usize,
        edges: usize,
    },
    #[error("state {state}: non-positive probability {value}")]
    NonPositiveProbability { state: usize, value: f64 },
    #[error("state {state}: probabilities sum {sum}")]
    ProbabilitySum { state: usize, sum: f64 },
    #[error("target state {0} out of range")]
    TargetOutOfRange(usize),
    #[error("owner table has {0} entries")]
    OwnerArity(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge { line: usize, from: usize, to: usize },
    #[error("line {line}: state id {id} out of range (states {n})")]
    OutOfRange { line: usize, id: usize, n: usize },
    #[error("invalid graph: {}", join(.0))]
    Invalid(Vec<ValidationError>),
}

fn join(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Plain directed graph with sorted forward and reverse adjacency.
///
/// Sinks are allowed here; [`MdpGraph`] adds the no-sink requirement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    m: usize,
}

impl Digraph {
    /// Builds a graph from an edge list. Duplicate edges are merged.
    ///
    /// # Panics
    /// If an edge endpoint is `>= n`.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut succ = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge {u} -> {v} outside {n} states");
            succ[u].push(v);
        }
        for list in succ.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Self::from_successors(succ)
    }

    /// Builds a graph from sorted, duplicate-free successor lists.
    pub(crate) fn from_successors(succ: Vec<Vec<usize>>) -> Self {
        let n = succ.len();
        let mut pred = vec![Vec::new(); n];
        let mut m = 0;
        for (u, list) in succ.iter().enumerate() {
            m += list.len();
            for &v in list {
                pred[v].push(u);
            }
        }
        Digraph { succ, pred, m }
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn succ(&self, s: usize) -> &[usize] {
        &self.succ[s]
    }

    pub fn pred(&self, s: usize) -> &[usize] {
        &self.pred[s]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    /// The reversed graph.
    pub fn transpose(&self) -> Digraph {
        Digraph {
            succ: self.pred.clone(),
            pred: self.succ.clone(),
            m: self.m,
        }
    }

    fn structural_errors(&self, out: &mut Vec<ValidationError>) {
        let n = self.n();
        for (u, list) in self.succ.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                out.push(ValidationError::UnsortedAdjacency(u));
            }
            if let Some(&v) = list.iter().find(|&&v| v >= n) {
                out.push(ValidationError::EdgeOutOfRange { from: u, to: v });
            }
        }
        if self.pred.len() != n {
            out.push(ValidationError::TransposeMismatch(n.min(self.pred.len())));
            return;
        }
        let mut expected = vec![Vec::new(); n];
        for (u, list) in self.succ.iter().enumerate() {
            for &v in list.iter().filter(|&&v| v < n) {
                expected[v].push(u);
            }
        }
        for (v, (want, got)) in expected.iter().zip(&self.pred).enumerate() {
            if want != got {
                out.push(ValidationError::TransposeMismatch(v));
            }
        }
    }
}

/// The Büchi target set, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TargetSet(Vec<usize>);

impl TargetSet {
    pub fn new<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        TargetSet(ids)
    }

    pub fn all(n: usize) -> Self {
        TargetSet((0..n).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// # Panics
    /// If a target lies outside `0..n`.
    pub fn to_state_set(&self, n: usize) -> StateSet {
        StateSet::from_ids(n, self.0.iter().copied())
    }
}

/// A pure memoryless strategy: one chosen successor per player-1 state of its
/// domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemorylessStrategy {
    choice: Vec<Option<usize>>,
}

impl MemorylessStrategy {
    pub fn new(n: usize) -> Self {
        MemorylessStrategy {
            choice: vec![None; n],
        }
    }

    pub fn set(&mut self, state: usize, successor: usize) {
        self.choice[state] = Some(successor);
    }

    pub fn choice(&self, state: usize) -> Option<usize> {
        self.choice.get(state).copied().flatten()
    }

    /// Player-1 states with a recorded choice.
    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.map(|_| s))
    }

    /// Checks that every choice is a successor of a player-1 state.
    pub fn is_consistent_with(&self, g: &MdpGraph) -> bool {
        self.choice.len() == g.n()
            && self.choice.iter().enumerate().all(|(s, c)| match c {
                None => true,
                Some(t) => g.is_player1(s) && g.succ(s).binary_search(t).is_ok(),
            })
    }
}

/// An MDP graph `((S, E), (S1, SP), delta)` together with its Büchi target.
///
/// States are dense ids `0..n`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpGraph {
    graph: Digraph,
    player1: Vec<bool>,
    probs: Vec<Option<Vec<f64>>>,
    target: TargetSet,
}

impl MdpGraph {
    /// Builds and validates an MDP without probabilities.
    pub fn new<P, E>(n: usize, player1: P, edges: E, target: TargetSet) -> Result<Self, MdpError>
    where
        P: IntoIterator<Item = usize>,
        E: IntoIterator<Item = (usize, usize)>,
    {
        let mut owner = vec![false; n];
        for s in player1 {
            if s >= n {
                return Err(MdpError::OutOfRange { line: 0, id: s, n });
            }
            owner[s] = true;
        }
        let mut succ = vec![Vec::new(); n];
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(MdpError::OutOfRange { line: 0, id, n });
                }
            }
            succ[u].push(v);
        }
        for (u, list) in succ.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(MdpError::DuplicateEdge {
                    line: 0,
                    from: u,
                    to: w[0],
                });
            }
        }
        let g = MdpGraph {
            graph: Digraph::from_successors(succ),
            player1: owner,
            probs: vec![None; n],
            target,
        };
        g.validate().map_err(MdpError::Invalid)?;
        Ok(g)
    }

    /// Assembles a graph without any checking. Pair with [`MdpGraph::validate`].
    pub fn from_raw_parts(
        succ: Vec<Vec<usize>>,
        pred: Vec<Vec<usize>>,
        player1: Vec<bool>,
        probs: Vec<Option<Vec<f64>>>,
        target: TargetSet,
    ) -> Self {
        let m = succ.iter().map(Vec::len).sum();
        MdpGraph {
            graph: Digraph { succ, pred, m },
            player1,
            probs,
            target,
        }
    }

    /// Reinterprets a digraph as an MDP with only random states.
    pub fn from_digraph(graph: Digraph, target: TargetSet) -> Result<Self, MdpError> {
        let n = graph.n();
        let g = MdpGraph {
            graph,
            player1: vec![false; n],
            probs: vec![None; n],
            target,
        };
        g.validate().map_err(MdpError::Invalid)?;
        Ok(g)
    }

    /// Same graph, different target.
    pub fn with_target(&self, target: TargetSet) -> Result<Self, MdpError> {
        let g = MdpGraph {
            target,
            ..self.clone()
        };
        g.validate().map_err(MdpError::Invalid)?;
        Ok(g)
    }

    /// Same owners and target, new successor lists; probabilities dropped.
    pub(crate) fn with_successors(&self, succ: Vec<Vec<usize>>) -> Self {
        MdpGraph {
            graph: Digraph::from_successors(succ),
            player1: self.player1.clone(),
            probs: vec![None; self.n()],
            target: self.target.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.graph.m()
    }

    pub fn digraph(&self) -> &Digraph {
        &self.graph
    }

    pub fn succ(&self, s: usize) -> &[usize] {
        self.graph.succ(s)
    }

    pub fn pred(&self, s: usize) -> &[usize] {
        self.graph.pred(s)
    }

    #[inline]
    pub fn is_player1(&self, s: usize) -> bool {
        self.player1[s]
    }

    pub fn owner(&self, s: usize) -> Owner {
        if self.player1[s] {
            Owner::Player1
        } else {
            Owner::Random
        }
    }

    pub fn player1_mask(&self) -> &[bool] {
        &self.player1
    }

    pub fn player1_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&s| self.player1[s])
    }

    pub fn probs(&self, s: usize) -> Option<&[f64]> {
        self.probs.get(s).and_then(|p| p.as_deref())
    }

    pub fn target(&self) -> &TargetSet {
        &self.target
    }

    /// Checks every structural invariant, reporting each violation.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let n = self.n();
        let mut errors = Vec::new();
        if self.player1.len() != n {
            errors.push(ValidationError::OwnerArity(self.player1.len()));
        }
        self.graph.structural_errors(&mut errors);
        for s in 0..n {
            if self.graph.succ[s].is_empty() {
                errors.push(ValidationError::SinkState(s));
            }
        }
        for (s, probs) in self.probs.iter().enumerate().take(n) {
            let Some(probs) = probs else { continue };
            if self.player1.get(s).copied().unwrap_or(false) {
                errors.push(ValidationError::ProbabilityOnPlayer1(s));
                continue;
            }
            let edges = self.graph.succ[s].len();
            if probs.len() != edges {
                errors.push(ValidationError::ProbabilityArity {
                    state: s,
                    given: probs.len(),
                    edges,
                });
                continue;
            }
            if let Some(&value) = probs.iter().find(|&&p| p.is_nan() || p <= 0.0) {
                errors.push(ValidationError::NonPositiveProbability { state: s, value });
                continue;
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                errors.push(ValidationError::ProbabilitySum { state: s, sum });
            }
        }
        if let Some(&t) = self.target.ids().iter().find(|&&t| t >= n) {
            errors.push(ValidationError::TargetOutOfRange(t));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

fn parse_unchecked(text: &str) -> Result<MdpGraph, MdpError> {
    let mut n: Option<usize> = None;
    let mut player1 = Vec::new();
    let mut succ: Vec<Vec<(usize, Option<f64>, usize)>> = Vec::new();
    let mut targets = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(directive) = tokens.next() else {
            continue;
        };
        let syntax = |msg: String| MdpError::Syntax { line, msg };

        if directive == "states" {
            if n.is_some() {
                return Err(syntax("repeated `states` directive".into()));
            }
            let count = tokens
                .next()
                .ok_or_else(|| syntax("`states` needs a count".into()))?;
            let count: usize = count
                .parse()
                .map_err(|_| syntax(format!("bad state count `{count}`")))?;
            if count == 0 {
                return Err(syntax("an instance needs at least one state".into()));
            }
            if tokens.next().is_some() {
                return Err(syntax("trailing tokens after `states`".into()));
            }
            n = Some(count);
            succ = vec![Vec::new(); count];
            continue;
        }

        let n = n.ok_or_else(|| syntax(format!("`{directive}` before `states`")))?;
        let id = |tok: &str| -> Result<usize, MdpError> {
            let id: usize = tok.parse().map_err(|_| MdpError::Syntax {
                line,
                msg: format!("bad state id `{tok}`"),
            })?;
            if id >= n {
                return Err(MdpError::OutOfRange { line, id, n });
            }
            Ok(id)
        };

        match directive {
            "player1" => {
                for tok in tokens {
                    player1.push(id(tok)?);
                }
            }
            "target" => {
                for tok in tokens {
                    targets.push(id(tok)?);
                }
            }
            "edge" => {
                let u = id(tokens
                    .next()
                    .ok_or_else(|| syntax("`edge` needs a source".into()))?)?;
                let v = id(tokens
                    .next()
                    .ok_or_else(|| syntax("`edge` needs a head".into()))?)?;
                let prob = match tokens.next() {
                    None => None,
                    Some(tok) => Some(
                        tok.parse::<f64>()
                            .ok()
                            .filter(|p| p.is_finite())
                            .ok_or_else(|| syntax(format!("bad probability `{tok}`")))?,
                    ),
                };
                if tokens.next().is_some() {
                    return Err(syntax("trailing tokens after `edge`".into()));
                }
                if succ[u].iter().any(|&(w, _, _)| w == v) {
                    return Err(MdpError::DuplicateEdge {
                        line,
                        from: u,
                        to: v,
                    });
                }
                succ[u].push((v, prob, line));
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let n = n.ok_or(MdpError::Syntax {
        line: 0,
        msg: "missing `states` directive".into(),
    })?;
    let mut owner = vec![false; n];
    for s in player1 {
        owner[s] = true;
    }

    let mut lists = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for (u, mut edges) in succ.into_iter().enumerate() {
        edges.sort_unstable_by_key(|&(v, _, _)| v);
        let given = edges.iter().filter(|(_, p, _)| p.is_some()).count();
        if given > 0 && owner[u] {
            let line = edges
                .iter()
                .find(|(_, p, _)| p.is_some())
                .map_or(0, |e| e.2);
            return Err(MdpError::Syntax {
                line,
                msg: format!("probability on edge of player-1 state {u}"),
            });
        }
        if given > 0 && given < edges.len() {
            let line = edges
                .iter()
                .find(|(_, p, _)| p.is_none())
                .map_or(0, |e| e.2);
            return Err(MdpError::Syntax {
                line,
                msg: format!("state {u} mixes edges with and without probabilities"),
            });
        }
        probs.push((given > 0).then(|| edges.iter().map(|e| e.1.unwrap_or(0.0)).collect()));
        lists.push(edges.into_iter().map(|e| e.0).collect());
    }

    let g = MdpGraph {
        graph: Digraph::from_successors(lists),
        player1: owner,
        probs,
        target: TargetSet::new(targets),
    };
    Ok(g)
}

/// Parses an instance document and validates the result.
pub fn parse_mdp(text: &str) -> Result<MdpGraph, MdpError> {
    let g = parse_unchecked(text)?;
    g.validate().map_err(MdpError::Invalid)?;
    Ok(g)
}

/// Reads the same format as [`parse_mdp`] as a plain digraph: sinks are
/// allowed and `player1`, `target` and probabilities are ignored.
pub fn parse_digraph(text: &str) -> Result<Digraph, MdpError> {
    Ok(parse_unchecked(text)?.graph)
}

pub fn serialize_digraph(d: &Digraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", d.n());
    for (u, v) in d.edges() {
        let _ = writeln!(out, "edge {u} {v}");
    }
    out
}

/// Canonical document: `states`, `player1`, edges by ascending source then
/// head, `target`. Empty `player1`/`target` lines are omitted.
pub fn serialize_mdp(g: &MdpGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", g.n());
    let p1: Vec<String> = g.player1_states().map(|s| s.to_string()).collect();
    if !p1.is_empty() {
        let _ = writeln!(out, "player1 {}", p1.join(" "));
    }
    for u in 0..g.n() {
        let probs = g.probs(u);
        for (i, &v) in g.succ(u).iter().enumerate() {
            match probs {
                Some(p) => {
                    let _ = writeln!(out, "edge {u} {v} {}", p[i]);
                }
                None => {
                    let _ = writeln!(out, "edge {u} {v}");
                }
            }
        }
    }
    if !g.target().is_empty() {
        let ids: Vec<String> = g.target().ids().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "target {}", ids.join(" "));
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const M1_TEXT: &str = "states 4\nplayer1 0 2\nedge 0 1\nedge 0 2\nedge 1 0\nedge 1 3\nedge 2 2\nedge 3 3\ntarget 2\n";

    /// States {0,2} player-1, {1,3} random; edges 0->1, 0->2, 1->0, 1->3, 2->2, 3->3; T = {2}.
    pub fn m1() -> MdpGraph {
        MdpGraph::new(
            4,
            [0, 2],
            [(0, 1), (0, 2), (1, 0), (1, 3), (2, 2), (3, 3)],
            TargetSet::new([2]),
        )
        .unwrap()
    }

    /// Chain 0 -> 1 -> ... -> n-1 with a self-loop on the last state.
    pub fn chain(n: usize, player1: bool, target: TargetSet) -> MdpGraph {
        let edges = (0..n - 1).map(|i| (i, i + 1)).chain([(n - 1, n - 1)]);
        let p1: Vec<usize> = if player1 { (0..n).collect() } else { vec![] };
        MdpGraph::new(n, p1, edges, target).unwrap()
    }
}
