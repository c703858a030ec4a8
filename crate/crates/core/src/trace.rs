//! Verdict streams and per-iteration traces emitted by the solvers.

use serde::{Deserialize, Serialize};

use crate::set::StateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Win,
    Lose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEvent {
    pub iteration: usize,
    pub verdict: Verdict,
    pub states: Vec<usize>,
}

/// Ordered Win/Lose discoveries of a WinLose-family run. Event sets are
/// pairwise disjoint and, once the run finishes, cover every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictStream {
    n: usize,
    events: Vec<VerdictEvent>,
}

impl VerdictStream {
    pub fn new(n: usize) -> Self {
        VerdictStream {
            n,
            events: Vec::new(),
        }
    }

    /// Appends an event; empty sets are dropped.
    pub fn push(&mut self, iteration: usize, verdict: Verdict, states: &StateSet) {
        if !states.is_empty() {
            self.events.push(VerdictEvent {
                iteration,
                verdict,
                states: states.to_vec(),
            });
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn events(&self) -> &[VerdictEvent] {
        &self.events
    }

    fn union_of(&self, verdict: Verdict) -> StateSet {
        let mut out = StateSet::empty(self.n);
        for e in self.events.iter().filter(|e| e.verdict == verdict) {
            for &s in &e.states {
                out.insert(s);
            }
        }
        out
    }

    /// Union of all Win events.
    pub fn winning(&self) -> StateSet {
        self.union_of(Verdict::Win)
    }

    /// Union of all Lose events.
    pub fn losing(&self) -> StateSet {
        self.union_of(Verdict::Lose)
    }

    /// True if the events are pairwise disjoint and cover every state.
    pub fn is_partition(&self) -> bool {
        let mut seen = StateSet::empty(self.n);
        for e in &self.events {
            for &s in &e.states {
                if !seen.insert(s) {
                    return false;
                }
            }
        }
        seen.len() == self.n
    }

    /// Index of the first event inconsistent with `winning`: a Win event
    /// leaving it or a Lose event meeting it.
    pub fn first_unsound_event(&self, winning: &StateSet) -> Option<usize> {
        self.events.iter().position(|e| match e.verdict {
            Verdict::Win => e.states.iter().any(|&s| !winning.contains(s)),
            Verdict::Lose => e.states.iter().any(|&s| winning.contains(s)),
        })
    }

    /// One JSON object per line, in event order.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Full recomputation: reachability or SCC decomposition of the live graph.
    Full,
    /// Lockstep search from the frontier J.
    Lockstep,
    /// Dovetailed backward search hit its fixpoint first.
    Dovetail,
    /// Attractor absorption at the start of an SCC in the bottom-up driver.
    Absorb,
}

/// One iteration of a solver loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub case: Case,
    /// Live states at the start of the iteration.
    pub live: usize,
    /// |J| at the start of the iteration.
    pub frontier: usize,
    /// States removed by the iteration.
    pub removed: usize,
}

pub fn count_full_cases(trace: &[IterationRecord]) -> usize {
    trace.iter().filter(|r| r.case == Case::Full).count()
}

/// ⌈√m⌉, the frontier size above which the improved solvers recompute fully.
pub fn sqrt_threshold(m: usize) -> usize {
    let mut r = (m as f64).sqrt() as usize;
    while r * r < m {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= m {
        r -= 1;
    }
    r
}
