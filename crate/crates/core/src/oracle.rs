//! Brute-force almost-sure winning set by enumerating pure memoryless
//! strategies. Only for small instances.

use thiserror::Error;

use crate::explicit::WinningSet;
use crate::model::{Digraph, MdpGraph};
use crate::reach::reach_backward_explicit;
use crate::scc::scc_explicit;
use crate::set::StateSet;

/// Largest strategy space the oracle will enumerate.
pub const STRATEGY_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("strategy space exceeds {limit} pure memoryless strategies")]
    TooLarge { limit: u64 },
}

/// Number of pure memoryless strategies, saturating above [`STRATEGY_LIMIT`].
pub fn strategy_count(g: &MdpGraph) -> u64 {
    let mut count: u64 = 1;
    for s in g.player1_states() {
        count = count.saturating_mul(g.succ(s).len() as u64);
        if count > STRATEGY_LIMIT {
            return u64::MAX;
        }
    }
    count
}

/// States that win under some strategy: in the Markov chain induced by the
/// strategy, every bottom SCC reachable from them meets the target.
pub fn oracle_almost_sure(g: &MdpGraph) -> Result<WinningSet, OracleError> {
    if strategy_count(g) > STRATEGY_LIMIT {
        return Err(OracleError::TooLarge {
            limit: STRATEGY_LIMIT,
        });
    }
    let n = g.n();
    let target = g.target().to_state_set(n);
    let controlled: Vec<usize> = g.player1_states().collect();
    let mut pick = vec![0usize; controlled.len()];
    let mut winning = StateSet::empty(n);
    let everything = StateSet::full(n);
    loop {
        let mut succ: Vec<Vec<usize>> = (0..n).map(|s| g.succ(s).to_vec()).collect();
        for (&s, &i) in controlled.iter().zip(&pick) {
            succ[s] = vec![g.succ(s)[i]];
        }
        let chain = Digraph::from_successors(succ);
        let mut bad = StateSet::empty(n);
        for c in scc_explicit(&chain).bottom_components() {
            if !c.iter().any(|&s| target.contains(s)) {
                for &s in c {
                    bad.insert(s);
                }
            }
        }
        let losing = reach_backward_explicit(&chain, &everything, &bad);
        winning.union_with(&losing.complement());

        // Advance the mixed-radix counter over successor choices.
        let mut k = 0;
        while k < pick.len() {
            pick[k] += 1;
            if pick[k] < g.succ(controlled[k]).len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    Ok(WinningSet::with_witness(g, winning))
}
