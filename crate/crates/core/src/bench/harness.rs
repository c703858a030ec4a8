//! Benchmark harness: builds instances from a [`BenchConfig`], runs each
//! algorithm on a fresh engine, cross-checks results and emits CSV and
//! markdown reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{BenchConfig, ConfigError, Family};
use super::gen::{gen_layered_scc_graph, gen_random_mdp, perturb_mdp, GenError, GenParams};
use crate::engine::{EngineError, StepLedger, SymbolicEngine};
use crate::explicit::{classical_explicit, impr_algo, impr_win_lose, win_lose};
use crate::model::{Digraph, MdpGraph};
use crate::scc::{decompose, scc_explicit, SccPartition, SccVariant};
use crate::set::StateSet;
use crate::symbolic::{smdv_symb_impr_algo, symb_classical, symb_impr_algo, symb_impr_win_lose};

/// Seed offset for the perturbation pass of the perturbed family.
const PERTURB_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub const CSV_HEADER: &str = "graph_id,n,m,algorithm,image_steps,pre_steps,post_steps,cpre_steps,\
cpre1_steps,cardinality_ops,wall_time_us,result_size,result_hash";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Algorithm {
    Classical,
    SymbClassical,
    Impr,
    SymbImpr,
    Smdv,
    WinLose,
    ImprWinLose,
    SymbImprWinLose,
    SccExplicit,
    SccPrior,
    SccImproved,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Classical,
        Algorithm::SymbClassical,
        Algorithm::Impr,
        Algorithm::SymbImpr,
        Algorithm::Smdv,
        Algorithm::WinLose,
        Algorithm::ImprWinLose,
        Algorithm::SymbImprWinLose,
        Algorithm::SccExplicit,
        Algorithm::SccPrior,
        Algorithm::SccImproved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Classical => "classical",
            Algorithm::SymbClassical => "symb-classical",
            Algorithm::Impr => "impr",
            Algorithm::SymbImpr => "symb-impr",
            Algorithm::Smdv => "smdv",
            Algorithm::WinLose => "win-lose",
            Algorithm::ImprWinLose => "impr-win-lose",
            Algorithm::SymbImprWinLose => "symb-impr-win-lose",
            Algorithm::SccExplicit => "scc-explicit",
            Algorithm::SccPrior => "scc-prior",
            Algorithm::SccImproved => "scc-improved",
        }
    }

    /// Column title in markdown tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Classical => "Classical (explicit)",
            Algorithm::SymbClassical => "Classical",
            Algorithm::Impr => "ImprAlgo",
            Algorithm::SymbImpr => "SymbImprAlgo",
            Algorithm::Smdv => "SmDvSymbImprAlgo",
            Algorithm::WinLose => "WinLose",
            Algorithm::ImprWinLose => "ImprWinLose",
            Algorithm::SymbImprWinLose => "SymbImprWinLose",
            Algorithm::SccExplicit => "Tarjan",
            Algorithm::SccPrior => "Prior SCC algorithm",
            Algorithm::SccImproved => "Improved SCC algorithm",
        }
    }

    pub fn from_name(name: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn is_scc(self) -> bool {
        matches!(
            self,
            Algorithm::SccExplicit | Algorithm::SccPrior | Algorithm::SccImproved
        )
    }
}

/// A benchmark instance: an MDP or, for the SCC family, a plain digraph.
#[derive(Debug, Clone)]
pub enum Instance {
    Mdp(MdpGraph),
    Digraph(Digraph),
}

impl Instance {
    pub fn digraph(&self) -> &Digraph {
        match self {
            Instance::Mdp(g) => g.digraph(),
            Instance::Digraph(d) => d,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0} needs an MDP instance")]
    NeedsMdp(&'static str),
    #[error("{0} is not a Büchi solver")]
    NotBuchi(&'static str),
}

/// Result of one algorithm run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub ledger: StepLedger,
    /// Winning-set size or number of SCCs.
    pub result_size: usize,
    pub result_hash: String,
    pub wall_time_us: u64,
}

fn hex_prefix(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn winning_hash(w: &StateSet) -> String {
    let ids: Vec<String> = w.iter().map(|s| s.to_string()).collect();
    hex_prefix(format!("win:{}", ids.join(",")).as_bytes())
}

pub fn partition_hash(p: &SccPartition) -> String {
    let parts: Vec<String> = p
        .canonical()
        .iter()
        .map(|c| {
            c.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    hex_prefix(format!("scc:{}", parts.join(";")).as_bytes())
}

/// Winning set and step ledger of a Büchi algorithm. Explicit solvers
/// report an empty ledger.
pub fn solve_with(alg: Algorithm, g: &MdpGraph) -> Result<(StateSet, StepLedger), BenchError> {
    let none = StepLedger::default();
    let mut engine = SymbolicEngine::new(g);
    Ok(match alg {
        Algorithm::Classical => (classical_explicit(g).states, none),
        Algorithm::Impr => (impr_algo(g).states, none),
        Algorithm::WinLose => (win_lose(g).winning(), none),
        Algorithm::ImprWinLose => (impr_win_lose(g).winning(), none),
        Algorithm::SymbClassical => {
            let r = symb_classical(&mut engine, g)?;
            (r.winning, r.ledger)
        }
        Algorithm::SymbImpr => {
            let r = symb_impr_algo(&mut engine, g)?;
            (r.winning, r.ledger)
        }
        Algorithm::Smdv => {
            let r = smdv_symb_impr_algo(&mut engine, g)?;
            (r.winning, r.ledger)
        }
        Algorithm::SymbImprWinLose => {
            let (_, r) = symb_impr_win_lose(&mut engine, g)?;
            (r.winning, r.ledger)
        }
        _ => return Err(BenchError::NotBuchi(alg.name())),
    })
}

/// SCC partition and step ledger of an SCC algorithm.
pub fn decompose_with(
    alg: Algorithm,
    d: &Digraph,
) -> Result<(SccPartition, StepLedger), BenchError> {
    let variant = match alg {
        Algorithm::SccExplicit => return Ok((scc_explicit(d), StepLedger::default())),
        Algorithm::SccPrior => SccVariant::Prior,
        Algorithm::SccImproved => SccVariant::Improved,
        _ => return Err(BenchError::NeedsMdp(alg.name())),
    };
    let mut engine = SymbolicEngine::for_digraph(d);
    let live = engine.full();
    let run = decompose(&mut engine, d, &live, variant)?;
    Ok((run.partition, engine.ledger()))
}

pub fn run_algorithm(alg: Algorithm, instance: &Instance) -> Result<Outcome, BenchError> {
    let start = Instant::now();
    let (result_size, result_hash, ledger) = if alg.is_scc() {
        let (p, ledger) = decompose_with(alg, instance.digraph())?;
        (p.len(), partition_hash(&p), ledger)
    } else {
        let Instance::Mdp(g) = instance else {
            return Err(BenchError::NeedsMdp(alg.name()));
        };
        let (w, ledger) = solve_with(alg, g)?;
        (w.len(), winning_hash(&w), ledger)
    };
    let wall_time_us = start.elapsed().as_micros() as u64;
    Ok(Outcome {
        ledger,
        result_size,
        result_hash,
        wall_time_us,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub graph_id: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub ledger: StepLedger,
    pub wall_time_us: u64,
    pub result_size: usize,
    pub result_hash: String,
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        let l = &self.ledger;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.graph_id,
            self.n,
            self.m,
            self.algorithm.name(),
            l.image_steps(),
            l.pre_steps,
            l.post_steps,
            l.cpre_steps,
            l.cpre1_steps,
            l.cardinality_ops,
            self.wall_time_us,
            self.result_size,
            self.result_hash
        )
    }
}

/// An algorithm whose result disagreed with the reference solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub graph_id: String,
    pub algorithm: Algorithm,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub family: Family,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    /// Sorted by (n, seed, algorithm).
    pub rows: Vec<BenchRow>,
    pub divergences: Vec<Divergence>,
}

impl BenchReport {
    /// CSV text. With `wall_time` off the wall-time column is zeroed so the
    /// output is byte-identical across runs.
    pub fn to_csv(&self, wall_time: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            if wall_time {
                out.push_str(&row.to_csv());
            } else {
                out.push_str(
                    &BenchRow {
                        wall_time_us: 0,
                        ..row.clone()
                    }
                    .to_csv(),
                );
            }
            out.push('\n');
        }
        out
    }

    /// Mean image steps per (n, algorithm).
    pub fn mean_steps(&self) -> BTreeMap<(usize, Algorithm), f64> {
        let mut acc: BTreeMap<(usize, Algorithm), (u64, u64)> = BTreeMap::new();
        for r in &self.rows {
            let e = acc.entry((r.n, r.algorithm)).or_default();
            e.0 += r.ledger.image_steps();
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(k, (sum, count))| (k, sum as f64 / count as f64))
            .collect()
    }

    /// Mean relative reduction of `better` against `base`, in percent, at size `n`.
    pub fn improvement(&self, n: usize, base: Algorithm, better: Algorithm) -> Option<f64> {
        let means = self.mean_steps();
        let (b, i) = (means.get(&(n, base))?, means.get(&(n, better))?);
        (*b > 0.0).then(|| 100.0 * (b - i) / b)
    }

    /// Table of mean image steps, one line per size. Adds a percentage
    /// column when both symbolic SCC algorithms ran.
    pub fn to_markdown(&self) -> String {
        let means = self.mean_steps();
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        sizes.dedup();
        let pct = self.algorithms.contains(&Algorithm::SccPrior)
            && self.algorithms.contains(&Algorithm::SccImproved);
        let mut out = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(
            out,
            "Mean image steps, family `{:?}`, seeds {}.\n",
            self.family,
            seeds.join(", ")
        );
        out.push_str("| Number of states |");
        for a in &self.algorithms {
            let _ = write!(out, " {} |", a.label());
        }
        if pct {
            out.push_str(" Percentage Improvement |");
        }
        out.push_str("\n|---|");
        for _ in 0..self.algorithms.len() + usize::from(pct) {
            out.push_str("---|");
        }
        out.push('\n');
        for n in sizes {
            let _ = write!(out, "| {n} |");
            for a in &self.algorithms {
                match means.get(&(n, *a)) {
                    Some(v) => {
                        let _ = write!(out, " {v:.1} |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            if pct {
                match self.improvement(n, Algorithm::SccPrior, Algorithm::SccImproved) {
                    Some(p) => {
                        let _ = write!(out, " {p:.2} |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        if !self.divergences.is_empty() {
            let _ = writeln!(
                out,
                "\n{} divergent results were dropped.",
                self.divergences.len()
            );
        }
        out
    }
}

/// Builds the instance for one (size, seed) pair of the configuration.
pub fn build_instance(cfg: &BenchConfig, n: usize, seed: u64) -> Result<Instance, GenError> {
    let edges = cfg.density.edges(n);
    match cfg.family {
        Family::Mdp => Ok(Instance::Mdp(gen_random_mdp(&GenParams::mdp(
            n,
            edges,
            cfg.target_fraction,
            seed,
        ))?)),
        Family::Perturbed => {
            let base = gen_random_mdp(&GenParams::mdp(n, edges, cfg.target_fraction, seed))?;
            Ok(Instance::Mdp(perturb_mdp(
                &base,
                cfg.epsilon,
                seed ^ PERTURB_SALT,
            )?))
        }
        Family::Layered => {
            let layers = if cfg.layers == 0 {
                (n / 100).max(1)
            } else {
                cfg.layers.min(n)
            };
            let p = GenParams::layered(n, layers, edges, cfg.inter_fraction, seed);
            Ok(Instance::Digraph(gen_layered_scc_graph(&p)?.graph))
        }
    }
}

fn family_tag(f: Family) -> &'static str {
    match f {
        Family::Mdp => "mdp",
        Family::Perturbed => "perturbed",
        Family::Layered => "layered",
    }
}

fn reference_hashes(cfg: &BenchConfig, instance: &Instance) -> (Option<String>, Option<String>) {
    let buchi = match instance {
        Instance::Mdp(g) if cfg.algorithms.iter().any(|a| !a.is_scc()) => {
            Some(winning_hash(&classical_explicit(g).states))
        }
        _ => None,
    };
    let scc = cfg
        .algorithms
        .iter()
        .any(|a| a.is_scc())
        .then(|| partition_hash(&scc_explicit(instance.digraph())));
    (buchi, scc)
}

type InstanceRows = (Vec<BenchRow>, Vec<Divergence>);

fn run_instance(cfg: &BenchConfig, n: usize, seed: u64) -> Result<InstanceRows, BenchError> {
    let instance = build_instance(cfg, n, seed)?;
    let graph_id = format!("{}-n{n}-s{seed}", family_tag(cfg.family));
    let m = instance.digraph().m();
    let (buchi_ref, scc_ref) = reference_hashes(cfg, &instance);
    let mut rows = Vec::new();
    let mut divergences = Vec::new();
    for &alg in &cfg.algorithms {
        let mut out = run_algorithm(alg, &instance)?;
        let mut total_us = out.wall_time_us;
        for _ in 1..cfg.repetitions {
            total_us += run_algorithm(alg, &instance)?.wall_time_us;
        }
        out.wall_time_us = total_us / cfg.repetitions as u64;
        let expected = if alg.is_scc() { &scc_ref } else { &buchi_ref };
        if let Some(expected) = expected {
            if *expected != out.result_hash {
                divergences.push(Divergence {
                    graph_id: graph_id.clone(),
                    algorithm: alg,
                    expected: expected.clone(),
                    found: out.result_hash,
                });
                continue;
            }
        }
        rows.push(BenchRow {
            graph_id: graph_id.clone(),
            n,
            m,
            seed,
            algorithm: alg,
            ledger: out.ledger,
            wall_time_us: out.wall_time_us,
            result_size: out.result_size,
            result_hash: out.result_hash,
        });
    }
    Ok((rows, divergences))
}

/// Runs every configured algorithm on every (size, seed) instance, in
/// parallel over instances. With `select_hard = k > 0` only the `k`
/// instances per size with the largest total image steps are kept.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.algorithms.is_empty() {
        return Err(ConfigError::NoAlgorithms.into());
    }
    let jobs: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<InstanceRows> = jobs
        .par_iter()
        .map(|&(n, s)| run_instance(cfg, n, s))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut divergences = Vec::new();
    let mut kept: Vec<(usize, u64)> = jobs.clone();
    if cfg.select_hard > 0 {
        kept.clear();
        let mut by_size: BTreeMap<usize, Vec<(u64, u64)>> = BTreeMap::new();
        for (&(n, s), (r, _)) in jobs.iter().zip(&results) {
            let total = r.iter().map(|row| row.ledger.image_steps()).sum();
            by_size.entry(n).or_default().push((total, s));
        }
        for (n, mut list) in by_size {
            list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            kept.extend(list.into_iter().take(cfg.select_hard).map(|(_, s)| (n, s)));
        }
    }
    for (job, (r, d)) in jobs.iter().zip(results) {
        divergences.extend(d);
        if kept.contains(job) {
            rows.extend(r);
        }
    }
    rows.sort_by_key(|r| (r.n, r.seed, r.algorithm));
    divergences.sort_by(|a, b| (&a.graph_id, a.algorithm).cmp(&(&b.graph_id, b.algorithm)));
    Ok(BenchReport {
        family: cfg.family,
        algorithms: cfg.algorithms.clone(),
        seeds: cfg.seeds.clone(),
        rows,
        divergences,
    })
}
