//! `buchi`: solve, decompose, generate and benchmark from the command line.
//!
//! Exit codes: 0 on success, 1 on divergence or validation failure, 2 on
//! usage errors and unreadable files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use buchi_core::bench::{
    decompose_with, gen_layered_scc_graph, gen_random_mdp, parse_config, perturb_mdp,
    run_algorithm, run_benchmark, solve_with, winning_hash, Algorithm, GenParams, Instance,
};
use buchi_core::explicit::{classical_explicit, impr_win_lose, win_lose};
use buchi_core::oracle::oracle_almost_sure;
use buchi_core::scc::{scc_diameters, scc_explicit, SccPartition, SccVariant, DIAMETER_AUDIT_CAP};
use buchi_core::symbolic::symb_impr_win_lose;
use buchi_core::{
    parse_digraph, parse_mdp, serialize_digraph, serialize_mdp, Digraph, StepLedger, SymbolicEngine,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "buchi",
    version,
    about = "Almost-sure Büchi solvers and symbolic SCC decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the almost-sure winning set of an MDP file.
    Solve {
        file: PathBuf,
        /// classical, symb-classical, impr, symb-impr, smdv, win-lose,
        /// impr-win-lose or symb-impr-win-lose.
        #[arg(long, default_value = "symb-impr")]
        algo: String,
        /// Print the verdict stream as JSON lines (WinLose family only).
        #[arg(long)]
        stream: bool,
        /// Print the step ledger as JSON.
        #[arg(long)]
        ledger: bool,
    },
    /// Decompose a graph file into SCCs, one component per line.
    Scc {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "improved")]
        algo: SccAlgo,
        /// Check the symbolic step count against the linear bounds.
        #[arg(long)]
        audit_bounds: bool,
    },
    /// Write a generated instance.
    Gen {
        #[command(subcommand)]
        kind: GenCommand,
    },
    /// Run a benchmark configuration and write results.csv and table.md.
    Bench {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Keep only the k costliest instances per size.
        #[arg(long)]
        select_hard: Option<usize>,
    },
    /// Run every solver, plus the oracle when feasible, and compare.
    Verify { file: PathBuf },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Uniform random MDP.
    Mdp {
        #[arg(long)]
        n: usize,
        /// Number of edges (default 4n).
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        target_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Rewire the edges of an existing MDP.
    Perturb {
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Layered digraph whose layers are its SCCs.
    Layered {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        layers: usize,
        /// Number of edges (default 4n).
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        inter_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SccAlgo {
    Explicit,
    Prior,
    Improved,
}

enum Failure {
    /// Exit code 1.
    Check(anyhow::Error),
    /// Exit code 2.
    Usage(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn check(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Check(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(usage)
}

fn ids(set: impl IntoIterator<Item = usize>) -> String {
    set.into_iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_ledger(ledger: &StepLedger) {
    let mut v = serde_json::to_value(ledger).expect("ledger serializes");
    v["image_steps"] = ledger.image_steps().into();
    println!("{v}");
}

fn solve(file: &Path, algo: &str, stream: bool, ledger: bool) -> Outcome {
    let alg = Algorithm::from_name(algo)
        .filter(|a| !a.is_scc())
        .ok_or_else(|| usage(anyhow!("unknown solver `{algo}`")))?;
    let g = parse_mdp(&read(file)?).map_err(check)?;
    if stream {
        let events = match alg {
            Algorithm::WinLose => win_lose(&g),
            Algorithm::ImprWinLose => impr_win_lose(&g),
            Algorithm::SymbImprWinLose => {
                let mut engine = SymbolicEngine::new(&g);
                symb_impr_win_lose(&mut engine, &g).map_err(check)?.0
            }
            _ => return Err(usage(anyhow!("--stream needs a WinLose-family solver"))),
        };
        print!("{}", events.to_json_lines());
    }
    let (winning, steps) = solve_with(alg, &g).map_err(check)?;
    println!("{}", ids(winning.iter()));
    if ledger {
        print_ledger(&steps);
    }
    Ok(())
}

fn audit(p: &SccPartition, d: &Digraph, variant: SccVariant, steps: u64) -> Outcome {
    let (n, big_n) = (d.n() as u64, p.len() as u64);
    let bound = match variant {
        SccVariant::Prior => 5 * n + 3 * big_n + 3,
        SccVariant::Improved => {
            let diam = scc_diameters(p, d, DIAMETER_AUDIT_CAP);
            let linear = 3 * n + big_n;
            let base = match diam.iter().copied().sum::<Option<usize>>() {
                Some(dstar) => linear.min(5 * dstar as u64 + big_n),
                None => linear,
            };
            base + 3 * big_n + 3
        }
    };
    println!("image_steps {steps} bound {bound}");
    if steps > bound {
        return Err(check(anyhow!("step bound exceeded")));
    }
    Ok(())
}

fn scc(file: &Path, algo: SccAlgo, audit_bounds: bool) -> Outcome {
    let d = parse_digraph(&read(file)?).map_err(check)?;
    let alg = match algo {
        SccAlgo::Explicit => Algorithm::SccExplicit,
        SccAlgo::Prior => Algorithm::SccPrior,
        SccAlgo::Improved => Algorithm::SccImproved,
    };
    let (partition, ledger) = decompose_with(alg, &d).map_err(check)?;
    for c in partition.canonical() {
        println!("{}", ids(c));
    }
    if !partition.same_partition(&scc_explicit(&d)) {
        return Err(check(anyhow!("partition differs from Tarjan's")));
    }
    match (audit_bounds, algo) {
        (false, _) => Ok(()),
        (true, SccAlgo::Explicit) => {
            Err(usage(anyhow!("--audit-bounds needs a symbolic algorithm")))
        }
        (true, SccAlgo::Prior) => audit(&partition, &d, SccVariant::Prior, ledger.image_steps()),
        (true, SccAlgo::Improved) => {
            audit(&partition, &d, SccVariant::Improved, ledger.image_steps())
        }
    }
}

fn gen(kind: GenCommand) -> Outcome {
    match kind {
        GenCommand::Mdp {
            n,
            edges,
            target_fraction,
            seed,
            out,
        } => {
            let g = gen_random_mdp(&GenParams::mdp(
                n,
                edges.unwrap_or(4 * n),
                target_fraction,
                seed,
            ))
            .map_err(usage)?;
            write(&out, &serialize_mdp(&g))
        }
        GenCommand::Perturb {
            input,
            epsilon,
            seed,
            out,
        } => {
            let g = parse_mdp(&read(&input)?).map_err(check)?;
            write(
                &out,
                &serialize_mdp(&perturb_mdp(&g, epsilon, seed).map_err(usage)?),
            )
        }
        GenCommand::Layered {
            n,
            layers,
            edges,
            inter_fraction,
            seed,
            out,
        } => {
            let p = GenParams::layered(n, layers, edges.unwrap_or(4 * n), inter_fraction, seed);
            let l = gen_layered_scc_graph(&p).map_err(usage)?;
            write(&out, &serialize_digraph(&l.graph))
        }
    }
}

fn bench(config: &Path, out: &Path, select_hard: Option<usize>) -> Outcome {
    let mut cfg = parse_config(&read(config)?).map_err(usage)?;
    if let Some(k) = select_hard {
        cfg.select_hard = k;
    }
    let report = run_benchmark(&cfg).map_err(check)?;
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(usage)?;
    write(&out.join("results.csv"), &report.to_csv(true))?;
    let table = report.to_markdown();
    write(&out.join("table.md"), &table)?;
    print!("{table}");
    if !report.divergences.is_empty() {
        let json = serde_json::to_string_pretty(&report.divergences).map_err(check)?;
        write(&out.join("divergences.json"), &json)?;
        return Err(check(anyhow!(
            "{} results diverged from the reference",
            report.divergences.len()
        )));
    }
    Ok(())
}

fn verify(file: &Path) -> Outcome {
    let g = parse_mdp(&read(file)?).map_err(check)?;
    let reference = classical_explicit(&g);
    if !reference.check_witness(&g) {
        return Err(check(anyhow!(
            "classical solver produced an invalid witness strategy"
        )));
    }
    let expected = winning_hash(&reference.states);
    let instance = Instance::Mdp(g.clone());
    let solvers: Vec<Algorithm> = Algorithm::ALL.into_iter().filter(|a| !a.is_scc()).collect();
    let mut bad = Vec::new();
    for &a in &solvers {
        if run_algorithm(a, &instance).map_err(check)?.result_hash != expected {
            bad.push(a.name());
        }
    }
    if !bad.is_empty() {
        return Err(check(anyhow!("disagreeing solvers: {}", bad.join(", "))));
    }
    match oracle_almost_sure(&g) {
        Ok(o) if o.states == reference.states => {
            println!("{} solvers + oracle agree", solvers.len());
            Ok(())
        }
        Ok(o) => Err(check(anyhow!(
            "oracle disagrees: oracle {{{}}}, solvers {{{}}}",
            ids(o.states.iter()),
            ids(reference.states.iter())
        ))),
        Err(e) => {
            println!("{} solvers agree (oracle skipped: {e})", solvers.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve {
            file,
            algo,
            stream,
            ledger,
        } => solve(&file, &algo, stream, ledger),
        Command::Scc {
            file,
            algo,
            audit_bounds,
        } => scc(&file, algo, audit_bounds),
        Command::Gen { kind } => gen(kind),
        Command::Bench {
            config,
            out,
            select_hard,
        } => bench(&config, &out, select_hard),
        Command::Verify { file } => verify(&file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
