//! Seeded instance generators. All randomness comes from `ChaCha8Rng`
//! seeded with the 64-bit seed in [`GenParams`].

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Digraph, MdpError, MdpGraph, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenKind {
    MdpRandom,
    MdpPerturbed,
    SccLayered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub kind: GenKind,
    pub n: usize,
    /// Requested number of edges before sink repair.
    pub edges: usize,
    pub target_fraction: f64,
    /// Rewiring probability (MdpPerturbed).
    pub epsilon: f64,
    /// Number of layers, i.e. intended SCCs (SccLayered).
    pub layers: usize,
    /// Share of the non-cycle edges that go forward between layers (SccLayered).
    pub inter_fraction: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn mdp(n: usize, edges: usize, target_fraction: f64, seed: u64) -> Self {
        GenParams {
            kind: GenKind::MdpRandom,
            n,
            edges,
            target_fraction,
            epsilon: 0.0,
            layers: 1,
            inter_fraction: 0.0,
            seed,
        }
    }

    pub fn layered(n: usize, layers: usize, edges: usize, inter_fraction: f64, seed: u64) -> Self {
        GenParams {
            kind: GenKind::SccLayered,
            n,
            edges,
            target_fraction: 0.0,
            epsilon: 0.0,
            layers,
            inter_fraction,
            seed,
        }
    }

    fn check(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::NoStates);
        }
        for (name, value) in [
            ("target_fraction", self.target_fraction),
            ("epsilon", self.epsilon),
            ("inter_fraction", self.inter_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GenError::Rate { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("n must be at least 1")]
    NoStates,
    #[error("{name} = {value} is outside [0, 1]")]
    Rate { name: &'static str, value: f64 },
    #[error("{edges} distinct edges do not fit on {n} states")]
    Density { n: usize, edges: usize },
    #[error("cannot split {n} states into {layers} non-empty layers")]
    Layers { n: usize, layers: usize },
    #[error("generator was given the wrong kind {0:?}")]
    Kind(GenKind),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn repair_sinks(succ: &mut [Vec<usize>], rng: &mut ChaCha8Rng) {
    let n = succ.len();
    for list in succ.iter_mut() {
        if list.is_empty() {
            list.push(rng.gen_range(0..n));
        }
    }
}

/// Uniform random MDP: fair-coin owners, `edges` distinct edges sampled
/// without replacement, one random edge added to each sink, and
/// `round(target_fraction · n)` targets.
pub fn gen_random_mdp(p: &GenParams) -> Result<MdpGraph, GenError> {
    p.check()?;
    if p.kind == GenKind::SccLayered {
        return Err(GenError::Kind(p.kind));
    }
    let n = p.n;
    let pairs = n
        .checked_mul(n)
        .ok_or(GenError::Density { n, edges: p.edges })?;
    if p.edges > pairs {
        return Err(GenError::Density { n, edges: p.edges });
    }
    let mut rng = rng(p.seed);
    let player1: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    let mut succ = vec![Vec::new(); n];
    for i in index::sample(&mut rng, pairs, p.edges).into_iter() {
        succ[i / n].push(i % n);
    }
    repair_sinks(&mut succ, &mut rng);
    let k = (p.target_fraction * n as f64).round() as usize;
    let target = TargetSet::new(index::sample(&mut rng, n, k.min(n)));
    let edges: Vec<(usize, usize)> = succ
        .iter()
        .enumerate()
        .flat_map(|(u, l)| l.iter().map(move |&v| (u, v)))
        .collect();
    Ok(MdpGraph::new(n, player1, edges, target)?)
}

/// Rewires each edge with probability `epsilon` to a uniformly chosen head
/// that is not already a successor. Owners and targets are kept; the edge
/// count never changes. Probabilities are dropped if anything moved.
pub fn perturb_mdp(g: &MdpGraph, epsilon: f64, seed: u64) -> Result<MdpGraph, GenError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(GenError::Rate {
            name: "epsilon",
            value: epsilon,
        });
    }
    let n = g.n();
    let mut rng = rng(seed);
    let mut succ: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut changed = false;
    for u in 0..n {
        let mut heads: HashSet<usize> = g.succ(u).iter().copied().collect();
        let mut list = Vec::with_capacity(heads.len());
        for &v in g.succ(u) {
            if heads.len() < n && rng.gen_bool(epsilon) {
                let w = loop {
                    let w = rng.gen_range(0..n);
                    if !heads.contains(&w) {
                        break w;
                    }
                };
                heads.remove(&v);
                heads.insert(w);
                list.push(w);
                changed = true;
            } else {
                list.push(v);
            }
        }
        list.sort_unstable();
        succ.push(list);
    }
    if !changed {
        return Ok(g.clone());
    }
    repair_sinks(&mut succ, &mut rng);
    let out = g.with_successors(succ);
    out.validate().map_err(MdpError::Invalid)?;
    Ok(out)
}

/// A layered digraph with its intended SCCs.
#[derive(Debug, Clone)]
pub struct LayeredGraph {
    pub graph: Digraph,
    /// Layers in topological order (edges only go from earlier to later
    /// layers), each sorted ascending.
    pub layers: Vec<Vec<usize>>,
}

/// Shuffles the states into `layers` near-equal layers, closes each layer of
/// two or more states with a random cycle, then adds random edges until
/// `edges` is reached: a share `inter_fraction` of them forward between
/// layers, the rest inside layers. Singleton layers get no self-loop.
pub fn gen_layered_scc_graph(p: &GenParams) -> Result<LayeredGraph, GenError> {
    p.check()?;
    if p.kind != GenKind::SccLayered {
        return Err(GenError::Kind(p.kind));
    }
    let n = p.n;
    if p.layers == 0 || p.layers > n {
        return Err(GenError::Layers {
            n,
            layers: p.layers,
        });
    }
    let mut rng = rng(p.seed);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let (base, extra) = (n / p.layers, n % p.layers);
    let mut layers = Vec::with_capacity(p.layers);
    let mut layer_of = vec![0; n];
    let mut rest = ids.as_slice();
    for l in 0..p.layers {
        let (layer, tail) = rest.split_at(base + usize::from(l < extra));
        for &s in layer {
            layer_of[s] = l;
        }
        layers.push(layer.to_vec());
        rest = tail;
    }

    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for layer in &layers {
        if layer.len() > 1 {
            for (i, &u) in layer.iter().enumerate() {
                edges.insert((u, layer[(i + 1) % layer.len()]));
            }
        }
    }
    let intra_room: usize = layers
        .iter()
        .filter(|l| l.len() > 1)
        .map(|l| l.len() * l.len())
        .sum();
    let inter_room = (n * n - layers.iter().map(|l| l.len() * l.len()).sum::<usize>()) / 2;
    if p.edges > intra_room + inter_room {
        return Err(GenError::Density { n, edges: p.edges });
    }
    let cyclic: Vec<usize> = (0..layers.len()).filter(|&l| layers[l].len() > 1).collect();
    let mut attempts = 0usize;
    while edges.len() < p.edges && attempts < 50 * p.edges.max(1) {
        attempts += 1;
        let inter = p.layers > 1 && (cyclic.is_empty() || rng.gen_bool(p.inter_fraction));
        let edge = if inter {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            match layer_of[u].cmp(&layer_of[v]) {
                std::cmp::Ordering::Equal => continue,
                std::cmp::Ordering::Less => (u, v),
                std::cmp::Ordering::Greater => (v, u),
            }
        } else {
            let Some(&l) = cyclic.choose(&mut rng) else {
                break;
            };
            let layer = &layers[l];
            (
                *layer.choose(&mut rng).unwrap(),
                *layer.choose(&mut rng).unwrap(),
            )
        };
        edges.insert(edge);
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort_unstable();
    for layer in layers.iter_mut() {
        layer.sort_unstable();
    }
    Ok(LayeredGraph {
        graph: Digraph::from_edges(n, edges),
        layers,
    })
}
