//! Flat `key = value` benchmark configuration.
//!
//! ```text
//! # comment
//! family = perturbed          # mdp | perturbed | layered
//! sizes = 5000, 10000
//! seeds = 1..5                # list or inclusive range
//! algorithms = symb-classical, symb-impr, smdv, symb-impr-win-lose
//! density = 4                 # edges per state, or `log` for n·log2(n)
//! target_fraction = 0.05
//! epsilon = 0.02
//! layers = 100                # layered: number of layers
//! inter_fraction = 0.5        # layered: share of forward edges
//! repetitions = 1
//! select_hard = 0             # keep the k costliest instances per size
//! ```

use std::str::FromStr;

use thiserror::Error;

use super::harness::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Mdp,
    Perturbed,
    Layered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    PerState(f64),
    Log,
}

impl Density {
    pub fn edges(&self, n: usize) -> usize {
        let per_state = match *self {
            Density::PerState(d) => d,
            Density::Log => (n.max(2) as f64).log2(),
        };
        ((n as f64) * per_state).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub density: Density,
    pub target_fraction: f64,
    pub epsilon: f64,
    pub layers: usize,
    pub inter_fraction: f64,
    pub repetitions: usize,
    pub select_hard: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("algorithm list is empty")]
    NoAlgorithms,
    #[error("algorithm `{algorithm}` does not apply to the {family} family")]
    Mismatch {
        algorithm: String,
        family: &'static str,
    },
}

fn list<T: FromStr>(line: usize, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse().map_err(|_| ConfigError::Syntax {
                line,
                msg: format!("bad list item `{v}`"),
            })
        })
        .collect()
}

fn scalar<T: FromStr>(line: usize, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Syntax {
        line,
        msg: format!("bad value `{value}`"),
    })
}

fn seeds(line: usize, value: &str) -> Result<Vec<u64>, ConfigError> {
    if let Some((lo, hi)) = value.split_once("..") {
        let (lo, hi): (u64, u64) = (scalar(line, lo.trim())?, scalar(line, hi.trim())?);
        if lo > hi {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("empty seed range {value}"),
            });
        }
        return Ok((lo..=hi).collect());
    }
    list(line, value)
}

pub fn parse_config(text: &str) -> Result<BenchConfig, ConfigError> {
    let mut family = None;
    let mut sizes = None;
    let mut seed_list = None;
    let mut algorithms = None;
    let mut cfg = BenchConfig {
        family: Family::Mdp,
        sizes: Vec::new(),
        seeds: Vec::new(),
        algorithms: Vec::new(),
        density: Density::PerState(4.0),
        target_fraction: 0.1,
        epsilon: 0.02,
        layers: 0,
        inter_fraction: 0.5,
        repetitions: 1,
        select_hard: 0,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "family" => {
                family = Some(match value {
                    "mdp" => Family::Mdp,
                    "perturbed" => Family::Perturbed,
                    "layered" => Family::Layered,
                    _ => {
                        return Err(ConfigError::Syntax {
                            line,
                            msg: format!("unknown family `{value}`"),
                        })
                    }
                })
            }
            "sizes" => sizes = Some(list(line, value)?),
            "seeds" => seed_list = Some(seeds(line, value)?),
            "algorithms" => {
                algorithms = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|v| !v.is_empty())
                        .map(|v| {
                            Algorithm::from_name(v).ok_or_else(|| ConfigError::Syntax {
                                line,
                                msg: format!("unknown algorithm `{v}`"),
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "density" => {
                cfg.density = if value == "log" {
                    Density::Log
                } else {
                    Density::PerState(scalar(line, value)?)
                }
            }
            "target_fraction" => cfg.target_fraction = scalar(line, value)?,
            "epsilon" => cfg.epsilon = scalar(line, value)?,
            "layers" => cfg.layers = scalar(line, value)?,
            "inter_fraction" => cfg.inter_fraction = scalar(line, value)?,
            "repetitions" => cfg.repetitions = scalar(line, value)?,
            "select_hard" => cfg.select_hard = scalar(line, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    cfg.family = family.ok_or(ConfigError::Missing("family"))?;
    cfg.sizes = sizes.ok_or(ConfigError::Missing("sizes"))?;
    cfg.seeds = seed_list.ok_or(ConfigError::Missing("seeds"))?;
    cfg.algorithms = algorithms.ok_or(ConfigError::Missing("algorithms"))?;
    if cfg.algorithms.is_empty() {
        return Err(ConfigError::NoAlgorithms);
    }
    if cfg.family == Family::Layered {
        if let Some(a) = cfg.algorithms.iter().find(|a| !a.is_scc()) {
            return Err(ConfigError::Mismatch {
                algorithm: a.name().to_string(),
                family: "layered",
            });
        }
    }
    cfg.repetitions = cfg.repetitions.max(1);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = parse_config(
            "# sizes sweep\nfamily = perturbed\nsizes = 50, 100\nseeds = 3..5\n\
             algorithms = classical, symb-impr\ndensity = log\nrepetitions = 2 # twice\n",
        )
        .unwrap();
        assert_eq!(cfg.family, Family::Perturbed);
        assert_eq!(cfg.sizes, vec![50, 100]);
        assert_eq!(cfg.seeds, vec![3, 4, 5]);
        assert_eq!(
            cfg.algorithms,
            vec![Algorithm::Classical, Algorithm::SymbImpr]
        );
        assert_eq!(cfg.density.edges(256), 2048);
        assert_eq!(cfg.repetitions, 2);
    }

    #[test]
    fn errors() {
        let base = "family = mdp\nsizes = 10\nseeds = 1\n";
        assert_eq!(
            parse_config(&format!("{base}algorithms =\n")),
            Err(ConfigError::NoAlgorithms)
        );
        assert_eq!(parse_config(base), Err(ConfigError::Missing("algorithms")));
        assert_eq!(
            parse_config(&format!("{base}colour = red\n")),
            Err(ConfigError::UnknownKey {
                line: 4,
                key: "colour".into()
            })
        );
        assert!(matches!(
            parse_config("family mdp\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("family = layered\nsizes = 10\nseeds = 1\nalgorithms = smdv\n"),
            Err(ConfigError::Mismatch { .. })
        ));
    }
}
