//! Seeded synthetic tensors.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::amm::random_init;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A generator description, written `gaussian:8x8x8:SEED`,
/// `lowrank:6x6x6:2,2,2:SIGMA:SEED` or `composite-cur:6x6x6:K:SEED`.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    /// Independent standard normal entries.
    Gaussian { shape: Vec<usize>, seed: u64 },
    /// Gaussian core times orthonormal frames, plus `noise` times a Gaussian
    /// tensor.
    LowRank { shape: Vec<usize>, ranks: Vec<usize>, noise: f64, seed: u64 },
    /// Tucker structure that tensor CUR reproduces exactly: multilinear rank
    /// `(k², k, k)` for three modes and `(k, k, k, k)` for four.
    CompositeCur { shape: Vec<usize>, k: usize, seed: u64 },
}

fn parse_list(s: &str, sep: char, what: &str) -> Result<Vec<usize>> {
    let v = s
        .split(sep)
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::InvalidSpec(format!("bad {what} '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() || v.contains(&0) {
        return Err(Error::InvalidSpec(format!("{what} '{s}' must be positive")));
    }
    Ok(v)
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::InvalidSpec(format!("bad {what} '{s}'")))
}

fn join(v: &[usize], sep: &str) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["gaussian", shape, seed] => Self::Gaussian { shape: parse_list(shape, 'x', "shape")?, seed: parse_num(seed, "seed")? },
            ["lowrank", shape, ranks, noise, seed] => Self::LowRank {
                shape: parse_list(shape, 'x', "shape")?,
                ranks: parse_list(ranks, ',', "ranks")?,
                noise: parse_num(noise, "noise level")?,
                seed: parse_num(seed, "seed")?,
            },
            ["composite-cur", shape, k, seed] => Self::CompositeCur {
                shape: parse_list(shape, 'x', "shape")?,
                k: parse_num(k, "k")?,
                seed: parse_num(seed, "seed")?,
            },
            _ => return Err(Error::InvalidSpec(format!("unrecognized generator '{s}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { shape, seed } => write!(f, "gaussian:{}:{seed}", join(shape, "x")),
            Self::LowRank { shape, ranks, noise, seed } => {
                write!(f, "lowrank:{}:{}:{noise}:{seed}", join(shape, "x"), join(ranks, ","))
            }
            Self::CompositeCur { shape, k, seed } => write!(f, "composite-cur:{}:{k}:{seed}", join(shape, "x")),
        }
    }
}

impl GeneratorSpec {
    pub fn shape(&self) -> &[usize] {
        match self {
            Self::Gaussian { shape, .. } | Self::LowRank { shape, .. } | Self::CompositeCur { shape, .. } => shape,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { .. } => Ok(()),
            Self::LowRank { shape, ranks, noise, .. } => {
                if ranks.len() != shape.len() || ranks.iter().zip(shape).any(|(r, n)| r > n) {
                    return Err(Error::InvalidSpec(format!("ranks {ranks:?} do not fit shape {shape:?}")));
                }
                if !noise.is_finite() || *noise < 0.0 {
                    return Err(Error::InvalidSpec(format!("noise level {noise} must be finite and non-negative")));
                }
                Ok(())
            }
            Self::CompositeCur { shape, k, .. } => {
                let ranks = composite_ranks(shape.len(), *k)?;
                if *k == 0 || ranks.iter().zip(shape).any(|(r, n)| r > n) {
                    return Err(Error::InvalidSpec(format!("k = {k} does not fit shape {shape:?}")));
                }
                Ok(())
            }
        }
    }

    /// Deterministic in the spec, seed included.
    pub fn generate(&self) -> Result<Tensor> {
        self.validate()?;
        match self {
            Self::Gaussian { shape, seed } => Ok(gaussian(shape, *seed)),
            Self::LowRank { shape, ranks, noise, seed } => {
                let t = tucker(shape, ranks, *seed)?;
                if *noise == 0.0 {
                    return Ok(t);
                }
                t.add(&gaussian(shape, seed.wrapping_add(1)).scale(*noise))
            }
            Self::CompositeCur { shape, k, seed } => tucker(shape, &composite_ranks(shape.len(), *k)?, *seed),
        }
    }
}

fn composite_ranks(d: usize, k: usize) -> Result<Vec<usize>> {
    match d {
        3 => Ok(vec![k * k, k, k]),
        4 => Ok(vec![k; 4]),
        _ => Err(Error::InvalidSpec(format!("composite CUR seeds exist for 3 or 4 modes, not {d}"))),
    }
}

/// Tensor with independent standard normal entries.
pub fn gaussian(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| StandardNormal.sample(&mut rng))
}

/// Gaussian `r₁×…×r_d` core multiplied by orthonormal frames in every mode,
/// so the result has multilinear rank `ranks` almost surely.
pub fn tucker(shape: &[usize], ranks: &[usize], seed: u64) -> Result<Tensor> {
    let frames = random_init(shape, ranks, seed.wrapping_add(0x5eed))?;
    let mut t = gaussian(ranks, seed);
    for (m, f) in frames.frames().iter().enumerate() {
        t = t.mode_product(m, f.basis())?;
    }
    Ok(t)
}
