//! Hankel volumes `p_H(π)` of pair partitions.
//!
//! A pair partition `π` of `{1, ..., k}` imposes one equation per block
//! `{i, j}` (with `i < j`) on variables `x_0, ..., x_k`:
//!
//! ```text
//! x_i + x_{i-1} = x_j + x_{j-1}
//! ```
//!
//! Solving for the larger index of every block leaves `k/2 + 1` free
//! variables. `p_H(π)` is the volume of the set of free values in
//! `[0,1]^{k/2+1}` for which every solved variable also lands in `[0,1]`.
//!
//! Volumes are computed exactly (rational, up to [`EXACT_DIMENSION_CAP`]) or
//! by seeded Monte Carlo.

mod polytope;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::PairPartition;
use crate::{rational, seed};

/// Largest cross-section dimension (`k/2 + 1`) handled by [`exact_volume`];
/// dimension 6 corresponds to `k = 10`.
pub const EXACT_DIMENSION_CAP: usize = 6;

const MC_CHUNK: u64 = 1 << 16;

/// Integer affine form `Σ coeffs[t] · y_t + constant` over the free variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineForm {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl AffineForm {
    fn unit(dim: usize, idx: usize) -> Self {
        let mut coeffs = vec![0; dim];
        coeffs[idx] = 1;
        Self { coeffs, constant: 0 }
    }

    pub fn eval(&self, free: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(free)
            .map(|(&c, &y)| c as f64 * y)
            .sum::<f64>()
            + self.constant as f64
    }

    pub fn eval_exact(&self, free: &[BigRational]) -> BigRational {
        self.coeffs
            .iter()
            .zip(free)
            .fold(rational::int(self.constant), |acc, (&c, y)| acc + y * rational::int(c))
    }

    fn add_scaled(&mut self, other: &AffineForm, scale: i64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += scale * b;
        }
        self.constant += scale * other.constant;
    }
}

/// Solved cross-section system of a pair partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSystem {
    k: usize,
    free_vars: Vec<usize>,
    solved: BTreeMap<usize, AffineForm>,
}

impl AffineSystem {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the free variables, ascending.
    pub fn free_vars(&self) -> &[usize] {
        &self.free_vars
    }

    /// Solved variables (larger index of each block) as affine forms over the
    /// free variables.
    pub fn solved(&self) -> &BTreeMap<usize, AffineForm> {
        &self.solved
    }

    /// Dimension of the cross-section, `k/2 + 1`.
    pub fn dimension(&self) -> usize {
        self.free_vars.len()
    }

    /// Any variable `x_v` as an affine form over the free variables.
    pub fn form(&self, var: usize) -> AffineForm {
        match self.solved.get(&var) {
            Some(f) => f.clone(),
            None => {
                let idx = self
                    .free_vars
                    .binary_search(&var)
                    .expect("variable is either free or solved");
                AffineForm::unit(self.dimension(), idx)
            }
        }
    }

    /// All `x_0, ..., x_k` at the given free values.
    pub fn evaluate(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.dimension());
        (0..=self.k).map(|v| self.form(v).eval(free)).collect()
    }

    /// Whether the block equations already force `x_k = x_0`.
    pub fn closes_circuit(&self) -> bool {
        self.form(self.k) == self.form(0)
    }
}

/// Solves the block equations of `p` for the larger index of every block.
///
/// Blocks are processed in increasing order of their larger index `j`, so
/// `x_j := x_i + x_{i-1} - x_{j-1}` only refers to variables that are already
/// free or solved.
pub fn build_affine_system(p: &PairPartition) -> AffineSystem {
    let k = p.k();
    let mut is_solved = vec![false; k + 1];
    for &(_, j) in p.blocks() {
        is_solved[j] = true;
    }
    let free_vars: Vec<usize> = (0..=k).filter(|&v| !is_solved[v]).collect();
    let dim = free_vars.len();
    assert_eq!(dim, k / 2 + 1, "cross-section must have k/2 + 1 free coordinates");

    let mut forms: Vec<Option<AffineForm>> = vec![None; k + 1];
    for (idx, &v) in free_vars.iter().enumerate() {
        forms[v] = Some(AffineForm::unit(dim, idx));
    }
    let mut blocks: Vec<(usize, usize)> = p.blocks().to_vec();
    blocks.sort_by_key(|&(_, j)| j);
    let mut solved = BTreeMap::new();
    for (i, j) in blocks {
        let get = |v: usize| {
            forms[v]
                .clone()
                .unwrap_or_else(|| panic!("x_{v} referenced before being solved"))
        };
        let mut f = get(i);
        f.add_scaled(&get(i - 1), 1);
        f.add_scaled(&get(j - 1), -1);
        forms[j] = Some(f.clone());
        solved.insert(j, f);
    }
    AffineSystem {
        k,
        free_vars,
        solved,
    }
}

/// Whether the cyclic closure `x_k = x_0` is imposed on the cross-section.
///
/// [`Circuit::Open`] is the cross-section of the `k/2` block equations alone.
/// [`Circuit::Closed`] also requires `x_k = x_0`, as the cyclic index
/// `p_{k+1} = p_1` of a trace does; partitions whose block equations do not
/// already imply it get volume zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Circuit {
    #[default]
    Open,
    Closed,
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Circuit::Open => "open",
            Circuit::Closed => "closed",
        })
    }
}

impl std::str::FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Circuit::Open),
            "closed" => Ok(Circuit::Closed),
            _ => Err(Error::Parse {
                kind: "circuit convention",
                input: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
        })
    }
}

/// How to compute a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

impl VolumeMethod {
    pub fn method(&self) -> Method {
        match self {
            VolumeMethod::Exact => Method::Exact,
            VolumeMethod::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Present exactly when `method == Method::Exact`.
    pub exact: Option<BigRational>,
    pub stderr: f64,
    pub samples: u64,
    pub method: Method,
}

impl VolumeEstimate {
    fn exact(q: BigRational) -> Self {
        Self {
            value: rational::to_f64(&q),
            exact: Some(q),
            stderr: 0.0,
            samples: 0,
            method: Method::Exact,
        }
    }

    fn zero(method: Method) -> Self {
        match method {
            Method::Exact => Self::exact(BigRational::zero()),
            Method::MonteCarlo => Self {
                value: 0.0,
                exact: None,
                stderr: 0.0,
                samples: 0,
                method,
            },
        }
    }
}

/// Exact rational volume of the cross-section.
pub fn exact_volume(s: &AffineSystem) -> Result<VolumeEstimate> {
    let dim = s.dimension();
    if dim > EXACT_DIMENSION_CAP {
        return Err(Error::ExactVolumeUnsupported {
            dimension: dim,
            cap: EXACT_DIMENSION_CAP,
        });
    }
    let forms: Vec<AffineForm> = s.solved.values().cloned().collect();
    let v = polytope::cube_section_volume(dim, &forms);
    debug_assert!(v >= BigRational::zero() && v <= BigRational::one());
    Ok(VolumeEstimate::exact(v))
}

/// Monte Carlo estimate from `samples` uniform points of the free cube.
///
/// Points are drawn in fixed chunks, each from its own stream derived from
/// `seed`, and hits are counted as integers, so the estimate does not depend
/// on the thread count.
pub fn mc_volume(s: &AffineSystem, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
    }
    let dim = s.dimension();
    let forms: Vec<&AffineForm> = s.solved.values().collect();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(seed, &[seed::TAG_MC_CHUNK, c]);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut y = vec![0.0; dim];
            let mut hits = 0u64;
            for _ in 0..count {
                for v in y.iter_mut() {
                    *v = rng.random::<f64>();
                }
                if forms.iter().all(|f| (0.0..=1.0).contains(&f.eval(&y))) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let value = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value,
        exact: None,
        stderr: (value * (1.0 - value) / samples as f64).sqrt(),
        samples,
        method: Method::MonteCarlo,
    })
}

/// `p_H(π)` under the default open-circuit convention.
pub fn hankel_volume(p: &PairPartition, method: VolumeMethod) -> Result<VolumeEstimate> {
    hankel_volume_with(p, method, Circuit::Open)
}

pub fn hankel_volume_with(
    p: &PairPartition,
    method: VolumeMethod,
    circuit: Circuit,
) -> Result<VolumeEstimate> {
    let system = build_affine_system(p);
    if circuit == Circuit::Closed && !system.closes_circuit() {
        if let VolumeMethod::Exact = method {
            if system.dimension() > EXACT_DIMENSION_CAP {
                return Err(Error::ExactVolumeUnsupported {
                    dimension: system.dimension(),
                    cap: EXACT_DIMENSION_CAP,
                });
            }
        }
        return Ok(VolumeEstimate::zero(method.method()));
    }
    match method {
        VolumeMethod::Exact => exact_volume(&system),
        VolumeMethod::MonteCarlo { samples, seed } => mc_volume(&system, samples, seed),
    }
}
