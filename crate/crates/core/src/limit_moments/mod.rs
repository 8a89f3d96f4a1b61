//! Limiting spectral moments.
//!
//! Under weak correlations the limit is the semicircle law, whose even
//! moments are Catalan numbers. Under constant correlation `c` the limit
//! `ν_c` has moments
//!
//! ```text
//! M_k(c) = Σ_{π ∈ PP(k)} c^{k/2 - h(π)} · p_H(π)      (k even, 0^0 = 1)
//! ```
//!
//! and vanishing odd moments. [`MomentPolynomial`] keeps `M_k` as a
//! polynomial in `c` so one volume computation serves every `c`.

mod cumulants;

pub use cumulants::{
    check_free_convolution, check_free_convolution_with, free_cumulants_to_moments,
    moments_to_free_cumulants, CumulantSequence, FreeConvolutionReport, MomentSequence,
    MomentSource, OrderCheck, DEFAULT_FREE_CONVOLUTION_KMAX,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hankel_volume::{hankel_volume_with, Circuit, VolumeEstimate, VolumeMethod};
use crate::partitions::{enumerate_pair_partitions, PairPartition};
use crate::{rational, seed};

/// `m`-th Catalan number, `binom(2m, m) / (m + 1)`.
pub fn catalan(m: u32) -> BigInt {
    let mut c = BigInt::from(1);
    for i in 0..m {
        c = c * (2 * (2 * i + 1)) / (i + 2);
    }
    c
}

/// Moments of the standard semicircle law: `0` for odd `k`, `C_{k/2}` for even `k`.
pub fn semicircle_moment(k: usize) -> BigRational {
    if k % 2 == 1 {
        BigRational::zero()
    } else {
        BigRational::from_integer(catalan((k / 2) as u32))
    }
}

/// One pair partition's contribution to `M_k`.
#[derive(Debug, Clone)]
pub struct PartitionTerm {
    pub partition: PairPartition,
    pub height: usize,
    pub volume: VolumeEstimate,
}

impl PartitionTerm {
    /// Power of `c` attached to this partition, `k/2 - h(π)`.
    pub fn exponent(&self) -> usize {
        self.partition.k() / 2 - self.height
    }
}

/// `M_k(c)` for even `k` as a polynomial in `c`.
#[derive(Debug, Clone)]
pub struct MomentPolynomial {
    k: usize,
    circuit: Circuit,
    terms: Vec<PartitionTerm>,
}

impl MomentPolynomial {
    /// Computes the volume of every pair partition of `{1, ..., k}`.
    ///
    /// Monte Carlo volumes use a separate stream per partition, derived from
    /// the method's seed and the partition's canonical index.
    pub fn compute(k: usize, method: VolumeMethod, circuit: Circuit) -> Result<Self> {
        let partitions = enumerate_pair_partitions(k)?;
        let terms = partitions
            .into_par_iter()
            .enumerate()
            .map(|(idx, partition)| {
                let method = match method {
                    VolumeMethod::Exact => VolumeMethod::Exact,
                    VolumeMethod::MonteCarlo { samples, seed: s } => VolumeMethod::MonteCarlo {
                        samples,
                        seed: seed::derive(s, &[seed::TAG_PARTITION, k as u64, idx as u64]),
                    },
                };
                let volume = hankel_volume_with(&partition, method, circuit)?;
                Ok(PartitionTerm {
                    height: partition.height(),
                    partition,
                    volume,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k, circuit, terms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn circuit(&self) -> Circuit {
        self.circuit
    }

    pub fn terms(&self) -> &[PartitionTerm] {
        &self.terms
    }

    /// Exact coefficients of `c^0, ..., c^{k/2}`; `None` for Monte Carlo volumes.
    pub fn coefficients(&self) -> Option<Vec<BigRational>> {
        let mut coeffs = vec![BigRational::zero(); self.k / 2 + 1];
        for t in &self.terms {
            coeffs[t.exponent()] += t.volume.exact.as_ref()?;
        }
        Some(coeffs)
    }

    /// Evaluates `M_k(c)`; exact when every volume is exact.
    pub fn evaluate(&self, c: &BigRational) -> Result<MomentValue> {
        rational::check_unit_interval(c)?;
        if let Some(coeffs) = self.coefficients() {
            let exact = coeffs
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (e, a)| acc + a * rational::pow(c, e));
            return Ok(MomentValue::exact(self.k, exact));
        }
        let cf = rational::to_f64(c);
        let (mut value, mut var) = (0.0, 0.0);
        for t in &self.terms {
            let w = cf.powi(t.exponent() as i32);
            value += w * t.volume.value;
            var += (w * t.volume.stderr).powi(2);
        }
        Ok(MomentValue {
            k: self.k,
            exact: None,
            value,
            stderr: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentValue {
    pub k: usize,
    pub exact: Option<BigRational>,
    pub value: f64,
    pub stderr: f64,
}

impl MomentValue {
    fn exact(k: usize, q: BigRational) -> Self {
        Self {
            k,
            value: rational::to_f64(&q),
            exact: Some(q),
            stderr: 0.0,
        }
    }
}

/// `M_k(c)` under the default open-circuit volumes.
pub fn limit_moment(k: usize, c: &BigRational, method: VolumeMethod) -> Result<MomentValue> {
    limit_moment_with(k, c, method, Circuit::Open)
}

pub fn limit_moment_with(
    k: usize,
    c: &BigRational,
    method: VolumeMethod,
    circuit: Circuit,
) -> Result<MomentValue> {
    if k == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    rational::check_unit_interval(c)?;
    if k % 2 == 1 {
        return Ok(MomentValue::exact(k, BigRational::zero()));
    }
    MomentPolynomial::compute(k, method, circuit)?.evaluate(c)
}

/// Moments of the Hankel limit `γ_H`, i.e. `M_k(1)` with exact volumes.
pub fn gamma_h_moment(k: usize) -> Result<BigRational> {
    gamma_h_moment_with(k, Circuit::Open)
}

pub fn gamma_h_moment_with(k: usize, circuit: Circuit) -> Result<BigRational> {
    let v = limit_moment_with(k, &rational::int(1), VolumeMethod::Exact, circuit)?;
    Ok(v.exact.expect("exact method yields exact moments"))
}
