//! Free cumulants and the free-convolution decomposition of `ν_c`.
//!
//! Moments and free cumulants are linked through non-crossing set
//! partitions: `m_n = Σ_{σ ∈ NC(n)} Π_{B ∈ σ} κ_{|B|}`. Free cumulants add
//! under free convolution and a dilation by `s` scales `κ_n` by `s^n`, so
//! `ν_c = (semicircle, variance 1-c) ⊞ (γ_H, variance c)` holds exactly when
//!
//! ```text
//! κ_{2k}(ν_c) = (1-c)^k κ_{2k}(semicircle) + c^k κ_{2k}(γ_H)
//! ```
//!
//! for every `k`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{semicircle_moment, MomentPolynomial};
use crate::error::{Error, Result};
use crate::hankel_volume::{Circuit, VolumeMethod};
use crate::partitions::{enumerate_noncrossing_set_partitions, NONCROSSING_SET_PARTITION_CAP};
use crate::rational;

pub const DEFAULT_FREE_CONVOLUTION_KMAX: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum MomentSource {
    Semicircle,
    /// `ν_c` for the given correlation and volume convention.
    Limit { c: BigRational, circuit: Circuit },
    Other,
}

/// Moments `m_1, ..., m_kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub source: MomentSource,
    values: Vec<BigRational>,
}

impl MomentSequence {
    pub fn new(values: Vec<BigRational>) -> Self {
        Self {
            source: MomentSource::Other,
            values,
        }
    }

    pub fn semicircle(kmax: usize) -> Self {
        Self {
            source: MomentSource::Semicircle,
            values: (1..=kmax).map(semicircle_moment).collect(),
        }
    }

    /// Exact moments of `ν_c` up to `kmax`.
    pub fn limit(kmax: usize, c: &BigRational, circuit: Circuit) -> Result<Self> {
        rational::check_unit_interval(c)?;
        let mut values = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            if k % 2 == 1 {
                values.push(BigRational::zero());
            } else {
                let poly = MomentPolynomial::compute(k, VolumeMethod::Exact, circuit)?;
                values.push(poly.evaluate(c)?.exact.expect("exact volumes"));
            }
        }
        Ok(Self {
            source: MomentSource::Limit {
                c: c.clone(),
                circuit,
            },
            values,
        })
    }

    pub fn kmax(&self) -> usize {
        self.values.len()
    }

    /// `m_k` for `1 <= k <= kmax`.
    pub fn get(&self, k: usize) -> &BigRational {
        &self.values[k - 1]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }
}

/// Free cumulants `κ_1, ..., κ_kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSequence {
    values: Vec<BigRational>,
}

impl CumulantSequence {
    pub fn new(values: Vec<BigRational>) -> Self {
        Self { values }
    }

    pub fn kmax(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, n: usize) -> &BigRational {
        &self.values[n - 1]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }
}

/// For each `n`, the multiset of block sizes of every non-crossing partition
/// of `{1..n}` other than the one-block partition, with multiplicities.
fn block_profiles(n: usize) -> &'static BTreeMap<Vec<usize>, u64> {
    static PROFILES: OnceLock<Vec<BTreeMap<Vec<usize>, u64>>> = OnceLock::new();
    let all = PROFILES.get_or_init(|| {
        (0..=NONCROSSING_SET_PARTITION_CAP)
            .map(|n| {
                let mut counts = BTreeMap::new();
                if n == 0 {
                    return counts;
                }
                for p in enumerate_noncrossing_set_partitions(n).expect("within cap") {
                    if p.blocks().len() == 1 {
                        continue;
                    }
                    let mut sizes: Vec<usize> = p.block_sizes().collect();
                    sizes.sort_unstable();
                    *counts.entry(sizes).or_insert(0) += 1;
                }
                counts
            })
            .collect()
    });
    &all[n]
}

fn check_kmax(kmax: usize) -> Result<()> {
    if kmax > NONCROSSING_SET_PARTITION_CAP {
        return Err(Error::EnumerationCap {
            what: "moment-cumulant transform order",
            requested: kmax,
            cap: NONCROSSING_SET_PARTITION_CAP,
        });
    }
    Ok(())
}

fn partial_sum(n: usize, kappa: &[BigRational]) -> BigRational {
    block_profiles(n)
        .iter()
        .fold(BigRational::zero(), |acc, (sizes, &count)| {
            let prod = sizes
                .iter()
                .fold(BigRational::one(), |p, &s| p * &kappa[s - 1]);
            acc + prod * rational::int(count as i64)
        })
}

/// Inverts `m_n = Σ_{σ ∈ NC(n)} Π κ_{|B|}` order by order.
pub fn moments_to_free_cumulants(m: &MomentSequence) -> Result<CumulantSequence> {
    check_kmax(m.kmax())?;
    let mut kappa: Vec<BigRational> = Vec::with_capacity(m.kmax());
    for n in 1..=m.kmax() {
        let rest = partial_sum(n, &kappa);
        kappa.push(m.get(n) - rest);
    }
    Ok(CumulantSequence::new(kappa))
}

/// Forward map `κ -> m`.
pub fn free_cumulants_to_moments(kappa: &CumulantSequence) -> Result<MomentSequence> {
    check_kmax(kappa.kmax())?;
    let values = (1..=kappa.kmax())
        .map(|n| kappa.get(n) + partial_sum(n, kappa.values()))
        .collect();
    Ok(MomentSequence::new(values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheck {
    /// `2k`
    pub order: usize,
    /// `κ_{2k}(ν_c)`
    pub lhs: BigRational,
    /// `(1-c)^k κ_{2k}(semicircle)`
    pub semicircle_term: BigRational,
    /// `c^k κ_{2k}(γ_H)`
    pub hankel_term: BigRational,
    pub rhs: BigRational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeConvolutionReport {
    pub c: BigRational,
    pub circuit: Circuit,
    pub orders: Vec<OrderCheck>,
}

impl FreeConvolutionReport {
    pub fn all_hold(&self) -> bool {
        self.orders.iter().all(|o| o.holds)
    }
}

/// Checks the free-cumulant identity for `ν_c` at every even order up to
/// `kmax`, with open-circuit volumes.
pub fn check_free_convolution(c: &BigRational, kmax: usize) -> Result<FreeConvolutionReport> {
    check_free_convolution_with(c, kmax, Circuit::Open)
}

pub fn check_free_convolution_with(
    c: &BigRational,
    kmax: usize,
    circuit: Circuit,
) -> Result<FreeConvolutionReport> {
    rational::check_unit_interval(c)?;
    if kmax < 2 || kmax % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "kmax must be an even integer >= 2 (got {kmax})"
        )));
    }
    let nu_c = moments_to_free_cumulants(&MomentSequence::limit(kmax, c, circuit)?)?;
    let semicircle = moments_to_free_cumulants(&MomentSequence::semicircle(kmax))?;
    let gamma_h = moments_to_free_cumulants(&MomentSequence::limit(kmax, &rational::int(1), circuit)?)?;
    let one_minus_c = BigRational::one() - c;

    let orders = (1..=kmax / 2)
        .map(|k| {
            let order = 2 * k;
            let semicircle_term = rational::pow(&one_minus_c, k) * semicircle.get(order);
            let hankel_term = rational::pow(c, k) * gamma_h.get(order);
            let rhs = &semicircle_term + &hankel_term;
            let lhs = nu_c.get(order).clone();
            OrderCheck {
                order,
                holds: lhs == rhs,
                lhs,
                semicircle_term,
                hankel_term,
                rhs,
            }
        })
        .collect();
    Ok(FreeConvolutionReport {
        c: c.clone(),
        circuit,
        orders,
    })
}
