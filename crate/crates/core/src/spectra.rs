//! Eigenvalues, empirical spectral statistics and the trace-fluctuation
//! diagnostic.

use std::f64::consts::PI;

use nalgebra::linalg::SymmetricTridiagonal;
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_matrix, EnsembleSpec, Regime, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::hankel_volume::{Circuit, VolumeMethod};
use crate::limit_moments::{limit_moment_with, semicircle_moment};
use crate::{rational, seed};

/// Where a spectrum came from, when it was sampled from an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: EnsembleSpec,
    pub seed: u64,
}

/// Ascending eigenvalues of one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    eigenvalues: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl SpectralSample {
    /// Wraps a list of eigenvalues, sorting it.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self {
            eigenvalues,
            provenance: None,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e[i]` (coupling `i` and `i + 1`), by implicit QL with
/// Wilkinson shifts. `e` must have the same length as `d`; its last entry is
/// scratch. On failure returns the number of sweeps spent.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> std::result::Result<(), usize> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let mut total = 0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            total += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(total);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn eigen_with_seed(m: &SymmetricMatrix, seed: Option<u64>) -> Result<Vec<f64>> {
    let n = m.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let tri = SymmetricTridiagonal::new(m.as_matrix().clone());
    let mut d: Vec<f64> = tri.diagonal().iter().copied().collect();
    let mut e: Vec<f64> = tri.off_diagonal().iter().copied().collect();
    e.push(0.0);
    tridiagonal_eigenvalues(&mut d, &mut e).map_err(|iterations| Error::NoConvergence { iterations, seed })?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenvalues of `m`, ascending.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<SpectralSample> {
    Ok(SpectralSample {
        eigenvalues: eigen_with_seed(m, None)?,
        provenance: None,
    })
}

/// Samples a matrix from `spec` and returns its spectrum.
pub fn sample_spectrum(spec: &EnsembleSpec, seed: u64) -> Result<SpectralSample> {
    let m = sample_matrix(spec, seed)?;
    Ok(SpectralSample {
        eigenvalues: eigen_with_seed(&m, Some(seed))?,
        provenance: Some(Provenance { spec: *spec, seed }),
    })
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `(1/n) Σ λ_i^k`.
pub fn empirical_moment(s: &SpectralSample, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    if s.n() == 0 {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    Ok(compensated_sum(s.eigenvalues.iter().map(|x| x.powi(k as i32))) / s.n() as f64)
}

/// `tr(X^k)` through matrix products, independent of the eigensolver.
pub fn trace_power(m: &SymmetricMatrix, k: u32) -> f64 {
    let x = m.as_matrix();
    match k {
        0 => m.n() as f64,
        1 => m.trace(),
        2 => m.frobenius_squared(),
        _ => {
            // tr(X^a X^b) = Σ_ij (X^a)_ij (X^b)_ij for symmetric powers
            let a = k / 2;
            let mut pa = x.clone();
            for _ in 1..a {
                pa = &pa * x;
            }
            let pb = if k.is_multiple_of(2) { pa.clone() } else { &pa * x };
            compensated_sum(pa.iter().zip(pb.iter()).map(|(u, v)| u * v))
        }
    }
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 60;
pub const DEFAULT_HISTOGRAM_RANGE: (f64, f64) = (-3.0, 3.0);

/// Equal-width bins on `[lo, hi]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("empty histogram range [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.bins() as f64;
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x > self.hi {
            self.overflow += 1;
        } else {
            let w = (self.hi - self.lo) / self.bins() as f64;
            let i = (((x - self.lo) / w) as usize).min(self.bins() - 1);
            self.counts[i] += 1;
        }
    }

    /// Adds another histogram over the same bins.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if (self.lo, self.hi, self.bins()) != (other.lo, other.hi, other.bins()) {
            return Err(Error::InvalidArgument("histograms have different bins".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

pub fn esd_histogram(s: &SpectralSample, bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    let mut h = Histogram::new(bins, lo, hi)?;
    for &x in &s.eigenvalues {
        h.add(x);
    }
    Ok(h)
}

/// Distribution function of the standard semicircle law on `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Inverse of [`semicircle_cdf`] by bisection.
pub fn semicircle_quantile(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov distance between the empirical distribution and the
/// semicircle law, evaluated on both sides of every jump.
pub fn ks_distance_to_semicircle(s: &SpectralSample) -> f64 {
    let n = s.n() as f64;
    s.eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = semicircle_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Seed of trial `t` under master seed `master`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    seed::derive(master, &[seed::TAG_TRIAL, t as u64])
}

/// Per-trial output of [`run_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    /// `m_1, ..., m_kmax`
    pub moments: Vec<f64>,
    pub ks: f64,
    pub histogram: Histogram,
}

/// Samples `trials` spectra from `spec` with seeds [`trial_seed`]`(seed, t)`.
///
/// Results come back in trial order regardless of scheduling.
pub fn run_trials(
    spec: &EnsembleSpec,
    trials: usize,
    seed: u64,
    kmax: u32,
    bins: usize,
    range: (f64, f64),
) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::TooFewTrials { required: 1, got: 0 });
    }
    Histogram::new(bins, range.0, range.1)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let spectrum = sample_spectrum(spec, s)?;
            Ok(TrialOutcome {
                seed: s,
                moments: (1..=kmax).map(|k| empirical_moment(&spectrum, k)).collect::<Result<_>>()?,
                ks: ks_distance_to_semicircle(&spectrum),
                histogram: esd_histogram(&spectrum, bins, range.0, range.1)?,
            })
        })
        .collect()
}

/// Exact limiting moment `lim (1/n) E tr X^k` for a spec.
///
/// `weak_c1` and `iid` give semicircle moments; `constant_c2(c)` and
/// `hankel` give `M_k(c)` and `M_k(1)`. The correlation is read back from its
/// shortest decimal form, so `0.3` means `3/10`.
pub fn theoretical_moment(regime: &Regime, k: usize, circuit: Circuit) -> Result<BigRational> {
    let c = match *regime {
        Regime::WeakC1 { .. } | Regime::Iid => return Ok(semicircle_moment(k)),
        Regime::Hankel => rational::int(1),
        Regime::ConstantC2 { c } => rational::parse(&c.to_string())?,
    };
    let v = limit_moment_with(k, &c, VolumeMethod::Exact, circuit)?;
    Ok(v.exact.expect("exact method yields exact moments"))
}

/// Mean and standard error (sample standard deviation over `sqrt(trials)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    let t = values.len();
    if t < 2 {
        return Err(Error::TooFewTrials { required: 2, got: t });
    }
    let mean = compensated_sum(values.iter().copied()) / t as f64;
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (t - 1) as f64;
    Ok(Summary {
        mean,
        stderr: (var / t as f64).sqrt(),
        trials: t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: usize,
    /// `p/q` form of the limit.
    pub theoretical_exact: String,
    pub theoretical: f64,
    pub empirical_mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub n: usize,
    pub z: f64,
    pub flagged: bool,
}

/// Empirical moments against their limits; rows deviating by more than
/// `threshold` standard errors are flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub threshold: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub const DEFAULT_THRESHOLD: f64 = 4.0;

    /// `per_k` holds `(k, theory, per-trial empirical moments)`.
    pub fn build(n: usize, per_k: &[(usize, BigRational, Vec<f64>)], threshold: f64) -> Result<Self> {
        let rows = per_k
            .iter()
            .map(|(k, theory, values)| {
                let s = summarize(values)?;
                let theoretical = rational::to_f64(theory);
                let dev = s.mean - theoretical;
                let z = if s.stderr > 0.0 { dev / s.stderr } else if dev == 0.0 { 0.0 } else { dev.signum() * f64::INFINITY };
                Ok(MomentRow {
                    k: *k,
                    theoretical_exact: rational::format(theory),
                    theoretical,
                    empirical_mean: s.mean,
                    stderr: s.stderr,
                    trials: s.trials,
                    n,
                    z,
                    flagged: z.abs() > threshold,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { threshold, rows })
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

pub const MIN_CONCENTRATION_TRIALS: usize = 50;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub k: u32,
    pub fourth_central_moment: f64,
    pub ratio_to_n2: f64,
    /// Bootstrap standard error of `ratio_to_n2`.
    pub ratio_stderr: f64,
}

/// Fourth central moment of `tr X^k` across sizes, with a log-log trend.
///
/// The ratio counts as bounded when the least-squares slope of
/// `log(ratio)` against `log(n)` is at most two bootstrap standard errors
/// above zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub k: u32,
    pub trials: usize,
    pub rows: Vec<ConcentrationRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub bounded: bool,
}

fn fourth_central_moment(values: &[f64]) -> f64 {
    let t = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / t;
    compensated_sum(values.iter().map(|v| (v - mean).powi(4))) / t
}

fn log_log_slope(ns: &[usize], ratios: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Samples `tr X^k` for `trials` matrices at each size in `n_list`.
///
/// `spec.n` is ignored; each size reuses the regime and entry law.
pub fn concentration_statistic(
    spec: &EnsembleSpec,
    k: u32,
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials < MIN_CONCENTRATION_TRIALS {
        return Err(Error::TooFewTrials {
            required: MIN_CONCENTRATION_TRIALS,
            got: trials,
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("trace power must be at least 1".into()));
    }
    if n_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matrix sizes".into()));
    }
    let mut traces = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sized = spec.resized(n)?;
        let values = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = seed::derive(seed, &[seed::TAG_TRIAL, n as u64, t as u64]);
                Ok(trace_power(&sample_matrix(&sized, s)?, k))
            })
            .collect::<Result<Vec<f64>>>()?;
        traces.push(values);
    }

    let n2 = |n: usize| (n as f64).powi(2);
    let ratios: Vec<f64> = n_list
        .iter()
        .zip(&traces)
        .map(|(&n, v)| fourth_central_moment(v) / n2(n))
        .collect();
    let slope = log_log_slope(n_list, &ratios);

    // resample trials independently at each size; replicate b pairs across sizes for the slope
    let mut boot_ratios = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); n_list.len()];
    for (i, (&n, v)) in n_list.iter().zip(&traces).enumerate() {
        let mut rng = seed::rng(seed, &[seed::TAG_BOOTSTRAP, n as u64, k as u64]);
        let mut buf = vec![0.0; trials];
        for _ in 0..BOOTSTRAP_RESAMPLES {
            for slot in buf.iter_mut() {
                *slot = v[rng.random_range(0..trials)];
            }
            boot_ratios[i].push(fourth_central_moment(&buf) / n2(n));
        }
    }
    let sd = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let boot_slopes: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|b| {
            let r: Vec<f64> = boot_ratios.iter().map(|col| col[b]).collect();
            log_log_slope(n_list, &r)
        })
        .collect();
    let slope_stderr = sd(&boot_slopes);

    let rows = n_list
        .iter()
        .zip(&traces)
        .zip(&boot_ratios)
        .map(|((&n, v), boot)| {
            let m4 = fourth_central_moment(v);
            ConcentrationRow {
                n,
                k,
                fourth_central_moment: m4,
                ratio_to_n2: m4 / n2(n),
                ratio_stderr: sd(boot),
            }
        })
        .collect();
    Ok(ConcentrationReport {
        k,
        trials,
        rows,
        slope,
        slope_stderr,
        bounded: slope <= 2.0 * slope_stderr,
    })
}
