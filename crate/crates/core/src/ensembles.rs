//! Random symmetric matrices with independent skew-diagonals.
//!
//! The unscaled entry `a(p, q)` (1-based, `p <= q`) lives on skew-diagonal
//! `r = p + q`. Different skew-diagonals are independent; entries on the same
//! skew-diagonal are correlated according to the [`Regime`]. The matrix handed
//! to the spectral code is `X(p, q) = a(p, q) / sqrt(n)`, mirrored below the
//! diagonal.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Stationary AR(1) along each skew-diagonal: `Cov = rho^|p - p'|`.
    WeakC1 { rho: f64 },
    /// Equicorrelated skew-diagonals: `Cov = c` for distinct entries.
    ConstantC2 { c: f64 },
    /// One value per skew-diagonal.
    Hankel,
    Iid,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::WeakC1 { .. } => "weak_c1",
            Regime::ConstantC2 { .. } => "constant_c2",
            Regime::Hankel => "hankel",
            Regime::Iid => "iid",
        }
    }

    /// Within-skew-diagonal covariance at lag `tau >= 1`.
    pub fn lag_covariance(&self, tau: usize) -> f64 {
        match *self {
            Regime::WeakC1 { rho } => rho.powi(tau as i32),
            Regime::ConstantC2 { c } => c,
            Regime::Hankel => 1.0,
            Regime::Iid => 0.0,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::WeakC1 { rho } => write!(f, "weak_c1(rho={rho})"),
            Regime::ConstantC2 { c } => write!(f, "constant_c2(c={c})"),
            other => f.write_str(other.name()),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    /// Accepts the [`Display`](fmt::Display) forms `weak_c1(rho=0.5)`,
    /// `constant_c2(c=0.25)`, `hankel` and `iid`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            kind: "regime",
            input: s.to_string(),
        };
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let param = |prefix: &str, key: &str| -> Option<f64> {
            let inner = t.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.strip_prefix(key)?.strip_prefix('=')?.parse().ok()
        };
        match t.as_str() {
            "hankel" => Ok(Regime::Hankel),
            "iid" => Ok(Regime::Iid),
            _ => {
                if let Some(rho) = param("weak_c1", "rho") {
                    Ok(Regime::WeakC1 { rho })
                } else if let Some(c) = param("constant_c2", "c") {
                    Ok(Regime::ConstantC2 { c })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDist {
    #[default]
    Gaussian,
    /// Fair `±1` coins; only for `hankel` and `iid`.
    Rademacher,
}

impl fmt::Display for EntryDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryDist::Gaussian => "gaussian",
            EntryDist::Rademacher => "rademacher",
        })
    }
}

impl std::str::FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(EntryDist::Gaussian),
            "rademacher" => Ok(EntryDist::Rademacher),
            _ => Err(Error::Parse {
                kind: "entry distribution",
                input: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub regime: Regime,
    #[serde(default)]
    pub entry: EntryDist,
}

impl EnsembleSpec {
    /// Validated Gaussian spec.
    pub fn new(n: usize, regime: Regime) -> Result<Self> {
        Self::with_entry(n, regime, EntryDist::Gaussian)
    }

    pub fn with_entry(n: usize, regime: Regime, entry: EntryDist) -> Result<Self> {
        let spec = Self { n, regime, entry };
        spec.validate()?;
        Ok(spec)
    }

    /// Same regime and entry law at another size.
    pub fn resized(&self, n: usize) -> Result<Self> {
        Self::with_entry(n, self.regime, self.entry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        match self.regime {
            Regime::WeakC1 { rho } if !(0.0..1.0).contains(&rho) => {
                return Err(Error::InvalidSpec(format!("rho must lie in [0, 1) (got {rho})")));
            }
            Regime::ConstantC2 { c } if !(0.0..=1.0).contains(&c) => {
                return Err(Error::CorrelationOutOfRange(c.to_string()));
            }
            _ => {}
        }
        if self.entry == EntryDist::Rademacher && !matches!(self.regime, Regime::Hankel | Regime::Iid) {
            return Err(Error::InvalidSpec(format!(
                "rademacher entries are only available for hankel and iid (got {})",
                self.regime.name()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={}", self.regime, self.n)?;
        if self.entry != EntryDist::Gaussian {
            write!(f, " {}", self.entry)?;
        }
        Ok(())
    }
}

/// Smallest row index `p` (1-based) with `p <= q`, `p + q = r`, `q <= n`.
fn first_free_row(n: usize, r: usize) -> usize {
    r.saturating_sub(n).max(1)
}

/// Number of free positions on skew-diagonal `r`.
pub fn skew_diagonal_len(n: usize, r: usize) -> usize {
    if r < 2 || r > 2 * n {
        return 0;
    }
    r / 2 + 1 - first_free_row(n, r)
}

/// Unscaled entries `a(p, r - p)` for `p = max(1, r - n), ..., floor(r / 2)`.
///
/// Each skew-diagonal draws from its own stream, derived from `(seed, n, r)`,
/// so the result does not depend on generation order.
pub fn sample_skew_diagonal(spec: &EnsembleSpec, seed: u64, r: usize) -> Vec<f64> {
    let len = skew_diagonal_len(spec.n, r);
    let mut rng = seed::rng(seed, &[seed::TAG_SKEW_DIAGONAL, spec.n as u64, r as u64]);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match spec.entry {
            EntryDist::Gaussian => rng.sample(StandardNormal),
            EntryDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    };
    match spec.regime {
        Regime::Iid => (0..len).map(|_| draw(&mut rng)).collect(),
        Regime::Hankel => {
            let z = draw(&mut rng);
            vec![z; len]
        }
        Regime::ConstantC2 { c } => {
            let z = draw(&mut rng);
            let (a, b) = (c.sqrt(), (1.0 - c).sqrt());
            (0..len).map(|_| a * z + b * draw(&mut rng)).collect()
        }
        Regime::WeakC1 { rho } => {
            let innovation = (1.0 - rho * rho).sqrt();
            let mut out = Vec::with_capacity(len);
            let mut prev = draw(&mut rng);
            for i in 0..len {
                if i > 0 {
                    prev = rho * prev + innovation * draw(&mut rng);
                }
                out.push(prev);
            }
            out
        }
    }
}

/// Dense, exactly symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Rejects non-square, non-symmetric or non-finite input.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument(format!(
                "matrix must be square (got {}x{})",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for p in 0..n {
            for q in p..n {
                if !m[(p, q)].is_finite() {
                    return Err(Error::InvalidArgument(format!("entry ({p}, {q}) is not finite")));
                }
                if m[(p, q)].to_bits() != m[(q, p)].to_bits() {
                    return Err(Error::InvalidArgument(format!("entries ({p}, {q}) and ({q}, {p}) differ")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_squared(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Samples `X = a / sqrt(n)` for `spec`; deterministic in `(spec, seed)`.
pub fn sample_matrix(spec: &EnsembleSpec, seed: u64) -> Result<SymmetricMatrix> {
    spec.validate()?;
    let n = spec.n;
    let diagonals: Vec<Vec<f64>> = (2..=2 * n)
        .into_par_iter()
        .map(|r| sample_skew_diagonal(spec, seed, r))
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for (r, values) in (2..=2 * n).zip(&diagonals) {
        let p0 = first_free_row(n, r);
        for (i, a) in values.iter().enumerate() {
            let p = p0 + i;
            let q = r - p;
            let x = a * scale;
            m[(p - 1, q - 1)] = x;
            m[(q - 1, p - 1)] = x;
        }
    }
    Ok(SymmetricMatrix(m))
}

pub const MIN_COVARIANCE_TRIALS: usize = 30;
pub const MAX_COVARIANCE_LAG: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceCheck {
    pub statistic: String,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `(estimate - target) / stderr`; zero when both the deviation and the
    /// standard error vanish.
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub spec: EnsembleSpec,
    pub trials: usize,
    pub checks: Vec<CovarianceCheck>,
}

impl CovarianceReport {
    pub fn any_flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flagged)
    }

    pub fn get(&self, statistic: &str) -> Option<&CovarianceCheck> {
        self.checks.iter().find(|c| c.statistic == statistic)
    }
}

/// Per-trial averages over one sampled matrix of unscaled entries.
fn trial_statistics(spec: &EnsembleSpec, seed: u64) -> Vec<Option<f64>> {
    let n = spec.n;
    let diagonals: Vec<Vec<f64>> = (2..=2 * n).map(|r| sample_skew_diagonal(spec, seed, r)).collect();
    let mut sums = [0.0; 3 + MAX_COVARIANCE_LAG];
    let mut counts = vec![0usize; 3 + MAX_COVARIANCE_LAG];
    for d in &diagonals {
        for &a in d {
            sums[0] += a;
            sums[1] += a * a;
        }
        counts[0] += d.len();
        counts[1] += d.len();
        for tau in 1..=MAX_COVARIANCE_LAG {
            for w in d.windows(tau + 1) {
                sums[1 + tau] += w[0] * w[tau];
            }
            counts[1 + tau] += d.len().saturating_sub(tau);
        }
    }
    // pairs of entries on neighbouring skew-diagonals, aligned by position
    let cross = 2 + MAX_COVARIANCE_LAG;
    for pair in diagonals.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            sums[cross] += a * b;
        }
        counts[cross] += pair[0].len().min(pair[1].len());
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Compares empirical entry statistics with the targets implied by the spec,
/// flagging deviations of more than four standard errors.
///
/// Statistics are averaged within each sampled matrix and the standard error
/// is taken across independent trials.
pub fn validate_covariance(spec: &EnsembleSpec, trials: usize, seed: u64) -> Result<CovarianceReport> {
    spec.validate()?;
    if trials < MIN_COVARIANCE_TRIALS {
        return Err(Error::TooFewTrials {
            required: MIN_COVARIANCE_TRIALS,
            got: trials,
        });
    }
    let per_trial: Vec<Vec<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| trial_statistics(spec, seed::derive(seed, &[seed::TAG_TRIAL, t as u64])))
        .collect();

    let mut names = vec!["mean".to_string(), "variance".to_string()];
    let mut targets = vec![0.0, 1.0];
    for tau in 1..=MAX_COVARIANCE_LAG {
        names.push(format!("lag{tau}_covariance"));
        targets.push(spec.regime.lag_covariance(tau));
    }
    names.push("cross_diagonal_covariance".into());
    targets.push(0.0);

    let mut checks = Vec::new();
    for (j, (name, target)) in names.into_iter().zip(targets).enumerate() {
        let values: Vec<f64> = per_trial.iter().filter_map(|s| s[j]).collect();
        if values.len() < trials {
            continue;
        }
        let (estimate, stderr) = mean_and_stderr(&values);
        let deviation = estimate - target;
        let (z, flagged) = if stderr > 0.0 {
            (deviation / stderr, deviation.abs() > 4.0 * stderr)
        } else {
            let flagged = deviation.abs() > 1e-12;
            (if flagged { deviation.signum() * f64::INFINITY } else { 0.0 }, flagged)
        };
        checks.push(CovarianceCheck {
            statistic: name,
            target,
            estimate,
            stderr,
            z,
            flagged,
        });
    }
    Ok(CovarianceReport {
        spec: *spec,
        trials,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, regime: Regime) -> EnsembleSpec {
        EnsembleSpec::new(n, regime).unwrap()
    }

    #[test]
    fn validation() {
        assert!(EnsembleSpec::new(0, Regime::Iid).is_err());
        assert!(EnsembleSpec::new(4, Regime::WeakC1 { rho: 1.0 }).is_err());
        assert!(EnsembleSpec::new(4, Regime::WeakC1 { rho: -0.1 }).is_err());
        assert!(EnsembleSpec::new(4, Regime::WeakC1 { rho: 0.0 }).is_ok());
        assert!(EnsembleSpec::new(4, Regime::ConstantC2 { c: 1.0 }).is_ok());
        assert!(matches!(
            EnsembleSpec::new(4, Regime::ConstantC2 { c: 1.5 }),
            Err(Error::CorrelationOutOfRange(_))
        ));
        assert!(EnsembleSpec::new(4, Regime::ConstantC2 { c: f64::NAN }).is_err());
        assert!(EnsembleSpec::with_entry(4, Regime::Hankel, EntryDist::Rademacher).is_ok());
        assert!(EnsembleSpec::with_entry(4, Regime::ConstantC2 { c: 0.5 }, EntryDist::Rademacher).is_err());
    }

    #[test]
    fn regime_round_trips_through_display() {
        for r in [
            Regime::WeakC1 { rho: 0.5 },
            Regime::ConstantC2 { c: 0.25 },
            Regime::Hankel,
            Regime::Iid,
        ] {
            assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
        }
        assert_eq!(" weak_c1( rho = 0.3 )".parse::<Regime>().unwrap(), Regime::WeakC1 { rho: 0.3 });
        for bad in ["", "toeplitz", "weak_c1", "weak_c1(c=0.5)", "constant_c2(c=x)"] {
            assert!(bad.parse::<Regime>().is_err(), "{bad}");
        }
    }

    #[test]
    fn skew_diagonal_lengths_cover_upper_triangle() {
        for n in 1..=9 {
            let total: usize = (2..=2 * n).map(|r| skew_diagonal_len(n, r)).sum();
            assert_eq!(total, n * (n + 1) / 2);
        }
        assert_eq!(skew_diagonal_len(3, 4), 2); // (1,3), (2,2)
        assert_eq!(skew_diagonal_len(3, 6), 1); // (3,3)
    }

    #[test]
    fn hankel_structure() {
        let m = sample_matrix(&spec(3, Regime::Hankel), 5).unwrap();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        assert_eq!(m[(0, 2)], m[(1, 1)]);
        assert_eq!(m[(1, 1)], m[(2, 0)]);
        let m = sample_matrix(&spec(6, Regime::Hankel), 5).unwrap();
        for p in 0..6 {
            for q in 0..6 {
                if p + 1 < 6 && q > 0 {
                    assert_eq!(m[(p, q)], m[(p + 1, q - 1)]);
                }
            }
        }
    }

    #[test]
    fn exact_symmetry_and_reproducibility() {
        for regime in [
            Regime::Iid,
            Regime::Hankel,
            Regime::ConstantC2 { c: 0.3 },
            Regime::WeakC1 { rho: 0.7 },
        ] {
            let s = spec(17, regime);
            let a = sample_matrix(&s, 99).unwrap();
            assert!(SymmetricMatrix::new(a.as_matrix().clone()).is_ok());
            assert_eq!(a, sample_matrix(&s, 99).unwrap());
            assert_ne!(a, sample_matrix(&s, 100).unwrap());
        }
    }

    #[test]
    fn constant_c2_at_one_is_hankel() {
        let a = sample_matrix(&spec(12, Regime::ConstantC2 { c: 1.0 }), 3).unwrap();
        let b = sample_matrix(&spec(12, Regime::Hankel), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let s = EnsembleSpec::with_entry(8, Regime::Iid, EntryDist::Rademacher).unwrap();
        let m = sample_matrix(&s, 1).unwrap();
        let scale = (8f64).sqrt();
        assert!(m.as_matrix().iter().all(|x| (x * scale).abs() == 1.0));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        assert!(SymmetricMatrix::new(m).is_err());
        assert!(SymmetricMatrix::new(DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(SymmetricMatrix::new(m).is_err());
    }

    #[test]
    fn constant_c2_covariance() {
        let report = validate_covariance(&spec(64, Regime::ConstantC2 { c: 0.5 }), 200, 7).unwrap();
        let lag = report.get("lag1_covariance").unwrap();
        assert!((lag.estimate - 0.5).abs() <= 4.0 * lag.stderr, "{lag:?}");
        assert!(!report.any_flagged(), "{report:?}");
    }

    #[test]
    fn iid_covariance() {
        let report = validate_covariance(&spec(40, Regime::Iid), 60, 8).unwrap();
        assert!(!report.any_flagged(), "{report:?}");
        assert_eq!(report.checks.len(), 6);
    }

    #[test]
    fn weak_c1_lag_two() {
        let report = validate_covariance(&spec(64, Regime::WeakC1 { rho: 0.5 }), 100, 9).unwrap();
        let lag = report.get("lag2_covariance").unwrap();
        assert_eq!(lag.target, 0.25);
        assert!(!lag.flagged, "{lag:?}");
        assert!(!report.any_flagged(), "{report:?}");
    }

    #[test]
    fn rademacher_hankel_has_zero_error_statistics() {
        let s = EnsembleSpec::with_entry(20, Regime::Hankel, EntryDist::Rademacher).unwrap();
        let report = validate_covariance(&s, 30, 4).unwrap();
        let var = report.get("variance").unwrap();
        assert_eq!((var.estimate, var.stderr, var.z), (1.0, 0.0, 0.0));
        assert!(!report.any_flagged(), "{report:?}");
    }

    #[test]
    fn hankel_lags_are_far_from_iid_target() {
        let report = validate_covariance(&spec(30, Regime::Hankel), 40, 2).unwrap();
        assert!(!report.any_flagged());
        let lag = report.get("lag1_covariance").unwrap();
        assert!(lag.estimate.abs() > 4.0 * lag.stderr);
    }

    #[test]
    fn too_few_trials() {
        assert_eq!(
            validate_covariance(&spec(8, Regime::Iid), 29, 0).unwrap_err(),
            Error::TooFewTrials { required: 30, got: 29 }
        );
    }

    #[test]
    fn scaled_entry_variance_is_one_over_n() {
        let n = 200;
        let m = sample_matrix(&spec(n, Regime::WeakC1 { rho: 0.5 }), 12).unwrap();
        let mean_sq = m.frobenius_squared() / (n * n) as f64;
        assert!((mean_sq * n as f64 - 1.0).abs() < 0.05, "{mean_sq}");
    }
}
