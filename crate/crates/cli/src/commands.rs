use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;
use skewdiag::ensembles::{sample_matrix, EnsembleSpec, EntryDist, Regime};
use skewdiag::hankel_volume::{hankel_volume_with, Circuit, VolumeMethod, EXACT_DIMENSION_CAP};
use skewdiag::limit_moments::{check_free_convolution_with, limit_moment_with, MomentPolynomial};
use skewdiag::partitions::{count_noncrossing, enumerate_pair_partitions, PairPartition};
use skewdiag::rational;
use skewdiag::spectra::{
    concentration_statistic, run_trials, theoretical_moment, Histogram, MomentReport, MomentRow,
    DEFAULT_HISTOGRAM_BINS, DEFAULT_HISTOGRAM_RANGE,
};

use crate::args::{
    CompareArgs, ConcentrationArgs, EnsembleArgs, FreeconvArgs, MethodArg, MomentsArgs, PartitionsArgs,
    RegimeArg, SimulateArgs, VolumeArgs,
};
use crate::output::OutputSet;
use crate::{RunOutcome, Status};

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_MOMENTS_KMAX: usize = 8;
pub const DEFAULT_N: usize = 1024;
pub const DEFAULT_TRIALS: usize = 20;
pub const SIMULATED_MOMENTS: u32 = 8;
pub const DEFAULT_COMPARE_KMAX: usize = 6;
pub const DEFAULT_CONCENTRATION_K: [u32; 2] = [2, 4];
pub const DEFAULT_CONCENTRATION_SIZES: [usize; 4] = [128, 256, 512, 1024];
pub const DEFAULT_CONCENTRATION_TRIALS: usize = 100;

/// Values shared by every subcommand after flags, config and environment
/// have been resolved.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub circuit: Circuit,
    pub out_dir: PathBuf,
}

impl Context {
    fn finish(&self, out: OutputSet, command: &str, config: serde_json::Value, status: Status, stdout: String) -> Result<RunOutcome> {
        let mut config = config;
        config["seed"] = json!(self.seed);
        config["circuit"] = json!(self.circuit);
        let manifest = out.finish(command, self.seed, config)?;
        Ok(RunOutcome {
            status,
            stdout,
            manifest,
        })
    }
}

fn parse_c(s: &str) -> Result<BigRational> {
    let c = rational::parse(s)?;
    rational::check_unit_interval(&c)?;
    Ok(c)
}

fn volume_method(method: MethodArg, samples: u64, seed: u64) -> Result<VolumeMethod> {
    Ok(match method {
        MethodArg::Exact => VolumeMethod::Exact,
        MethodArg::Mc if samples == 0 => bail!("--samples must be positive"),
        MethodArg::Mc => VolumeMethod::MonteCarlo { samples, seed },
    })
}

fn pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

pub fn build_spec(n: usize, e: &EnsembleArgs) -> Result<EnsembleSpec> {
    let regime = match e.regime.ok_or_else(|| anyhow!("--regime is required"))? {
        RegimeArg::WeakC1 => Regime::WeakC1 {
            rho: e.rho.ok_or_else(|| anyhow!("weak_c1 needs --rho"))?,
        },
        RegimeArg::ConstantC2 => {
            let c = e.c.as_deref().ok_or_else(|| anyhow!("constant_c2 needs --c"))?;
            Regime::ConstantC2 {
                c: rational::to_f64(&parse_c(c)?),
            }
        }
        RegimeArg::Hankel => Regime::Hankel,
        RegimeArg::Iid => Regime::Iid,
    };
    Ok(EnsembleSpec::with_entry(n, regime, e.entry.unwrap_or(EntryDist::Gaussian))?)
}

#[derive(Serialize)]
struct PartitionEntry {
    partition: String,
    height: usize,
    crossing: bool,
}

pub fn partitions(ctx: &Context, a: PartitionsArgs) -> Result<RunOutcome> {
    let k = a.k.ok_or_else(|| anyhow!("--k is required"))?;
    let all = enumerate_pair_partitions(k)?;
    let noncrossing = count_noncrossing(k)?;
    let listing = a.list.then(|| {
        all.iter()
            .map(|p| PartitionEntry {
                partition: p.to_string(),
                height: p.height(),
                crossing: p.is_crossing(),
            })
            .collect::<Vec<_>>()
    });
    let body = pretty_json(&json!({
        "k": k,
        "pair_partitions": all.len(),
        "noncrossing": noncrossing,
        "partitions": listing,
    }))?;
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("partitions.json", body.as_bytes())?;
    ctx.finish(out, "partitions", json!({"k": k, "list": a.list}), Status::Success, body)
}

#[derive(Serialize)]
struct VolumeRecord {
    partition: String,
    method: String,
    value: f64,
    stderr: f64,
    samples: u64,
    exact: Option<String>,
    circuit: Circuit,
}

pub fn volume(ctx: &Context, a: VolumeArgs) -> Result<RunOutcome> {
    let method = a.method.unwrap_or(MethodArg::Exact);
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    let partitions: Vec<PairPartition> = match (&a.partition, a.k) {
        (Some(text), k) => {
            let p: PairPartition = text.parse()?;
            if let Some(k) = k.filter(|&k| k != p.k()) {
                bail!("--k {k} does not match partition {p} of order {}", p.k());
            }
            vec![p]
        }
        (None, Some(k)) => enumerate_pair_partitions(k)?,
        (None, None) => bail!("give --partition or --k"),
    };
    volume_method(method, samples, ctx.seed)?;
    let single = a.partition.is_some();
    let records = partitions
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let seed = if single {
                ctx.seed
            } else {
                skewdiag::seed::derive(ctx.seed, &[p.k() as u64, idx as u64])
            };
            let v = hankel_volume_with(p, volume_method(method, samples, seed)?, ctx.circuit)?;
            Ok(VolumeRecord {
                partition: p.to_string(),
                method: v.method.to_string(),
                value: v.value,
                stderr: v.stderr,
                samples: v.samples,
                exact: v.exact.as_ref().map(rational::format),
                circuit: ctx.circuit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let body = if single { pretty_json(&records[0])? } else { pretty_json(&records)? };
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("volume.json", body.as_bytes())?;
    let config = json!({
        "k": partitions[0].k(),
        "partition": a.partition,
        "method": method,
        "samples": (method == MethodArg::Mc).then_some(samples),
    });
    ctx.finish(out, "volume", config, Status::Success, body)
}

pub fn moments(ctx: &Context, a: MomentsArgs) -> Result<RunOutcome> {
    let kmax = a.kmax.unwrap_or(DEFAULT_MOMENTS_KMAX);
    if kmax == 0 {
        bail!("--kmax must be at least 1");
    }
    let c_text = a.c.as_deref().ok_or_else(|| anyhow!("--c is required"))?;
    let c = parse_c(c_text)?;
    let method = a.method.unwrap_or(MethodArg::Exact);
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    let vm = volume_method(method, samples, ctx.seed)?;
    if method == MethodArg::Exact {
        // fail on the order cap before spending time on lower orders
        let dimension = (kmax - kmax % 2) / 2 + 1;
        if dimension > EXACT_DIMENSION_CAP {
            return Err(skewdiag::Error::ExactVolumeUnsupported {
                dimension,
                cap: EXACT_DIMENSION_CAP,
            }
            .into());
        }
    }

    let mut rows = Vec::new();
    for k in 1..=kmax {
        let (exact, value, stderr) = if k % 2 == 1 {
            (Some(rational::int(0)), 0.0, 0.0)
        } else {
            let v = MomentPolynomial::compute(k, vm, ctx.circuit)?.evaluate(&c)?;
            (v.exact, v.value, v.stderr)
        };
        rows.push(vec![
            k.to_string(),
            exact.as_ref().map(rational::format).unwrap_or_default(),
            value.to_string(),
            stderr.to_string(),
        ]);
    }
    let bytes = csv_bytes(&["k", "M_k_exact", "M_k_float", "M_k_stderr"], rows)?;
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("moments.csv", &bytes)?;
    let config = json!({
        "kmax": kmax,
        "c": rational::format(&c),
        "method": method,
        "samples": (method == MethodArg::Mc).then_some(samples),
    });
    ctx.finish(out, "moments", config, Status::Success, String::from_utf8(bytes)?)
}

fn histogram_rows(h: &Histogram) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["-inf".into(), h.lo.to_string(), h.underflow.to_string()]];
    for (i, count) in h.counts.iter().enumerate() {
        let (lo, hi) = h.edges(i);
        rows.push(vec![lo.to_string(), hi.to_string(), count.to_string()]);
    }
    rows.push(vec![h.hi.to_string(), "inf".into(), h.overflow.to_string()]);
    rows
}

fn matrix_csv(spec: &EnsembleSpec, seed: u64) -> Result<Vec<u8>> {
    let m = sample_matrix(spec, seed)?;
    let n = m.n();
    let rows = (0..n).map(|p| (0..n).map(|q| m[(p, q)].to_string()).collect());
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["n", "regime", "seed"])?;
    w.write_record([n.to_string(), spec.regime.to_string(), seed.to_string()])?;
    for row in rows {
        w.write_record::<Vec<String>, String>(row)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> Result<RunOutcome> {
    let n = a.n.unwrap_or(DEFAULT_N);
    let spec = build_spec(n, &a.ensemble)?;
    let trials = a.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let bins = a.bins.unwrap_or(DEFAULT_HISTOGRAM_BINS);
    let range = (
        a.hist_lo.unwrap_or(DEFAULT_HISTOGRAM_RANGE.0),
        a.hist_hi.unwrap_or(DEFAULT_HISTOGRAM_RANGE.1),
    );
    let mut histogram = Histogram::new(bins, range.0, range.1)?;

    let outcomes = run_trials(&spec, trials, ctx.seed, SIMULATED_MOMENTS, bins, range)?;
    let regime = spec.regime.to_string();
    let mut header = vec!["seed".to_string(), "n".into(), "regime".into()];
    header.extend((1..=SIMULATED_MOMENTS).map(|k| format!("m{k}")));
    header.push("ks".into());
    let rows = outcomes.iter().map(|t| {
        let mut row = vec![t.seed.to_string(), n.to_string(), regime.clone()];
        row.extend(t.moments.iter().map(f64::to_string));
        row.push(t.ks.to_string());
        row
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let trials_csv = csv_bytes(&header_refs, rows)?;
    for t in &outcomes {
        histogram.merge(&t.histogram)?;
    }
    let hist_csv = csv_bytes(&["bin_lo", "bin_hi", "count"], histogram_rows(&histogram))?;

    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("trials.csv", &trials_csv)?;
    out.write("histogram.csv", &hist_csv)?;
    if a.dump_matrices {
        for (t, outcome) in outcomes.iter().enumerate() {
            out.write(&format!("matrix_{t:04}.csv"), &matrix_csv(&spec, outcome.seed)?)?;
        }
    }

    let mean = |f: &dyn Fn(&skewdiag::spectra::TrialOutcome) -> f64| {
        outcomes.iter().map(f).sum::<f64>() / outcomes.len() as f64
    };
    let stdout = format!(
        "{spec}: {trials} trials -> {}\nmean m2 = {}, m4 = {}, m6 = {}, ks = {}\n",
        out.dir().display(),
        mean(&|t| t.moments[1]),
        mean(&|t| t.moments[3]),
        mean(&|t| t.moments[5]),
        mean(&|t| t.ks),
    );
    let config = json!({
        "spec": spec,
        "trials": trials,
        "bins": bins,
        "range": [range.0, range.1],
        "dump_matrices": a.dump_matrices,
    });
    ctx.finish(out, "simulate", config, Status::Success, stdout)
}

#[derive(Debug, Serialize)]
struct CompareReport {
    source_sha256: String,
    regime: String,
    theory: String,
    circuit: Circuit,
    n: usize,
    trials: usize,
    threshold: f64,
    any_flagged: bool,
    rows: Vec<MomentRow>,
}

struct TrialTable {
    n: usize,
    regime: Regime,
    /// `moments[k - 1][trial]`
    moments: Vec<Vec<f64>>,
}

fn read_trials(path: &Path, kmax: usize) -> Result<(TrialTable, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{} has no `{name}` column", path.display()))
    };
    let n_col = col("n")?;
    let regime_col = col("regime")?;
    let m_cols = (1..=kmax).map(|k| col(&format!("m{k}"))).collect::<Result<Vec<_>>>()?;

    let mut table: Option<TrialTable> = None;
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let n: usize = field(n_col).parse().with_context(|| format!("row {}: bad n", line + 1))?;
        let regime: Regime = field(regime_col).parse()?;
        let t = table.get_or_insert_with(|| TrialTable {
            n,
            regime,
            moments: vec![Vec::new(); kmax],
        });
        if (t.n, t.regime) != (n, regime) {
            bail!("{} mixes several ensembles", path.display());
        }
        for (k, &c) in m_cols.iter().enumerate() {
            let v: f64 = field(c).parse().with_context(|| format!("row {}: bad m{}", line + 1, k + 1))?;
            t.moments[k].push(v);
        }
    }
    let table = table.ok_or_else(|| anyhow!("no trials in {}", path.display()))?;
    Ok((table, bytes))
}

pub fn compare(ctx: &Context, a: CompareArgs) -> Result<RunOutcome> {
    let kmax = a.kmax.unwrap_or(DEFAULT_COMPARE_KMAX);
    if !(1..=SIMULATED_MOMENTS as usize).contains(&kmax) {
        bail!("--kmax must be between 1 and {SIMULATED_MOMENTS}");
    }
    let threshold = a.threshold.unwrap_or(MomentReport::DEFAULT_THRESHOLD);
    if !(threshold > 0.0) {
        bail!("--threshold must be positive");
    }
    let override_c = a.c.as_deref().map(parse_c).transpose()?;
    let mut input = a.input.clone().unwrap_or_else(|| ctx.out_dir.clone());
    if input.is_dir() {
        input = input.join("trials.csv");
    }
    let (table, bytes) = read_trials(&input, kmax)?;
    if table.moments[0].len() < 2 {
        bail!("comparison needs at least two trials");
    }

    let theory = |k: usize| -> Result<BigRational> {
        match &override_c {
            None => Ok(theoretical_moment(&table.regime, k, ctx.circuit)?),
            Some(_) if k % 2 == 1 => Ok(rational::int(0)),
            Some(c) => Ok(limit_moment_with(k, c, VolumeMethod::Exact, ctx.circuit)?
                .exact
                .expect("exact volumes")),
        }
    };
    let per_k = (1..=kmax)
        .map(|k| Ok((k, theory(k)?, table.moments[k - 1].clone())))
        .collect::<Result<Vec<_>>>()?;
    let report = MomentReport::build(table.n, &per_k, threshold)?;
    let theory_label = match &override_c {
        None => table.regime.to_string(),
        Some(c) => format!("constant_c2(c={})", rational::format(c)),
    };
    let body = pretty_json(&CompareReport {
        source_sha256: crate::output::sha256_hex(&bytes),
        regime: table.regime.to_string(),
        theory: theory_label.clone(),
        circuit: ctx.circuit,
        n: table.n,
        trials: table.moments[0].len(),
        threshold,
        any_flagged: report.any_flagged(),
        rows: report.rows.clone(),
    })?;
    let status = if report.any_flagged() { Status::ComparisonFailed } else { Status::Success };
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("report.json", body.as_bytes())?;
    let config = json!({
        "input": input.file_name().map(|f| f.to_string_lossy().into_owned()),
        "kmax": kmax,
        "theory": theory_label,
        "threshold": threshold,
    });
    ctx.finish(out, "compare", config, status, body)
}

pub fn freeconv(ctx: &Context, a: FreeconvArgs) -> Result<RunOutcome> {
    let c = parse_c(a.c.as_deref().ok_or_else(|| anyhow!("--c is required"))?)?;
    let kmax = a.kmax.unwrap_or(skewdiag::limit_moments::DEFAULT_FREE_CONVOLUTION_KMAX);
    let report = check_free_convolution_with(&c, kmax, ctx.circuit)?;
    let orders: Vec<_> = report
        .orders
        .iter()
        .map(|o| {
            json!({
                "order": o.order,
                "lhs": rational::format(&o.lhs),
                "semicircle_term": rational::format(&o.semicircle_term),
                "hankel_term": rational::format(&o.hankel_term),
                "rhs": rational::format(&o.rhs),
                "difference": rational::format(&(&o.lhs - &o.rhs)),
                "holds": o.holds,
            })
        })
        .collect();
    let body = pretty_json(&json!({
        "c": rational::format(&c),
        "circuit": ctx.circuit,
        "kmax": kmax,
        "all_hold": report.all_hold(),
        "orders": orders,
    }))?;
    let status = if report.all_hold() { Status::Success } else { Status::ComparisonFailed };
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("freeconv.json", body.as_bytes())?;
    let config = json!({"c": rational::format(&c), "kmax": kmax});
    ctx.finish(out, "freeconv", config, status, body)
}

pub fn concentration(ctx: &Context, a: ConcentrationArgs) -> Result<RunOutcome> {
    let ks = a.k.clone().unwrap_or_else(|| DEFAULT_CONCENTRATION_K.to_vec());
    let sizes = a.n_list.clone().unwrap_or_else(|| DEFAULT_CONCENTRATION_SIZES.to_vec());
    let trials = a.trials.unwrap_or(DEFAULT_CONCENTRATION_TRIALS);
    if ks.is_empty() || sizes.is_empty() {
        bail!("--k and --n-list must not be empty");
    }
    let spec = build_spec(sizes[0], &a.ensemble)?;
    for &n in &sizes {
        spec.resized(n)?;
    }

    let reports = ks
        .iter()
        .map(|&k| Ok(concentration_statistic(&spec, k, &sizes, trials, ctx.seed)?))
        .collect::<Result<Vec<_>>>()?;
    let rows = reports.iter().flat_map(|r| {
        r.rows.iter().map(|row| {
            vec![
                row.n.to_string(),
                row.k.to_string(),
                row.fourth_central_moment.to_string(),
                row.ratio_to_n2.to_string(),
                row.ratio_stderr.to_string(),
            ]
        })
    });
    let csv = csv_bytes(&["n", "k", "fourth_central_moment", "ratio_to_n2", "ratio_stderr"], rows)?;
    let summary = pretty_json(&json!({
        "regime": spec.regime.to_string(),
        "entry": spec.entry,
        "reports": reports,
    }))?;
    let bounded = reports.iter().all(|r| r.bounded);
    let mut out = OutputSet::create(&ctx.out_dir)?;
    out.write("concentration.csv", &csv)?;
    out.write("concentration.json", summary.as_bytes())?;
    let config = json!({
        "regime": spec.regime,
        "entry": spec.entry,
        "k": ks,
        "n_list": sizes,
        "trials": trials,
    });
    let status = if bounded { Status::Success } else { Status::ComparisonFailed };
    ctx.finish(out, "concentration", config, status, summary)
}
