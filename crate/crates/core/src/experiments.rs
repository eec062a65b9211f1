//! Instance generators, regret-vs-horizon scans and log-log slope analysis.
//!
//! # Seeds
//!
//! Every randomized quantity derives from one master seed through
//! [`derive_seed`], a SplitMix64 mix of `(parent, index)`:
//!
//! - random instance `j` of a batch: `derive_seed(master, 2j)`
//! - run `s` on instance `j`: `derive_seed(derive_seed(master, 2j + 1), s)`
//! - run `s` of a single-instance scan: `derive_seed(master, s)`
//!
//! Runs are independent, so they execute in parallel; results are always
//! reduced in index order.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::benchmark::{
    benchmark_value, solve_simplex_qp_with, Benchmark, KnownInstance, QpOptions,
};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;
use crate::model::{effective_linear_term, fmt_f64, total_loss_closed_form, Instance, NoiseModel};
use crate::policy::PolicySpec;
use crate::scalar::Scalar;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

pub fn instance_seed(master: u64, instance: u64) -> u64 {
    derive_seed(master, 2 * instance)
}

pub fn run_seed(master: u64, instance: u64, run: u64) -> u64 {
    derive_seed(derive_seed(master, 2 * instance + 1), run)
}

/// `A = [[1,1],[1,2]]`, `l1 = [1,1]`, no noise. Standard LCB keeps
/// returning to arm 2 here and pays near-quadratic regret.
pub fn counterexample_instance<T: Scalar>() -> Instance<T> {
    let one = T::one();
    let two = one + one;
    let a = InteractionMatrix::new(2, vec![one, one, one, two]).expect("symmetric");
    Instance::new(a, vec![one, one], NoiseModel::None).expect("consistent")
}

/// `A = [[1,1/2],[1/2,1/4]]`, `l1 = [1/2,1/8]` (so `b = 0`), no noise.
/// Any first pull of arm 1 costs `T/4 + 1/8`.
pub fn linear_regret_instance<T: Scalar>() -> Instance<T> {
    let one = T::one();
    let half = T::half();
    let quarter = half * half;
    let a = InteractionMatrix::new(2, vec![one, half, half, quarter]).expect("symmetric");
    Instance::new(a, vec![half, quarter * half], NoiseModel::None).expect("consistent")
}

/// Random PSD instance: `B` and `l1` standard normal, `A = B^T B / max|B^T B|`,
/// unit Gaussian noise.
pub fn random_instance(k: usize, seed: u64) -> Result<Instance<f64>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("random instances need k >= 2, got {k}")));
    }
    for attempt in 0u64.. {
        let stream_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt) };
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
        let b: Vec<f64> = (0..k * k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let l1: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = (0..k).map(|r| b[r * k + i] * b[r * k + j]).sum();
            }
        }
        let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            continue;
        }
        let entries = gram.into_iter().map(|v| v / scale).collect();
        let a = InteractionMatrix::new(k, entries)?.certify_psd()?;
        return Instance::new(a, l1, NoiseModel::Gaussian { sigma: 1.0 });
    }
    unreachable!()
}

/// Parses `start:end:x<factor>` (geometric) or a comma-separated list.
pub fn parse_horizons(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    let bad = |msg: &str| Error::Parse(format!("horizon grid `{spec}`: {msg}"));
    let horizons: Vec<u64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, end, step] = parts[..] else {
            return Err(bad("expected start:end:xFACTOR"));
        };
        let start: u64 = start.parse().map_err(|_| bad("bad start"))?;
        let end: u64 = end.parse().map_err(|_| bad("bad end"))?;
        let factor: u64 = step
            .strip_prefix('x')
            .ok_or_else(|| bad("step must look like x2"))?
            .parse()
            .map_err(|_| bad("bad factor"))?;
        if factor < 2 || start == 0 {
            return Err(bad("need start >= 1 and factor >= 2"));
        }
        let mut out = Vec::new();
        let mut t = start;
        while t <= end {
            out.push(t);
            t = t.checked_mul(factor).ok_or_else(|| bad("overflow"))?;
        }
        out
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad("bad entry")))
            .collect::<Result<_>>()?
    };
    validate_horizons(&horizons)?;
    Ok(horizons)
}

pub fn validate_horizons(horizons: &[u64]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::InvalidParameter("horizon list is empty".into()));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "horizons must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `T = 2^7, 2^8, ..., 2^14`.
pub fn default_horizons() -> Vec<u64> {
    (7..=14).map(|e| 1u64 << e).collect()
}

/// Regret of one run at each checkpoint horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRegrets {
    pub instance: usize,
    pub seed: u64,
    pub regrets: Vec<f64>,
    /// Pull counts at each checkpoint.
    pub counts: Vec<Vec<u64>>,
}

/// Seed-averaged regret against horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub policy: String,
    pub instance: String,
    pub horizons: Vec<u64>,
    pub regrets: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_runs: usize,
    pub seed: u64,
    pub runs: Vec<RunRegrets>,
}

/// Benchmark losses for each horizon. Relaxed optima are warm-started from
/// the previous horizon's minimizer.
pub fn benchmark_table(inst: &Instance<f64>, horizons: &[u64], kind: Benchmark) -> Result<Vec<f64>> {
    let use_known = match kind {
        Benchmark::Relaxation => false,
        Benchmark::KnownOptimum => true,
        Benchmark::Auto => KnownInstance::identify(inst).is_some(),
    };
    if use_known {
        return horizons.iter().map(|&t| benchmark_value(inst, t, Benchmark::KnownOptimum)).collect();
    }
    let b = effective_linear_term(inst);
    let mut opts = QpOptions::default();
    let mut out = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let sol = solve_simplex_qp_with(&b, &inst.a, t as f64, &opts)?;
        out.push(sol.value);
        opts.warm_start = Some(sol.p_star);
    }
    Ok(out)
}

/// Runs `policy` once to the last horizon and reads off the regret at each
/// checkpoint. Because noise depends only on `(seed, t)` and the policies do
/// not know the horizon, the prefix up to `T` is exactly a run of length `T`.
pub fn run_checkpoints(
    inst: &Instance<f64>,
    policy: PolicySpec,
    horizons: &[u64],
    benchmarks: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<u64>>)> {
    validate_horizons(horizons)?;
    let mut pol = policy.build::<f64>(inst.k())?;
    let mut env = Environment::new(inst.clone(), seed);
    let mut regrets = Vec::with_capacity(horizons.len());
    let mut counts = Vec::with_capacity(horizons.len());
    let mut next = 0;
    let last = *horizons.last().expect("validated");
    for t in 1..=last {
        let arm = pol.select(t);
        let loss = env.step(arm)?;
        pol.observe(t, arm, loss);
        if t == horizons[next] {
            let total = total_loss_closed_form(inst, env.counts())?;
            regrets.push(total - benchmarks[next]);
            counts.push(env.counts().counts().to_vec());
            next += 1;
        }
    }
    Ok((regrets, counts))
}

/// One run to schedule in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanJob {
    pub instance: usize,
    pub seed: u64,
}

/// Runs every job and averages the regrets over all of them.
pub fn pooled_regret_scan(
    instances: &[Instance<f64>],
    jobs: &[ScanJob],
    policy: PolicySpec,
    horizons: &[u64],
    kind: Benchmark,
) -> Result<(Vec<f64>, Vec<f64>, Vec<RunRegrets>)> {
    validate_horizons(horizons)?;
    if jobs.is_empty() {
        return Err(Error::InvalidParameter("no runs requested".into()));
    }
    let tables: Vec<Vec<f64>> = instances
        .par_iter()
        .map(|inst| benchmark_table(inst, horizons, kind))
        .collect::<Result<_>>()?;
    let runs: Vec<RunRegrets> = jobs
        .par_iter()
        .map(|job| {
            let inst = instances.get(job.instance).ok_or_else(|| {
                Error::InvalidParameter(format!("job refers to missing instance {}", job.instance))
            })?;
            let (regrets, counts) =
                run_checkpoints(inst, policy, horizons, &tables[job.instance], job.seed)?;
            Ok(RunRegrets {
                instance: job.instance,
                seed: job.seed,
                regrets,
                counts,
            })
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&runs, horizons.len());
    Ok((mean, stderr, runs))
}

fn mean_and_stderr(runs: &[RunRegrets], n_horizons: usize) -> (Vec<f64>, Vec<f64>) {
    let n = runs.len() as f64;
    let mut mean = vec![0.0; n_horizons];
    let mut stderr = vec![0.0; n_horizons];
    for h in 0..n_horizons {
        let m = runs.iter().map(|r| r.regrets[h]).sum::<f64>() / n;
        mean[h] = m;
        if runs.len() > 1 {
            let var = runs.iter().map(|r| (r.regrets[h] - m).powi(2)).sum::<f64>() / (n - 1.0);
            stderr[h] = (var / n).sqrt();
        }
    }
    (mean, stderr)
}

/// Seed-averaged regret curve of one policy on one instance.
pub fn regret_scan(
    inst: &Instance<f64>,
    instance_name: &str,
    policy: PolicySpec,
    horizons: &[u64],
    seeds: &[u64],
    kind: Benchmark,
) -> Result<RegretCurve> {
    let jobs: Vec<ScanJob> = seeds.iter().map(|&seed| ScanJob { instance: 0, seed }).collect();
    let (regrets, stderr, runs) =
        pooled_regret_scan(std::slice::from_ref(inst), &jobs, policy, horizons, kind)?;
    Ok(RegretCurve {
        policy: policy.to_string(),
        instance: instance_name.to_string(),
        horizons: horizons.to_vec(),
        regrets,
        stderr,
        n_runs: runs.len(),
        seed: seeds.first().copied().unwrap_or(0),
        runs,
    })
}

/// `n_instances` random instances with `seeds_per_instance` runs each, all
/// derived from `master`; the curve averages every run.
pub fn random_instances_scan(
    k: usize,
    n_instances: usize,
    seeds_per_instance: usize,
    policy: PolicySpec,
    horizons: &[u64],
    master: u64,
) -> Result<RegretCurve> {
    let instances = random_instances(k, n_instances, master)?;
    let jobs: Vec<ScanJob> = (0..n_instances)
        .flat_map(|i| {
            (0..seeds_per_instance).map(move |s| ScanJob {
                instance: i,
                seed: run_seed(master, i as u64, s as u64),
            })
        })
        .collect();
    let (regrets, stderr, runs) =
        pooled_regret_scan(&instances, &jobs, policy, horizons, Benchmark::Relaxation)?;
    Ok(RegretCurve {
        policy: policy.to_string(),
        instance: format!("random:k={k}"),
        horizons: horizons.to_vec(),
        regrets,
        stderr,
        n_runs: runs.len(),
        seed: master,
        runs,
    })
}

pub fn random_instances(k: usize, n: usize, master: u64) -> Result<Vec<Instance<f64>>> {
    (0..n)
        .into_par_iter()
        .map(|i| random_instance(k, instance_seed(master, i as u64)))
        .collect()
}

/// Least-squares line through `(ln T, ln regret)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Points dropped because the regret was not positive.
    pub n_excluded: usize,
}

pub fn fit_loglog_slope(horizons: &[u64], regrets: &[f64]) -> Result<SlopeFit> {
    if horizons.len() != regrets.len() {
        return Err(Error::DimensionMismatch {
            expected: horizons.len(),
            got: regrets.len(),
        });
    }
    let points: Vec<(f64, f64)> = horizons
        .iter()
        .zip(regrets)
        .filter(|(_, &r)| r > 0.0 && r.is_finite())
        .map(|(&t, &r)| ((t as f64).ln(), r.ln()))
        .collect();
    let n_excluded = horizons.len() - points.len();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs two positive regrets, have {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all horizons coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        n_excluded,
    })
}

impl RegretCurve {
    pub fn fit_slope(&self) -> Result<SlopeFit> {
        fit_loglog_slope(&self.horizons, &self.regrets)
    }
}

/// Equal-width histogram over `[min - eps, max + eps]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return Err(Error::InsufficientData("histogram needs values and bins".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eps = 1e-9 * (hi - lo).abs().max(1.0);
        let (lo, hi) = (lo - eps, hi + eps);
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self { edges, counts })
    }
}

/// Per-instance slope of one single-seed run.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSlope {
    pub instance: usize,
    pub seed: u64,
    pub fit: Option<SlopeFit>,
    pub regrets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeHistogram {
    pub policy: String,
    pub horizons: Vec<u64>,
    pub slopes: Vec<InstanceSlope>,
    pub histogram: Histogram,
}

impl SlopeHistogram {
    pub fn fitted_slopes(&self) -> Vec<f64> {
        self.slopes.iter().filter_map(|s| s.fit.map(|f| f.slope)).collect()
    }

    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.fitted_slopes().iter().filter(|&&s| s >= lo && s <= hi).count()
    }
}

/// One run per random instance, one slope per run, binned.
pub fn slope_histogram(
    k: usize,
    n_instances: usize,
    horizons: &[u64],
    policy: PolicySpec,
    master: u64,
    bins: usize,
) -> Result<SlopeHistogram> {
    if n_instances == 0 {
        return Err(Error::InvalidParameter("need at least one instance".into()));
    }
    let instances = random_instances(k, n_instances, master)?;
    let jobs: Vec<ScanJob> = (0..n_instances)
        .map(|i| ScanJob {
            instance: i,
            seed: run_seed(master, i as u64, 0),
        })
        .collect();
    let (_, _, runs) = pooled_regret_scan(&instances, &jobs, policy, horizons, Benchmark::Relaxation)?;
    let slopes: Vec<InstanceSlope> = runs
        .into_iter()
        .map(|run| InstanceSlope {
            instance: run.instance,
            seed: run.seed,
            fit: fit_loglog_slope(horizons, &run.regrets).ok(),
            regrets: run.regrets,
        })
        .collect();
    let values: Vec<f64> = slopes.iter().filter_map(|s| s.fit.map(|f| f.slope)).collect();
    let histogram = Histogram::from_values(&values, bins)?;
    Ok(SlopeHistogram {
        policy: policy.to_string(),
        horizons: horizons.to_vec(),
        slopes,
        histogram,
    })
}

/// Rounds at which arm index 1 (the second arm) was pulled, 1-based.
pub fn pull_times(arms: &[usize], arm: usize) -> Vec<u64> {
    arms.iter()
        .enumerate()
        .filter(|(_, &a)| a == arm)
        .map(|(t, _)| t as u64 + 1)
        .collect()
}

/// Writes `policy,instance,T,regret_mean,regret_stderr,n_seeds`.
pub fn write_regret_curves<W: Write>(writer: W, curves: &[RegretCurve]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["policy", "instance", "T", "regret_mean", "regret_stderr", "n_seeds"])?;
    for c in curves {
        for ((t, r), s) in c.horizons.iter().zip(&c.regrets).zip(&c.stderr) {
            out.write_record([
                c.policy.clone(),
                c.instance.clone(),
                t.to_string(),
                fmt_f64(*r),
                fmt_f64(*s),
                c.n_runs.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `instance,seed,slope,intercept,r2,n_points`; unfittable runs
/// leave the fit columns empty.
pub fn write_slopes<W: Write>(writer: W, slopes: &[InstanceSlope]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["instance", "seed", "slope", "intercept", "r2", "n_points"])?;
    for s in slopes {
        let (slope, intercept, r2, n) = match s.fit {
            Some(f) => (fmt_f64(f.slope), fmt_f64(f.intercept), fmt_f64(f.r_squared), f.n_points.to_string()),
            None => (String::new(), String::new(), String::new(), "0".into()),
        };
        out.write_record([s.instance.to_string(), s.seed.to_string(), slope, intercept, r2, n])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `bin_lo,bin_hi,count`.
pub fn write_histogram<W: Write>(writer: W, hist: &Histogram) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["bin_lo", "bin_hi", "count"])?;
    for (i, c) in hist.counts.iter().enumerate() {
        out.write_record([fmt_f64(hist.edges[i]), fmt_f64(hist.edges[i + 1]), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
