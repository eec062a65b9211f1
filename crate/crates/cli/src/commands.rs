use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use influential_bandit::benchmark::{
    benchmark_value, regret_for_counts, solve_simplex_qp_with, solve_two_arm_closed_form, QpOptions,
};
use influential_bandit::env::run_policy;
use influential_bandit::estimation::analysis::{
    analyze_fits, write_a_mean_csv, EigenvaluesWriter, FitsWriter,
};
use influential_bandit::estimation::log::{read_arm_map, write_rating_csv};
use influential_bandit::estimation::{
    fit_interaction_model, ingest_rating_csv, probe_pulls, probing_estimator, stationary_baseline,
    synthetic_log, BaselineResult, FitHyperparams, FitResult, IngestOptions, RatingLog,
};
use influential_bandit::experiments::{
    derive_seed, fit_loglog_slope, random_instances_scan, regret_scan, slope_histogram, write_histogram,
    write_regret_curves, write_slopes, InstanceSlope, RegretCurve,
};
use influential_bandit::model::{effective_linear_term, fmt_f64};
use influential_bandit::Environment;
use rayon::prelude::*;
use serde_json::json;

use crate::config::*;
use crate::Failure;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json(out: &Path, name: &str, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Validates, writes `meta.json`, then runs.
pub fn execute(meta: &Meta, out: &Path) -> Result<(), Failure> {
    validate(&meta.config)?;
    fs::create_dir_all(out)?;
    write_json(out, "meta.json", meta)?;
    let seed = meta.seed;
    match &meta.config {
        Job::Run(c) => run(c, seed, out),
        Job::Scan(c) => scan(c, seed, out),
        Job::Histogram(c) => histogram(c, seed, out),
        Job::Fit(c) => fit(c, seed, out),
        Job::Probe(c) => probe(c, seed, out),
        Job::Qp(c) => qp(c, seed, out),
        Job::Synth(c) => synth(c, seed, out),
    }
}

fn run(c: &RunConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let inst = c.instance.build_with_noise(seed, c.noise.as_deref())?;
    let spec = parse_policy(&c.policy)?;
    let kind = parse_benchmark(&c.benchmark)?;
    let mut policy = spec.build::<f64>(inst.k())?;
    let trace = run_policy(&inst, policy.as_mut(), c.horizon, seed)?;
    let counts = trace.counts(inst.k())?;
    let benchmark = benchmark_value(&inst, c.horizon, kind)?;
    let regret = regret_for_counts(&inst, &counts, kind)?;

    let mut w = create(out, "trace.csv")?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    write_json(
        out,
        "summary.json",
        &json!({
            "instance": c.instance.name(),
            "policy": spec.to_string(),
            "T": c.horizon,
            "seed": seed,
            "total_expected_loss": trace.total_expected_loss(),
            "total_observed_loss": trace.total_observed_loss(),
            "benchmark": c.benchmark,
            "benchmark_value": benchmark,
            "regret": regret,
            "counts": counts.counts(),
        }),
    )
}

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn run_slopes(curve: &RegretCurve) -> Vec<InstanceSlope> {
    curve
        .runs
        .iter()
        .map(|run| InstanceSlope {
            instance: run.instance,
            seed: run.seed,
            fit: fit_loglog_slope(&curve.horizons, &run.regrets).ok(),
            regrets: run.regrets.clone(),
        })
        .collect()
}

fn scan(c: &ScanConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let kind = parse_benchmark(&c.benchmark)?;
    let mut curves = Vec::with_capacity(c.policies.len());
    for p in &c.policies {
        let spec = parse_policy(p)?;
        let curve = match (c.n_instances, c.instance.random_k()) {
            (Some(n), Some(k)) => random_instances_scan(k, n, c.seeds, spec, &c.horizons, seed)?,
            _ => {
                let inst = c.instance.build_with_noise(seed, c.noise.as_deref())?;
                let seeds: Vec<u64> = (0..c.seeds as u64).map(|s| derive_seed(seed, s)).collect();
                regret_scan(&inst, &c.instance.name(), spec, &c.horizons, &seeds, kind)?
            }
        };
        eprintln!("scan: {} done ({} runs)", curve.policy, curve.n_runs);
        curves.push(curve);
    }

    let mut w = create(out, "regret_curve.csv")?;
    write_regret_curves(&mut w, &curves)?;
    w.flush()?;

    let mut fits = create(out, "curve_fits.csv")?;
    writeln!(fits, "policy,slope,intercept,r2,n_points,n_excluded")?;
    for curve in &curves {
        match curve.fit_slope() {
            Ok(f) => writeln!(
                fits,
                "{},{},{},{},{},{}",
                curve.policy,
                fmt_f64(f.slope),
                fmt_f64(f.intercept),
                fmt_f64(f.r_squared),
                f.n_points,
                f.n_excluded
            )?,
            Err(_) => writeln!(fits, "{},,,,0,{}", curve.policy, curve.horizons.len())?,
        }
        let mut w = create(out, &format!("slopes_{}.csv", file_safe(&curve.policy)))?;
        write_slopes(&mut w, &run_slopes(curve))?;
        w.flush()?;
    }
    fits.flush()?;
    Ok(())
}

fn histogram(c: &HistogramConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let spec = parse_policy(&c.policy)?;
    let h = slope_histogram(c.k, c.n_instances, &c.horizons, spec, seed, c.bins)?;
    let mut w = create(out, "slopes.csv")?;
    write_slopes(&mut w, &h.slopes)?;
    w.flush()?;
    let mut w = create(out, "histogram.csv")?;
    write_histogram(&mut w, &h.histogram)?;
    w.flush()?;
    let fitted = h.fitted_slopes();
    write_json(
        out,
        "summary.json",
        &json!({
            "policy": h.policy,
            "k": c.k,
            "n_instances": c.n_instances,
            "n_fitted": fitted.len(),
            "below_0.5": fitted.iter().filter(|&&s| s < 0.5).count(),
            "within_0.8_1.3": h.count_in(0.8, 1.3),
        }),
    )
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn fit(c: &FitConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let param = c.parametrization()?;
    let arm_map = c.arm_map.as_ref().map(read_arm_map).transpose()?;
    let arm_names: Option<Vec<String>> = arm_map.as_ref().map(|m| {
        let mut names: Vec<String> = (0..c.k).map(|i| format!("arm{i}")).collect();
        let mut sorted: Vec<(&String, &usize)> = m.iter().collect();
        sorted.sort();
        for (name, &i) in sorted {
            if i < c.k && names[i] == format!("arm{i}") {
                names[i] = name.clone();
            }
        }
        names
    });
    let opts = IngestOptions {
        rating_max: c.rating_max,
        min_events: c.min_events,
        arm_map,
        ..IngestOptions::new(c.k, seed)
    };
    let report = ingest_rating_csv(&c.ratings, &opts)?;
    for issue in report.skipped_rows.iter().take(10) {
        eprintln!("fit: skipped line {}: {}", issue.line, issue.message);
    }
    if report.skipped_rows.len() > 10 {
        eprintln!("fit: ... {} skipped rows in total", report.skipped_rows.len());
    }
    eprintln!(
        "fit: {} users kept, {} below {} events",
        report.logs.len(),
        report.filtered_users,
        c.min_events
    );
    if report.logs.is_empty() {
        return Err(Failure::Runtime(format!("no user has at least {} events", c.min_events)));
    }

    let base_hp = FitHyperparams {
        learning_rate: c.learning_rate,
        momentum: c.momentum,
        max_iterations: c.max_iterations,
        patience: c.patience,
        min_relative_improvement: c.min_relative_improvement,
        init_scale: c.init_scale,
        init_seed: 0,
        norm: c.norm()?,
    };
    base_hp.validate()?;

    let mut fits_csv = FitsWriter::new(create(out, "fits.csv")?)?;
    let mut eig_csv = EigenvaluesWriter::new(create(out, "eigenvalues.csv")?)?;
    let mut base_csv = create(out, "baseline.csv")?;
    writeln!(base_csv, "user,loo_prediction,loo_sq_error")?;

    let indexed: Vec<(usize, &RatingLog)> = report.logs.iter().enumerate().collect();
    let mut fits: Vec<FitResult> = Vec::with_capacity(indexed.len());
    let mut baselines: Vec<BaselineResult> = Vec::with_capacity(indexed.len());
    for chunk in indexed.chunks(c.chunk) {
        let done: Vec<(FitResult, BaselineResult)> = chunk
            .par_iter()
            .map(|&(i, log)| {
                let hp = FitHyperparams {
                    init_seed: derive_seed(seed, i as u64),
                    ..base_hp.clone()
                };
                Ok((
                    fit_interaction_model(log, c.k, param, &hp)?,
                    stationary_baseline(log, c.k)?,
                ))
            })
            .collect::<influential_bandit::Result<_>>()?;
        for (f, b) in done {
            fits_csv.push(&f)?;
            eig_csv.push_fit(&f)?;
            writeln!(
                base_csv,
                "{},{},{}",
                b.user,
                fmt_f64(b.loo_prediction),
                fmt_f64(b.loo_squared_error)
            )?;
            fits.push(f);
            baselines.push(b);
        }
        fits_csv.flush()?;
        eig_csv.flush()?;
        base_csv.flush()?;
        eprintln!("fit: {}/{} users", fits.len(), indexed.len());
    }

    let summary = analyze_fits(&fits)?;
    let mut w = create(out, "a_mean.csv")?;
    write_a_mean_csv(&mut w, &summary, arm_names.as_deref())?;
    w.flush()?;

    let fit_err: Vec<f64> = fits.iter().map(|f| f.loo_squared_error).collect();
    let base_err: Vec<f64> = baselines.iter().map(|b| b.loo_squared_error).collect();
    let (fit_mean, fit_std) = mean_std(&fit_err);
    let (base_mean, base_std) = mean_std(&base_err);
    let wins = fit_err.iter().zip(&base_err).filter(|(f, b)| f <= b).count();
    write_json(
        out,
        "summary.json",
        &json!({
            "users": fits.len(),
            "parametrization": param.name(),
            "norm": c.norm,
            "loo_sq_error_mean": fit_mean,
            "loo_sq_error_std": fit_std,
            "baseline_loo_sq_error_mean": base_mean,
            "baseline_loo_sq_error_std": base_std,
            "users_fit_not_worse_than_baseline": wins,
            "converged": fits.iter().filter(|f| f.converged).count(),
            "min_eigenvalue": summary.min_eigenvalue(),
        }),
    )
}

fn probe(c: &ProbeConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let inst = c.instance.build_with_noise(seed, c.noise.as_deref())?;
    let k = inst.k();
    let truth = inst.a.clone();
    let noise = inst.noise;
    let mut env = Environment::new(inst, seed);
    let r = probing_estimator(&mut env, c.budget.unwrap_or_else(|| probe_pulls(k)))?;
    let (mut diag, mut off) = (0.0f64, 0.0f64);
    for i in 0..k {
        for j in 0..k {
            let e = (r.a_hat.get(i, j) - truth.get(i, j)).abs();
            if i == j {
                diag = diag.max(e);
            } else {
                off = off.max(e);
            }
        }
    }
    write_json(
        out,
        "probe.json",
        &json!({
            "instance": c.instance.name(),
            "k": k,
            "noise": { "kind": noise.kind(), "param": noise.param() },
            "pulls": r.pulls,
            "constant": r.constant,
            "a_hat": r.a_hat.rows(),
            "a_true": truth.rows(),
            "max_diagonal_error": diag,
            "max_off_diagonal_error": off,
        }),
    )
}

fn qp(c: &QpConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let inst = c.instance.build(seed)?;
    let b = effective_linear_term(&inst);
    let t = c.horizon as f64;
    let opts = QpOptions {
        tolerance: c.tolerance,
        max_iterations: c.max_iterations,
        ..QpOptions::default()
    };
    let sol = solve_simplex_qp_with(&b, &inst.a, t, &opts)?;
    let closed_form = if inst.k() == 2 {
        let (p, v) = solve_two_arm_closed_form(&b, &inst.a, t)?;
        json!({ "p_star": p, "value": v })
    } else {
        serde_json::Value::Null
    };
    write_json(
        out,
        "qp.json",
        &json!({
            "instance": c.instance.name(),
            "T": c.horizon,
            "value": sol.value,
            "p_star": sol.p_star,
            "iterations": sol.iterations,
            "duality_gap": sol.duality_gap,
            "lower_bound": sol.certified_lower_bound(),
            "two_arm_closed_form": closed_form,
        }),
    )
}

fn synth(c: &SynthConfig, seed: u64, out: &Path) -> Result<(), Failure> {
    let inst = c.instance.build_with_noise(seed, c.noise.as_deref())?;
    let generator = parse_generator(&c.generator)?;
    let logs: Vec<RatingLog> = (0..c.users)
        .into_par_iter()
        .map(|u| synthetic_log(format!("u{u:05}"), &inst, c.events, generator, derive_seed(seed, u as u64)))
        .collect::<influential_bandit::Result<_>>()?;
    let mut w = create(out, "ratings.csv")?;
    write_rating_csv(&mut w, &logs, c.rating_max)?;
    w.flush()?;
    inst.write_json(out.join("instance.json"))?;
    Ok(())
}
