//! Summaries over a collection of fits: norms, pooled eigenvalues and the
//! entrywise mean matrix.

use std::io::Write;

use super::fit::FitResult;
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;
use crate::model::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormKind {
    #[default]
    MaxAbs,
    Frobenius,
    Spectral,
}

impl NormKind {
    pub fn apply(&self, a: &InteractionMatrix<f64>) -> f64 {
        match self {
            NormKind::MaxAbs => a.max_abs_norm(),
            NormKind::Frobenius => a.frobenius_norm(),
            NormKind::Spectral => a.spectral_norm(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormKind::MaxAbs => "max_abs",
            NormKind::Frobenius => "frobenius",
            NormKind::Spectral => "spectral",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_abs" => Ok(NormKind::MaxAbs),
            "frobenius" => Ok(NormKind::Frobenius),
            "spectral" => Ok(NormKind::Spectral),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub k: usize,
    /// `(user, norm)` in input order.
    pub norms: Vec<(String, f64)>,
    /// `(user, index, eigenvalue)`, ascending within each user.
    pub eigenvalues: Vec<(String, usize, f64)>,
    pub a_mean: InteractionMatrix<f64>,
}

impl FitSummary {
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.iter().map(|e| e.2).reduce(f64::min)
    }
}

pub fn analyze_fits(results: &[FitResult]) -> Result<FitSummary> {
    let first = results
        .first()
        .ok_or_else(|| Error::InsufficientData("no fits to analyze".into()))?;
    let k = first.a_hat.k();
    let mut sum = vec![0.0; k * k];
    let mut norms = Vec::with_capacity(results.len());
    let mut eigenvalues = Vec::with_capacity(results.len() * k);
    for r in results {
        if r.a_hat.k() != k {
            return Err(Error::MixedArmCount {
                expected: k,
                got: r.a_hat.k(),
            });
        }
        for (s, v) in sum.iter_mut().zip(r.a_hat.entries()) {
            *s += v;
        }
        norms.push((r.user.clone(), r.norm_a));
        eigenvalues.extend(r.eigenvalues.iter().enumerate().map(|(i, &v)| (r.user.clone(), i, v)));
    }
    let n = results.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    Ok(FitSummary {
        k,
        norms,
        eigenvalues,
        a_mean: InteractionMatrix::new(k, mean)?,
    })
}

/// Row-at-a-time writer for `fits.csv`:
/// `user,parametrization,train_mse,loo_sq_error,norm_a`.
pub struct FitsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> FitsWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(["user", "parametrization", "train_mse", "loo_sq_error", "norm_a"])?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, r: &FitResult) -> Result<()> {
        self.inner.write_record([
            r.user.clone(),
            r.parametrization.name().to_string(),
            fmt_f64(r.train_mse),
            fmt_f64(r.loo_squared_error),
            fmt_f64(r.norm_a),
        ])?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Row-at-a-time writer for `eigenvalues.csv`: `user,index,value`.
pub struct EigenvaluesWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> EigenvaluesWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(["user", "index", "value"])?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, user: &str, index: usize, value: f64) -> Result<()> {
        self.inner.write_record([user, &index.to_string(), &fmt_f64(value)])?;
        Ok(())
    }

    pub fn push_fit(&mut self, r: &FitResult) -> Result<()> {
        for (i, &v) in r.eigenvalues.iter().enumerate() {
            self.push(&r.user, i, v)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_fits_csv<W: Write>(writer: W, results: &[FitResult]) -> Result<()> {
    let mut w = FitsWriter::new(writer)?;
    for r in results {
        w.push(r)?;
    }
    w.flush()
}

pub fn write_eigenvalues_csv<W: Write>(writer: W, summary: &FitSummary) -> Result<()> {
    let mut w = EigenvaluesWriter::new(writer)?;
    for (user, i, v) in &summary.eigenvalues {
        w.push(user, *i, *v)?;
    }
    w.flush()
}

/// Header row of arm names, then one row per matrix row. Arm names default
/// to `arm0..`.
pub fn write_a_mean_csv<W: Write>(writer: W, summary: &FitSummary, arm_names: Option<&[String]>) -> Result<()> {
    let k = summary.k;
    let names: Vec<String> = match arm_names {
        Some(n) if n.len() == k => n.to_vec(),
        Some(n) => return Err(Error::DimensionMismatch { expected: k, got: n.len() }),
        None => (0..k).map(|i| format!("arm{i}")).collect(),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&names)?;
    for i in 0..k {
        w.write_record(summary.a_mean.row(i).iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}
