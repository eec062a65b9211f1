//! Instances, pull counts, traces and the order-free loss algebra.
//!
//! Pulling arm `i` at round `t` shows the loss `l_i(t)` (plus noise) and then
//! adds row `i` of the interaction matrix to every arm's loss. Because the
//! matrix is symmetric, the expected total loss of a sequence depends only on
//! how often each arm was pulled:
//!
//! ```text
//! L(x) = l1^T x + 1/2 x^T A x - 1/2 diag(A)^T x = b^T x + 1/2 x^T A x
//! ```
//!
//! with `b = l1 - diag(A) / 2`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, InteractionMatrix};
use crate::scalar::{Real, Scalar};

/// Distribution of the per-round observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    /// Uniform on `[-bound, bound]`.
    UniformBounded { bound: f64 },
    /// Zero-mean normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::UniformBounded { bound } if bound > 0.0 && bound.is_finite() => Ok(()),
            NoiseModel::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            other => Err(Error::InvalidParameter(format!("noise model {other:?}"))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::UniformBounded { .. } => "uniform_bounded",
            NoiseModel::Gaussian { .. } => "gaussian",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::UniformBounded { bound } => bound,
            NoiseModel::Gaussian { sigma } => sigma,
        }
    }

    pub fn from_kind(kind: &str, param: f64) -> Result<Self> {
        let model = match kind {
            "none" => NoiseModel::None,
            "uniform_bounded" | "uniform" => NoiseModel::UniformBounded { bound: param },
            "gaussian" | "normal" => NoiseModel::Gaussian { sigma: param },
            other => return Err(Error::Parse(format!("unknown noise kind `{other}`"))),
        };
        model.validate()?;
        Ok(model)
    }

    /// Almost-sure bound on `|xi|`, if there is one.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            NoiseModel::None => Some(0.0),
            NoiseModel::UniformBounded { bound } => Some(bound),
            NoiseModel::Gaussian { .. } => None,
        }
    }
}

/// One complete environment: interaction matrix, initial losses, noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub a: InteractionMatrix<T>,
    pub initial_losses: Vec<T>,
    pub noise: NoiseModel,
}

impl<T: Scalar> Instance<T> {
    pub fn new(a: InteractionMatrix<T>, initial_losses: Vec<T>, noise: NoiseModel) -> Result<Self> {
        if initial_losses.len() != a.k() {
            return Err(Error::DimensionMismatch {
                expected: a.k(),
                got: initial_losses.len(),
            });
        }
        noise.validate()?;
        Ok(Self {
            a,
            initial_losses,
            noise,
        })
    }

    pub fn k(&self) -> usize {
        self.a.k()
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    /// `max_i |l1_i|`.
    pub fn initial_loss_sup_norm(&self) -> T {
        self.initial_losses
            .iter()
            .map(|v| v.abs())
            .fold(T::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.k() {
            return Err(Error::ArmOutOfRange { arm, k: self.k() });
        }
        Ok(())
    }
}

/// Per-arm selection counts `x`; the sufficient statistic of the total loss.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PullCounts {
    counts: Vec<u64>,
    horizon: u64,
}

impl PullCounts {
    pub fn zeros(k: usize) -> Self {
        Self {
            counts: vec![0; k],
            horizon: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let horizon = counts.iter().sum();
        Self { counts, horizon }
    }

    pub fn from_arms(k: usize, arms: &[usize]) -> Result<Self> {
        let mut counts = Self::zeros(k);
        for &arm in arms {
            counts.record(arm, k)?;
        }
        Ok(counts)
    }

    pub(crate) fn record(&mut self, arm: usize, k: usize) -> Result<()> {
        let slot = self
            .counts
            .get_mut(arm)
            .ok_or(Error::ArmOutOfRange { arm, k })?;
        *slot += 1;
        self.horizon += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn as_scalars<T: Scalar>(&self) -> Vec<T> {
        self.counts.iter().map(|&c| T::from_count(c)).collect()
    }
}

/// Time-ordered record of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace<T> {
    pub arms: Vec<usize>,
    pub observed_losses: Vec<T>,
    pub expected_losses: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> EpisodeTrace<T> {
    pub fn with_capacity(horizon: usize, seed: u64) -> Self {
        Self {
            arms: Vec::with_capacity(horizon),
            observed_losses: Vec::with_capacity(horizon),
            expected_losses: Vec::with_capacity(horizon),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn counts(&self, k: usize) -> Result<PullCounts> {
        PullCounts::from_arms(k, &self.arms)
    }

    pub fn total_expected_loss(&self) -> T {
        self.expected_losses.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn total_observed_loss(&self) -> T {
        self.observed_losses.iter().fold(T::zero(), |acc, &v| acc + v)
    }
}

impl<T: Real> EpisodeTrace<T> {
    /// Writes `t,arm,observed,expected` with 1-based `t` and `arm`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "arm", "observed", "expected"])?;
        for (i, ((&arm, &obs), &exp)) in self
            .arms
            .iter()
            .zip(&self.observed_losses)
            .zip(&self.expected_losses)
            .enumerate()
        {
            out.write_record([
                (i + 1).to_string(),
                (arm + 1).to_string(),
                fmt_f64(obs.to_f64_lossy()),
                fmt_f64(exp.to_f64_lossy()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest decimal string that round-trips to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    // Display on f64 is shortest-round-trip.
    format!("{x}")
}

/// `b = l1 - diag(A) / 2`.
pub fn effective_linear_term<T: Scalar>(inst: &Instance<T>) -> Vec<T> {
    inst.initial_losses
        .iter()
        .zip(inst.a.diagonal())
        .map(|(&l, d)| l - d * T::half())
        .collect()
}

/// `b^T x + 1/2 x^T A x` for a real-valued point `x`.
pub fn quadratic_loss<T: Scalar>(b: &[T], a: &InteractionMatrix<T>, x: &[T]) -> T {
    dot(b, x) + a.quadratic_form(x) * T::half()
}

/// Expected cumulative loss of any action order with the given counts.
pub fn total_loss_closed_form<T: Scalar>(inst: &Instance<T>, x: &PullCounts) -> Result<T> {
    if x.k() != inst.k() {
        return Err(Error::DimensionMismatch {
            expected: inst.k(),
            got: x.k(),
        });
    }
    let xs: Vec<T> = x.as_scalars();
    let linear = dot(&inst.initial_losses, &xs);
    let quad = inst.a.quadratic_form(&xs) * T::half();
    let diag = dot(&inst.a.diagonal(), &xs) * T::half();
    Ok(linear + quad - diag)
}

/// Noiseless replay: the expected loss of each chosen arm and the final counts.
pub fn replay_expected<T: Scalar>(inst: &Instance<T>, arms: &[usize]) -> Result<(Vec<T>, PullCounts)> {
    let k = inst.k();
    let mut losses = inst.initial_losses.clone();
    let mut counts = PullCounts::zeros(k);
    let mut seen = Vec::with_capacity(arms.len());
    for &arm in arms {
        inst.check_arm(arm)?;
        seen.push(losses[arm]);
        for (l, &delta) in losses.iter_mut().zip(inst.a.row(arm)) {
            *l = *l + delta;
        }
        counts.record(arm, k)?;
    }
    Ok((seen, counts))
}

/// Loss vector after the given counts: `l1 + A x`.
pub fn losses_at<T: Scalar>(inst: &Instance<T>, x: &PullCounts) -> Vec<T> {
    let ax = inst.a.mul_vec(&x.as_scalars());
    inst.initial_losses
        .iter()
        .zip(ax)
        .map(|(&l, v)| l + v)
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct NoiseJson {
    kind: String,
    #[serde(default)]
    param: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceJson {
    k: usize,
    a: Vec<Vec<f64>>,
    l1: Vec<f64>,
    noise: NoiseJson,
}

impl Instance<f64> {
    pub fn to_json(&self) -> Result<String> {
        let doc = InstanceJson {
            k: self.k(),
            a: self.a.rows(),
            l1: self.initial_losses.clone(),
            noise: NoiseJson {
                kind: self.noise.kind().to_string(),
                param: self.noise.param(),
            },
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the JSON form; the matrix is PSD-certified when it qualifies.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceJson = serde_json::from_str(text)?;
        if doc.a.len() != doc.k {
            return Err(Error::DimensionMismatch {
                expected: doc.k,
                got: doc.a.len(),
            });
        }
        let a = InteractionMatrix::from_rows(&doc.a)?;
        if a.entries().iter().chain(&doc.l1).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("instance"));
        }
        let noise = NoiseModel::from_kind(&doc.noise.kind, doc.noise.param)?;
        Instance::new(a.with_psd_check(), doc.l1, noise)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
