//! Fitting `(l1, A)` to a logged history by gradient descent with momentum.
//!
//! The model predicts the loss of the arm chosen at event `t` as
//! `l1[arm] + (A x_t)[arm]`, where `x_t` counts the selections strictly
//! before `t`. `A` is parametrized either as `B B^T` (positive semi-definite)
//! or as `M + M^T` (any symmetric matrix).
//!
//! The squared error is a quadratic in the per-arm row `(l1[a], A[a, :])`, so
//! the fit keeps per-arm Gram matrices of the counts and every iteration
//! costs `O(K^3)` regardless of the log length.
//!
//! Counts and losses are centered per arm and divided by their RMS before
//! optimizing, which starts `l1` at the stationary per-arm means. The
//! returned estimates are in original units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::analysis::NormKind;
use super::log::{LogEvent, RatingLog};
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parametrization {
    /// `A = B B^T`.
    Psd,
    /// `A = M + M^T`.
    Indefinite,
}

impl Parametrization {
    pub fn name(&self) -> &'static str {
        match self {
            Parametrization::Psd => "psd",
            Parametrization::Indefinite => "indefinite",
        }
    }
}

impl std::str::FromStr for Parametrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psd" => Ok(Parametrization::Psd),
            "indefinite" => Ok(Parametrization::Indefinite),
            other => Err(Error::Parse(format!("unknown parametrization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitHyperparams {
    /// Step size on the normalized problem (centered counts and losses with
    /// unit RMS).
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iterations: usize,
    /// Window, in iterations, over which improvement is measured.
    pub patience: usize,
    /// Stop when the best MSE improves by less than this fraction over a window.
    pub min_relative_improvement: f64,
    /// Standard deviation of the fallback random `B` start (scaled units).
    pub init_scale: f64,
    pub init_seed: u64,
    pub norm: NormKind,
}

impl Default for FitHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            max_iterations: 50_000,
            patience: 100,
            min_relative_improvement: 1e-9,
            init_scale: 1e-2,
            init_seed: 0,
            norm: NormKind::MaxAbs,
        }
    }
}

impl FitHyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.momentum)
            && self.patience > 0
            && self.min_relative_improvement >= 0.0
            && self.init_scale >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("fit hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub user: String,
    pub l1_hat: Vec<f64>,
    pub a_hat: InteractionMatrix<f64>,
    pub parametrization: Parametrization,
    pub initial_train_mse: f64,
    pub train_mse: f64,
    pub loo_prediction: f64,
    pub loo_actual: f64,
    pub loo_squared_error: f64,
    pub norm_a: f64,
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration budget ran out or the objective diverged;
    /// the best iterate is still returned.
    pub converged: bool,
    /// Learning rate after any halvings triggered by divergence.
    pub final_learning_rate: f64,
}

/// Objective growth, relative to the last window, treated as divergence.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Centered, scaled sufficient statistics of one arm's events.
#[derive(Debug, Clone)]
struct ArmStats {
    n: f64,
    /// Mean count vector at this arm's events (original units).
    z_mean: Vec<f64>,
    /// Mean loss at this arm's events (original units).
    y_mean: f64,
    /// `sum z z^T` of the centered, scaled counts.
    gram: Vec<f64>,
    /// `sum y z` of the centered, scaled losses and counts.
    rhs: Vec<f64>,
    yy: f64,
}

/// Scaled least-squares problem built from a training prefix.
///
/// Per arm, counts and losses are centered on their means over that arm's
/// events; the centering is absorbed into `l1`. Both are then divided by a
/// common RMS scale. The parameter vector is `[c (k), W (k*k)]` where `c` is
/// the scaled offset of `l1` from its centered optimum and `W` is `B` or `M`.
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    k: usize,
    n: usize,
    x_scale: f64,
    y_scale: f64,
    arms: Vec<ArmStats>,
    global_mean: f64,
}

impl LeastSquaresProblem {
    pub fn new(train: &[LogEvent], k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InsufficientData("no training events".into()));
        }
        let n = train.len();
        let mut cnt = vec![0.0f64; k];
        let mut sz = vec![vec![0.0f64; k]; k];
        let mut szz = vec![vec![0.0f64; k * k]; k];
        let mut syz = vec![vec![0.0f64; k]; k];
        let mut sy = vec![0.0f64; k];
        let mut syy = vec![0.0f64; k];
        let mut counts = vec![0.0f64; k];
        for e in train {
            if e.arm >= k {
                return Err(Error::ArmOutOfRange { arm: e.arm, k });
            }
            let a = e.arm;
            cnt[a] += 1.0;
            sy[a] += e.loss;
            syy[a] += e.loss * e.loss;
            for r in 0..k {
                sz[a][r] += counts[r];
                syz[a][r] += e.loss * counts[r];
                for c in 0..k {
                    szz[a][r * k + c] += counts[r] * counts[c];
                }
            }
            counts[a] += 1.0;
        }

        let mut arms = Vec::with_capacity(k);
        let (mut trace, mut resid) = (0.0, 0.0);
        for a in 0..k {
            let na = cnt[a];
            if na == 0.0 {
                arms.push(ArmStats {
                    n: 0.0,
                    z_mean: vec![0.0; k],
                    y_mean: 0.0,
                    gram: vec![0.0; k * k],
                    rhs: vec![0.0; k],
                    yy: 0.0,
                });
                continue;
            }
            let zm: Vec<f64> = sz[a].iter().map(|s| s / na).collect();
            let ym = sy[a] / na;
            let mut gram = vec![0.0; k * k];
            for r in 0..k {
                for c in 0..k {
                    gram[r * k + c] = szz[a][r * k + c] - na * zm[r] * zm[c];
                }
            }
            let rhs: Vec<f64> = (0..k).map(|r| syz[a][r] - na * ym * zm[r]).collect();
            let yy = (syy[a] - na * ym * ym).max(0.0);
            trace += (0..k).map(|r| gram[r * k + r]).sum::<f64>();
            resid += yy;
            arms.push(ArmStats {
                n: na,
                z_mean: zm,
                y_mean: ym,
                gram,
                rhs,
                yy,
            });
        }
        let positive = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        let x_scale = positive((trace / (n * k) as f64).sqrt());
        let y_scale = positive((resid / n as f64).sqrt());
        for s in &mut arms {
            s.gram.iter_mut().for_each(|g| *g /= x_scale * x_scale);
            s.rhs.iter_mut().for_each(|h| *h /= x_scale * y_scale);
            s.yy /= y_scale * y_scale;
        }
        let global_mean = sy.iter().sum::<f64>() / n as f64;
        Ok(Self {
            k,
            n,
            x_scale,
            y_scale,
            arms,
            global_mean,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_params(&self) -> usize {
        self.k + self.k * self.k
    }

    fn mse_scaled(&self, c: &[f64], a: &[f64]) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for (arm, s) in self.arms.iter().enumerate() {
            let theta = &a[arm * k..(arm + 1) * k];
            let mut quad = 0.0;
            for r in 0..k {
                let row: f64 = (0..k).map(|j| s.gram[r * k + j] * theta[j]).sum();
                quad += theta[r] * row;
            }
            let lin: f64 = theta.iter().zip(&s.rhs).map(|(t, h)| t * h).sum();
            total += s.n * c[arm] * c[arm] + quad - 2.0 * lin + s.yy;
        }
        let mse = total / self.n as f64;
        // rounding can leave a tiny negative; NaN must pass through
        if mse < 0.0 { 0.0 } else { mse }
    }

    fn grad_scaled(&self, c: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k;
        let scale = 2.0 / self.n as f64;
        let mut g_c = vec![0.0; k];
        let mut g_a = vec![0.0; k * k];
        for (arm, s) in self.arms.iter().enumerate() {
            let theta = &a[arm * k..(arm + 1) * k];
            g_c[arm] = scale * s.n * c[arm];
            for r in 0..k {
                let g: f64 = (0..k).map(|j| s.gram[r * k + j] * theta[j]).sum::<f64>() - s.rhs[r];
                g_a[arm * k + r] = scale * g;
            }
        }
        (g_c, g_a)
    }

    /// Scaled MSE at the flat parameter vector `[c, W]`.
    pub fn objective(&self, param: Parametrization, params: &[f64]) -> f64 {
        let (c, w) = params.split_at(self.k);
        self.mse_scaled(c, &build_a(self.k, param, w))
    }

    /// Analytic gradient of [`objective`](Self::objective).
    pub fn gradient(&self, param: Parametrization, params: &[f64]) -> Vec<f64> {
        let k = self.k;
        let (c, w) = params.split_at(k);
        let (g_c, g_a) = self.grad_scaled(c, &build_a(k, param, w));
        // G + G^T
        let mut g_sym = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                g_sym[i * k + j] = g_a[i * k + j] + g_a[j * k + i];
            }
        }
        let g_w = match param {
            Parametrization::Indefinite => g_sym,
            Parametrization::Psd => {
                // d/dB <G, B B^T> = (G + G^T) B
                let mut out = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        out[i * k + j] = (0..k).map(|r| g_sym[i * k + r] * w[r * k + j]).sum();
                    }
                }
                out
            }
        };
        let mut grad = g_c;
        grad.extend(g_w);
        grad
    }

    /// Converts scaled `(c, A)` to `(l1, A)` in original units. Arms with no
    /// training events get the global mean loss.
    fn unscale(&self, c: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k;
        let factor = self.y_scale / self.x_scale;
        let a: Vec<f64> = a.iter().map(|v| v * factor).collect();
        let l1 = self
            .arms
            .iter()
            .enumerate()
            .map(|(arm, s)| {
                if s.n == 0.0 {
                    return self.global_mean;
                }
                let drift: f64 = (0..k).map(|j| a[arm * k + j] * s.z_mean[j]).sum();
                s.y_mean + self.y_scale * c[arm] - drift
            })
            .collect();
        (l1, a)
    }
}


/// `B B^T` or `M + M^T` from row-major `w`.
pub fn build_a(k: usize, param: Parametrization, w: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = match param {
                Parametrization::Psd => (0..k).map(|r| w[i * k + r] * w[j * k + r]).sum(),
                Parametrization::Indefinite => w[i * k + j] + w[j * k + i],
            };
        }
    }
    a
}

struct Descent {
    best: Vec<f64>,
    best_mse: f64,
    iterations: usize,
    converged: bool,
    learning_rate: f64,
}

/// Heavy-ball descent from `start`. The returned best iterate is never worse
/// than `floor`. A non-finite or exploding objective halves the learning rate
/// and restarts from the best iterate.
fn descend(
    problem: &LeastSquaresProblem,
    param: Parametrization,
    start: Vec<f64>,
    floor: (Vec<f64>, f64),
    hp: &FitHyperparams,
) -> Descent {
    let mut params = start;
    let start_mse = problem.objective(param, &params);
    let (mut best, mut best_mse) = if start_mse.is_finite() && start_mse <= floor.1 {
        (params.clone(), start_mse)
    } else {
        floor
    };
    let mut window_start_mse = best_mse;
    let mut velocity = vec![0.0; params.len()];
    let mut lr = hp.learning_rate;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=hp.max_iterations {
        iterations = it;
        let grad = problem.gradient(param, &params);
        for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *v = hp.momentum * *v - lr * g;
            *p += *v;
        }
        let mse = problem.objective(param, &params);
        if !mse.is_finite() || mse > DIVERGENCE_FACTOR * (window_start_mse + 1.0) {
            lr *= 0.5;
            params.copy_from_slice(&best);
            velocity.iter_mut().for_each(|v| *v = 0.0);
            if lr < hp.learning_rate * 1e-6 {
                break;
            }
            continue;
        }
        if mse < best_mse {
            best_mse = mse;
            best.copy_from_slice(&params);
        }
        if it % hp.patience == 0 {
            let improvement = window_start_mse - best_mse;
            if improvement <= hp.min_relative_improvement * window_start_mse.abs() {
                converged = true;
                break;
            }
            window_start_mse = best_mse;
        }
    }
    Descent {
        best,
        best_mse,
        iterations,
        converged,
        learning_rate: lr,
    }
}

/// Row-major `V sqrt(max(L, 0))`, so that `B B^T` is the nearest PSD matrix
/// to the symmetric `a`.
fn psd_factor(k: usize, a: &[f64]) -> Result<Vec<f64>> {
    let m = InteractionMatrix::new(k, a.to_vec())?;
    let (values, vectors) = m.eigen_decomposition();
    let mut b = vec![0.0; k * k];
    for (col, &lambda) in values.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for row in 0..k {
            b[row * k + col] = vectors[row * k + col] * s;
        }
    }
    Ok(b)
}

/// Fits on all but the last event and predicts the last one.
///
/// The indefinite fit starts from the stationary baseline (`M = 0`). The PSD
/// fit first runs the indefinite fit, which is convex, and starts `B` from
/// the PSD part of that estimate, or from a small random `B` if that is
/// better. `B = 0` itself is a stationary point and cannot be left.
pub fn fit_interaction_model(
    log: &RatingLog,
    k: usize,
    param: Parametrization,
    hp: &FitHyperparams,
) -> Result<FitResult> {
    hp.validate()?;
    let (train, held_out) = log.split_last()?;
    if held_out.arm >= k {
        return Err(Error::ArmOutOfRange { arm: held_out.arm, k });
    }
    let problem = LeastSquaresProblem::new(train, k)?;

    let zero = vec![0.0; k + k * k];
    let initial_mse = problem.objective(param, &zero);
    let floor = (zero.clone(), initial_mse);
    let indefinite = descend(&problem, Parametrization::Indefinite, zero.clone(), floor.clone(), hp);
    let (descent, iterations) = match param {
        Parametrization::Indefinite => {
            let it = indefinite.iterations;
            (indefinite, it)
        }
        Parametrization::Psd => {
            let a0 = build_a(k, Parametrization::Indefinite, &indefinite.best[k..]);
            let mut projected = indefinite.best[..k].to_vec();
            projected.extend(psd_factor(k, &a0)?);
            let mut rng = ChaCha8Rng::seed_from_u64(hp.init_seed);
            let mut random = vec![0.0; k];
            random.extend((0..k * k).map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                hp.init_scale * z
            }));
            let start = if problem.objective(param, &projected) <= problem.objective(param, &random) {
                projected
            } else {
                random
            };
            let psd = descend(&problem, param, start, floor, hp);
            let it = indefinite.iterations + psd.iterations;
            (psd, it)
        }
    };

    let (c_scaled, w) = descent.best.split_at(k);
    let a_scaled = build_a(k, param, w);
    let (l1_hat, a_entries) = problem.unscale(c_scaled, &a_scaled);
    let a_hat = InteractionMatrix::new(k, a_entries)?;
    let a_hat = match param {
        Parametrization::Psd => a_hat.with_psd_check(),
        Parametrization::Indefinite => a_hat,
    };

    let mut counts = vec![0.0; k];
    for e in train {
        counts[e.arm] += 1.0;
    }
    let loo_prediction = l1_hat[held_out.arm]
        + a_hat
            .row(held_out.arm)
            .iter()
            .zip(&counts)
            .map(|(a, x)| a * x)
            .sum::<f64>();
    let loo_squared_error = (loo_prediction - held_out.loss).powi(2);
    let y2 = problem.y_scale * problem.y_scale;

    Ok(FitResult {
        user: log.user_id.clone(),
        norm_a: hp.norm.apply(&a_hat),
        eigenvalues: a_hat.eigenvalues(),
        l1_hat,
        a_hat,
        parametrization: param,
        initial_train_mse: initial_mse * y2,
        train_mse: descent.best_mse * y2,
        loo_prediction,
        loo_actual: held_out.loss,
        loo_squared_error,
        iterations,
        converged: descent.converged,
        final_learning_rate: descent.learning_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::log::{synthetic_log, LogGenerator};
    use crate::experiments::random_instance;
    use crate::model::NoiseModel;

    fn log_from(arms: &[usize], losses: &[f64]) -> RatingLog {
        let events = arms
            .iter()
            .zip(losses)
            .map(|(&arm, &loss)| LogEvent { arm, loss })
            .collect();
        RatingLog::new("u", events, 3).unwrap()
    }

    #[test]
    fn psd_fit_is_psd_and_indefinite_fit_is_symmetric() {
        let inst = random_instance(3, 2).unwrap();
        let log = synthetic_log("u", &inst, 300, LogGenerator::Uniform, 1).unwrap();
        let hp = FitHyperparams {
            max_iterations: 2000,
            ..FitHyperparams::default()
        };
        let psd = fit_interaction_model(&log, 3, Parametrization::Psd, &hp).unwrap();
        assert!(psd.eigenvalues[0] >= -psd.a_hat.psd_tolerance());
        let ind = fit_interaction_model(&log, 3, Parametrization::Indefinite, &hp).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ind.a_hat.get(i, j).to_bits(), ind.a_hat.get(j, i).to_bits());
            }
        }
        assert!(psd.train_mse <= psd.initial_train_mse);
        assert!(ind.train_mse <= ind.initial_train_mse);
    }

    #[test]
    fn stationary_data_gives_near_zero_matrix() {
        let inst = crate::model::Instance::new(InteractionMatrix::zeros(3), vec![1.0, 2.0, 3.0], NoiseModel::None).unwrap();
        let log = synthetic_log("u", &inst, 500, LogGenerator::Uniform, 4).unwrap();
        for param in [Parametrization::Psd, Parametrization::Indefinite] {
            let fit = fit_interaction_model(&log, 3, param, &FitHyperparams::default()).unwrap();
            assert!(fit.norm_a < 1e-3, "{param:?} {}", fit.norm_a);
            for (got, want) in fit.l1_hat.iter().zip([1.0, 2.0, 3.0]) {
                assert!((got - want).abs() < 1e-2, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let inst = random_instance(3, 7).unwrap();
        let log = synthetic_log("u", &inst, 400, LogGenerator::Uniform, 3).unwrap();
        let problem = LeastSquaresProblem::new(log.split_last().unwrap().0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for param in [Parametrization::Psd, Parametrization::Indefinite] {
            for _ in 0..10 {
                let x: Vec<f64> = (0..problem.n_params()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let g = problem.gradient(param, &x);
                let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for i in 0..x.len() {
                    let (mut up, mut down) = (x.clone(), x.clone());
                    up[i] += h;
                    down[i] -= h;
                    let fd = (problem.objective(param, &up) - problem.objective(param, &down)) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * scale, "{param:?} coord {i}: {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn noiseless_psd_logs_are_recovered() {
        let inst = random_instance(3, 5).unwrap().with_noise(NoiseModel::None).unwrap();
        let log = synthetic_log("u", &inst, 2000, LogGenerator::Uniform, 5).unwrap();
        for param in [Parametrization::Psd, Parametrization::Indefinite] {
            let fit = fit_interaction_model(&log, 3, param, &FitHyperparams::default()).unwrap();
            for (got, want) in fit.a_hat.entries().iter().zip(inst.a.entries()) {
                assert!((got - want).abs() <= 1e-2, "{param:?}: {got} vs {want}");
            }
            for (got, want) in fit.l1_hat.iter().zip(&inst.initial_losses) {
                assert!((got - want).abs() <= 1e-2);
            }
            assert!(fit.loo_squared_error < 1e-3);
        }
    }

    #[test]
    fn indefinite_fit_finds_negative_eigenvalue() {
        let a = InteractionMatrix::from_rows(&[
            vec![0.5, 1.0, 0.0],
            vec![1.0, 0.2, 0.3],
            vec![0.0, 0.3, -0.4],
        ])
        .unwrap();
        assert!(a.min_eigenvalue() < 0.0);
        let inst = crate::model::Instance::new(a, vec![0.0, 1.0, 2.0], NoiseModel::None).unwrap();
        let log = synthetic_log("u", &inst, 2000, LogGenerator::Uniform, 9).unwrap();
        let fit = fit_interaction_model(&log, 3, Parametrization::Indefinite, &FitHyperparams::default()).unwrap();
        assert!(fit.eigenvalues[0] < -0.1, "{:?}", fit.eigenvalues);
        let psd = fit_interaction_model(&log, 3, Parametrization::Psd, &FitHyperparams::default()).unwrap();
        assert!(psd.eigenvalues[0] >= -psd.a_hat.psd_tolerance());
    }

    #[test]
    fn divergent_learning_rate_is_halved() {
        let inst = random_instance(3, 2).unwrap();
        let log = synthetic_log("u", &inst, 300, LogGenerator::Uniform, 1).unwrap();
        let hp = FitHyperparams {
            learning_rate: 50.0,
            max_iterations: 3000,
            ..FitHyperparams::default()
        };
        let fit = fit_interaction_model(&log, 3, Parametrization::Indefinite, &hp).unwrap();
        assert!(fit.final_learning_rate < 50.0);
        assert!(fit.train_mse.is_finite() && fit.train_mse <= fit.initial_train_mse);
    }

    #[test]
    fn held_out_event_is_the_last_one() {
        let log = log_from(&[0, 1, 0, 2], &[1.0, 1.0, 1.0, 9.0]);
        let fit = fit_interaction_model(&log, 3, Parametrization::Indefinite, &FitHyperparams::default()).unwrap();
        assert_eq!(fit.loo_actual, 9.0);
        assert!((fit.loo_squared_error - (fit.loo_prediction - 9.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn single_event_log_is_rejected() {
        let log = log_from(&[0], &[1.0]);
        assert!(fit_interaction_model(&log, 3, Parametrization::Psd, &FitHyperparams::default()).is_err());
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        let log = log_from(&[0, 1, 2], &[1.0, 1.0, 1.0]);
        let hp = FitHyperparams {
            momentum: 1.0,
            ..FitHyperparams::default()
        };
        assert!(fit_interaction_model(&log, 3, Parametrization::Psd, &hp).is_err());
    }

    #[test]
    fn parametrization_names_round_trip() {
        for p in [Parametrization::Psd, Parametrization::Indefinite] {
            assert_eq!(p.name().parse::<Parametrization>().unwrap(), p);
        }
    }
}
