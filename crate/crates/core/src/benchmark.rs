//! Continuous-relaxation benchmark and regret.
//!
//! The relaxed optimum `L*(t) = min_{x in t * simplex} b^T x + 1/2 x^T A x`
//! lower-bounds the loss of every action sequence of length `t`. With
//! `x = t p` the problem becomes
//!
//! ```text
//! minimize  t b^T p + t^2 / 2 p^T A p   over the probability simplex
//! ```
//!
//! which is solved with Frank-Wolfe steps (plus away steps, which keep
//! convergence linear when the optimum sits on a face) and exact line search.

use crate::error::{Error, Result};
use crate::matrix::{dot, InteractionMatrix};
use crate::model::{effective_linear_term, total_loss_closed_form, EpisodeTrace, Instance, PullCounts};
use crate::scalar::{argmin_by, Real, Scalar};

pub const DEFAULT_QP_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_QP_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct QpOptions<T> {
    /// Stop once the duality gap is at most `tolerance * (1 + |value|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub warm_start: Option<Vec<T>>,
    /// Keep the objective after every iteration in the solution.
    pub record_history: bool,
}

impl<T> Default for QpOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_QP_TOLERANCE,
            max_iterations: DEFAULT_QP_MAX_ITERATIONS,
            warm_start: None,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQpSolution<T> {
    pub p_star: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub duality_gap: T,
    pub history: Vec<T>,
}

impl<T: Real> SimplexQpSolution<T> {
    /// `value - duality_gap`; a bound that holds even before full convergence.
    pub fn certified_lower_bound(&self) -> T {
        self.value - self.duality_gap
    }
}

/// Minimizes `t b^T p + t^2/2 p^T A p` over the simplex.
pub fn solve_simplex_qp<T: Real>(b: &[T], a: &InteractionMatrix<T>, t: T) -> Result<SimplexQpSolution<T>> {
    solve_simplex_qp_with(b, a, t, &QpOptions::default())
}

pub fn solve_simplex_qp_with<T: Real>(
    b: &[T],
    a: &InteractionMatrix<T>,
    t: T,
    opts: &QpOptions<T>,
) -> Result<SimplexQpSolution<T>> {
    let k = a.k();
    if b.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: b.len() });
    }
    if !(t >= T::one()) {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if b.iter().chain(a.entries()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quadratic program"));
    }
    if !a.is_psd_certified() {
        let min = a.min_eigenvalue();
        if min < -a.psd_tolerance() {
            return Err(Error::NotPsd { min_eigenvalue: min.to_f64_lossy() });
        }
    }

    let lin: Vec<T> = b.iter().map(|&v| v * t).collect();
    let quad_scale = t * t;
    let objective = |p: &[T], ap: &[T]| dot(&lin, p) + quad_scale * T::half() * dot(p, ap);

    let mut p = match &opts.warm_start {
        Some(start) if start.len() == k => project_to_simplex(start),
        _ => {
            let vertex_values = (0..k).map(|i| lin[i] + quad_scale * T::half() * a.get(i, i));
            let best = argmin_by(vertex_values).unwrap_or(0);
            unit(k, best)
        }
    };
    let mut ap = a.mul_vec(&p);
    let mut value = objective(&p, &ap);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(value);
    }
    let tol = T::lit(opts.tolerance);

    for iteration in 0..=opts.max_iterations {
        let grad: Vec<T> = (0..k).map(|i| lin[i] + quad_scale * ap[i]).collect();
        let g_p = dot(&grad, &p);
        let fw = argmin_by(grad.iter().copied()).unwrap_or(0);
        let gap = (g_p - grad[fw]).max(T::zero());
        if gap <= tol * (T::one() + value.abs()) {
            let p_star = project_to_simplex(&p);
            return Ok(SimplexQpSolution {
                p_star,
                value,
                iterations: iteration,
                duality_gap: gap,
                history,
            });
        }
        if iteration == opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations: iteration,
                gap: gap.to_f64_lossy(),
            });
        }

        // away vertex: worst gradient among the support
        let mut away = fw;
        let mut away_grad = T::neg_infinity();
        for i in 0..k {
            if p[i] > T::zero() && grad[i] > away_grad {
                away = i;
                away_grad = grad[i];
            }
        }
        let away_gap = away_grad - g_p;

        // direction d, step cap, and whether the cap drops `away` from the support
        let (d, step_max, is_away) = if gap >= away_gap || p[away] >= T::one() {
            let mut d: Vec<T> = p.iter().map(|&v| -v).collect();
            d[fw] = d[fw] + T::one();
            (d, T::one(), false)
        } else {
            let mut d = p.clone();
            d[away] = d[away] - T::one();
            (d, p[away] / (T::one() - p[away]), true)
        };

        let slope = dot(&grad, &d);
        let ad = a.mul_vec(&d);
        let curvature = quad_scale * dot(&d, &ad);
        let step = if curvature > T::zero() {
            (-slope / curvature).min(step_max).max(T::zero())
        } else {
            step_max
        };
        if step == T::zero() {
            // rounding has stalled progress; the current point is as good as it gets
            let p_star = project_to_simplex(&p);
            return Ok(SimplexQpSolution {
                p_star,
                value,
                iterations: iteration,
                duality_gap: gap,
                history,
            });
        }
        for i in 0..k {
            p[i] = p[i] + step * d[i];
            ap[i] = ap[i] + step * ad[i];
        }
        if is_away && step == step_max {
            p[away] = T::zero();
        }
        for v in p.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        // refresh A p periodically to keep the incremental update honest
        if iteration % 64 == 63 {
            ap = a.mul_vec(&p);
        }
        value = objective(&p, &ap);
        if opts.record_history {
            history.push(value);
        }
    }
    unreachable!("loop returns on the last iteration")
}

fn unit<T: Scalar>(k: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); k];
    e[i] = T::one();
    e
}

/// Clamps negatives and rescales to sum one.
fn project_to_simplex<T: Real>(p: &[T]) -> Vec<T> {
    let clamped: Vec<T> = p.iter().map(|&v| v.max(T::zero())).collect();
    let total = clamped.iter().fold(T::zero(), |acc, &v| acc + v);
    if total <= T::zero() {
        return unit(p.len(), 0);
    }
    clamped.into_iter().map(|v| v / total).collect()
}

/// Exact minimizer for two arms: the objective restricted to
/// `p = (q, 1 - q)` is a scalar quadratic in `q` on `[0, 1]`.
pub fn solve_two_arm_closed_form<T: Real>(b: &[T], a: &InteractionMatrix<T>, t: T) -> Result<(Vec<T>, T)> {
    if a.k() != 2 || b.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.k() });
    }
    let two = T::one() + T::one();
    let f = |q: T| {
        let p = [q, T::one() - q];
        t * dot(b, &p) + t * t / two * a.quadratic_form(&p)
    };
    // f(q) = c2 q^2 + c1 q + c0
    let c2 = t * t / two * (a.get(0, 0) - two * a.get(0, 1) + a.get(1, 1));
    let c1 = t * (b[0] - b[1]) + t * t * (a.get(0, 1) - a.get(1, 1));
    let mut candidates = vec![T::zero(), T::one()];
    if c2 > T::zero() {
        let q = -c1 / (two * c2);
        if q > T::zero() && q < T::one() {
            candidates.push(q);
        }
    }
    let q = candidates
        .into_iter()
        .min_by(|x, y| f(*x).partial_cmp(&f(*y)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(T::zero());
    Ok((vec![q, T::one() - q], f(q)))
}

/// Relaxed optimum `L*(t)` for an instance.
pub fn relaxed_optimum<T: Real>(inst: &Instance<T>, t: u64) -> Result<SimplexQpSolution<T>> {
    solve_simplex_qp(&effective_linear_term(inst), &inst.a, T::from_count(t))
}

/// Which benchmark a regret is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Benchmark {
    /// The continuous relaxation `L*`.
    #[default]
    Relaxation,
    /// The exact best sequence; only known for the two analytic instances.
    KnownOptimum,
    /// `KnownOptimum` when available, otherwise `Relaxation`.
    Auto,
}

/// Which analytic instance, if any, this is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnownInstance {
    /// `A = [[1,1],[1,2]]`, `l1 = [1,1]`; best sequence plays arm 1 forever.
    Counterexample,
    /// `A = [[1,1/2],[1/2,1/4]]`, `l1 = [1/2,1/8]`; best sequence plays arm 2.
    LinearRegret,
}

impl KnownInstance {
    pub fn identify<T: Scalar>(inst: &Instance<T>) -> Option<Self> {
        if inst.k() != 2 {
            return None;
        }
        let one = T::one();
        let two = one + one;
        let half = T::half();
        let quarter = half * half;
        let eighth = quarter * half;
        let a = inst.a.entries();
        let l = &inst.initial_losses;
        if a == [one, one, one, two] && l[..] == [one, one] {
            Some(KnownInstance::Counterexample)
        } else if a == [one, half, half, quarter] && l[..] == [half, eighth] {
            Some(KnownInstance::LinearRegret)
        } else {
            None
        }
    }

    /// Loss of the best action sequence of length `t`.
    pub fn optimum<T: Scalar>(&self, t: u64) -> T {
        let t = T::from_count(t);
        match self {
            KnownInstance::Counterexample => t * (t + T::one()) * T::half(),
            KnownInstance::LinearRegret => t * t * T::half() * T::half() * T::half(),
        }
    }
}

/// Benchmark loss for horizon `t`.
pub fn benchmark_value<T: Real>(inst: &Instance<T>, t: u64, kind: Benchmark) -> Result<T> {
    let known = KnownInstance::identify(inst);
    match (kind, known) {
        (Benchmark::KnownOptimum, None) => Err(Error::InvalidParameter(
            "no analytically known optimum for this instance".into(),
        )),
        (Benchmark::KnownOptimum | Benchmark::Auto, Some(known)) => Ok(known.optimum(t)),
        _ => Ok(relaxed_optimum(inst, t)?.value),
    }
}

/// Expected total loss of the trace minus `L*` at the trace's horizon.
pub fn regret<T: Real>(inst: &Instance<T>, trace: &EpisodeTrace<T>) -> Result<T> {
    regret_with(inst, trace, Benchmark::Relaxation)
}

pub fn regret_with<T: Real>(inst: &Instance<T>, trace: &EpisodeTrace<T>, kind: Benchmark) -> Result<T> {
    let counts = trace.counts(inst.k())?;
    regret_for_counts(inst, &counts, kind)
}

pub fn regret_for_counts<T: Real>(inst: &Instance<T>, counts: &PullCounts, kind: Benchmark) -> Result<T> {
    let total = total_loss_closed_form(inst, counts)?;
    Ok(total - benchmark_value(inst, counts.horizon(), kind)?)
}

/// Regret on the counterexample instance against its exact optimum `T(T+1)/2`.
pub fn regret_exact_counterexample<T: Scalar>(trace: &EpisodeTrace<T>) -> Result<T> {
    if let Some(&arm) = trace.arms.iter().find(|&&arm| arm >= 2) {
        return Err(Error::ArmOutOfRange { arm, k: 2 });
    }
    let counts = PullCounts::from_arms(2, &trace.arms)?;
    Ok(counterexample_regret_from_counts(counts.counts()[0], counts.counts()[1]))
}

/// `n1^2/2 + n1 n2 + n2^2 + n1/2 - T(T+1)/2` with `T = n1 + n2`.
pub fn counterexample_regret_from_counts<T: Scalar>(n1: u64, n2: u64) -> T {
    let (a, b) = (T::from_count(n1), T::from_count(n2));
    let total = T::half() * a * a + a * b + b * b + T::half() * a;
    total - KnownInstance::Counterexample.optimum(n1 + n2)
}

/// Upper bound on the regret of the last-observation LCB policy:
/// `((5K+3)/2 + 2 ||l1||_inf) T + (2K + 2 ||l1||_inf + 4) T ln T`.
pub fn influential_lcb_regret_bound(k: usize, initial_loss_sup: f64, t: u64) -> f64 {
    let k = k as f64;
    let t = t as f64;
    ((5.0 * k + 3.0) / 2.0 + 2.0 * initial_loss_sup) * t + (2.0 * k + 2.0 * initial_loss_sup + 4.0) * t * t.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> InteractionMatrix<f64> {
        InteractionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn prop3() -> Instance<f64> {
        Instance::new(mat(&[&[1.0, 0.5], &[0.5, 0.25]]), vec![0.5, 0.125], NoiseModel::None).unwrap()
    }

    #[test]
    fn prop3_relaxation_is_t_squared_over_eight() {
        let a = mat(&[&[1.0, 0.5], &[0.5, 0.25]]);
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let sol = solve_simplex_qp(&[0.0, 0.0], &a, t).unwrap();
            assert_eq!(sol.p_star, vec![0.0, 1.0]);
            assert_relative_eq!(sol.value, t * t / 8.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn linear_objective_picks_cheapest_vertex() {
        let sol = solve_simplex_qp(&[3.0, -1.0], &InteractionMatrix::zeros(2), 10.0).unwrap();
        assert_eq!(sol.p_star, vec![0.0, 1.0]);
        assert_eq!(sol.value, -10.0);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(solve_simplex_qp(&[0.0, 0.0], &a, 5.0), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn rejects_bad_horizon_and_dimension() {
        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(solve_simplex_qp(&[0.0, 0.0], &a, 0.5).is_err());
        assert!(solve_simplex_qp(&[0.0], &a, 5.0).is_err());
    }

    #[test]
    fn interior_optimum_matches_two_arm_closed_form() {
        let a = mat(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let b = [0.5, 0.0];
        for t in [1.0, 7.0, 128.0, 16384.0] {
            let fw = solve_simplex_qp(&b, &a, t).unwrap();
            let (p, v) = solve_two_arm_closed_form(&b, &a, t).unwrap();
            assert_relative_eq!(fw.value, v, max_relative = 1e-9);
            assert!((fw.p_star[0] - p[0]).abs() < 1e-4);
        }
    }

    #[test]
    fn objective_never_increases() {
        let a = mat(&[&[2.0, -0.5, 0.3], &[-0.5, 1.0, 0.2], &[0.3, 0.2, 0.8]]).certify_psd().unwrap();
        let opts = QpOptions {
            record_history: true,
            ..QpOptions::default()
        };
        let sol = solve_simplex_qp_with(&[0.1, -0.2, 0.3], &a, 50.0, &opts).unwrap();
        assert!(sol.history.len() >= 2);
        for w in sol.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", w);
        }
        let total: f64 = sol.p_star.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(sol.duality_gap >= 0.0);
    }

    #[test]
    fn known_optima() {
        assert_eq!(KnownInstance::identify(&prop3()), Some(KnownInstance::LinearRegret));
        assert_eq!(KnownInstance::Counterexample.optimum::<f64>(100), 5050.0);
        assert_eq!(KnownInstance::LinearRegret.optimum::<f64>(8), 8.0);
    }

    #[test]
    fn prop3_single_mistake_costs_linear_regret() {
        for t in [8u64, 64, 1024] {
            let mut arms = vec![0];
            arms.extend(std::iter::repeat(1).take(t as usize - 1));
            let trace = EpisodeTrace {
                expected_losses: crate::model::replay_expected(&prop3(), &arms).unwrap().0,
                observed_losses: vec![0.0; arms.len()],
                arms,
                seed: 0,
            };
            let r = regret(&prop3(), &trace).unwrap();
            assert!((r - (t as f64 / 4.0 + 0.125)).abs() <= 1e-9);
        }
    }

    #[test]
    fn counterexample_regret_decomposition() {
        assert_eq!(counterexample_regret_from_counts::<f64>(100, 0), 0.0);
        // n1 = 3, n2 = 2: 4.5 + 6 + 4 + 1.5 - 15 = 1
        assert_eq!(counterexample_regret_from_counts::<f64>(3, 2), 1.0);
        let trace = EpisodeTrace::<f64> {
            arms: vec![0, 1, 1, 0, 0],
            observed_losses: vec![0.0; 5],
            expected_losses: vec![0.0; 5],
            seed: 0,
        };
        assert_eq!(regret_exact_counterexample(&trace).unwrap(), 1.0);
    }

    #[test]
    fn regret_bound_values() {
        // K = 2, ||l1|| = 1, T = 1: (13/2 + 2) * 1 + 0
        assert_eq!(influential_lcb_regret_bound(2, 1.0, 1), 8.5);
    }
}
