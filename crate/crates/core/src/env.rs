//! Stateful simulation of the interaction-and-observation loop.
//!
//! Noise uses `rand_chacha`'s ChaCha8 generator. The draw for round `t` comes
//! from stream `t` of the generator keyed by the episode seed, so it depends
//! only on `(seed, t)`: a prefix of a long run is identical to a shorter run
//! with the same seed, whatever the policy did.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{EpisodeTrace, Instance, NoiseModel, PullCounts};
use crate::policy::Policy;
use crate::scalar::Real;

/// Per-round noise draws keyed by `(seed, t)`.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    model: NoiseModel,
    base: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(model: NoiseModel, seed: u64) -> Self {
        Self {
            model,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&self, t: u64) -> f64 {
        match self.model {
            NoiseModel::None => 0.0,
            NoiseModel::UniformBounded { bound } => self.round_rng(t).random_range(-bound..=bound),
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = self.round_rng(t).sample(StandardNormal);
                sigma * z
            }
        }
    }

    fn round_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(t);
        rng
    }
}

/// One live episode. `current_losses == l1 + A * counts` throughout.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    inst: Instance<T>,
    current_losses: Vec<T>,
    t: u64,
    counts: PullCounts,
    noise: NoiseStream,
    seed: u64,
}

/// Result of a single round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<T> {
    pub observed: T,
    pub expected: T,
}

impl<T: Real> Environment<T> {
    pub fn new(inst: Instance<T>, seed: u64) -> Self {
        let k = inst.k();
        Self {
            current_losses: inst.initial_losses.clone(),
            t: 1,
            counts: PullCounts::zeros(k),
            noise: NoiseStream::new(inst.noise, seed),
            inst,
            seed,
        }
    }

    pub fn instance(&self) -> &Instance<T> {
        &self.inst
    }

    pub fn k(&self) -> usize {
        self.inst.k()
    }

    /// Current (1-based) round.
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self) -> &PullCounts {
        &self.counts
    }

    pub fn current_losses(&self) -> &[T] {
        &self.current_losses
    }

    /// Pulls `arm`: returns the noisy loss and advances the dynamics.
    pub fn step(&mut self, arm: usize) -> Result<T> {
        Ok(self.step_detailed(arm)?.observed)
    }

    pub fn step_detailed(&mut self, arm: usize) -> Result<StepOutcome<T>> {
        if arm >= self.k() {
            return Err(Error::ArmOutOfRange { arm, k: self.k() });
        }
        let expected = self.current_losses[arm];
        let observed = expected + T::lit(self.noise.sample(self.t));
        for (l, &delta) in self.current_losses.iter_mut().zip(self.inst.a.row(arm)) {
            *l = *l + delta;
        }
        self.counts.record(arm, self.inst.k())?;
        self.t += 1;
        Ok(StepOutcome { observed, expected })
    }

    /// Largest deviation of the tracked losses from `l1 + A * counts`.
    pub fn state_residual(&self) -> T {
        crate::model::losses_at(&self.inst, &self.counts)
            .into_iter()
            .zip(&self.current_losses)
            .map(|(want, &got)| (want - got).abs())
            .fold(T::zero(), T::max)
    }
}

/// Runs `policy` for `horizon` rounds on a fresh environment.
pub fn run_policy<T, P>(inst: &Instance<T>, policy: &mut P, horizon: u64, seed: u64) -> Result<EpisodeTrace<T>>
where
    T: Real,
    P: Policy<T> + ?Sized,
{
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    policy.reset();
    let mut env = Environment::new(inst.clone(), seed);
    let mut trace = EpisodeTrace::with_capacity(horizon as usize, seed);
    for t in 1..=horizon {
        let arm = policy.select(t);
        let outcome = env.step_detailed(arm)?;
        policy.observe(t, arm, outcome.observed);
        trace.arms.push(arm);
        trace.observed_losses.push(outcome.observed);
        trace.expected_losses.push(outcome.expected);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::InteractionMatrix;
    use crate::model::replay_expected;
    use crate::policy::{FixedArm, InfluentialLcb, RoundRobin, StandardLcb};

    fn prop2(noise: NoiseModel) -> Instance<f64> {
        let a = InteractionMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        Instance::new(a, vec![1.0, 1.0], noise).unwrap()
    }

    #[test]
    fn noiseless_steps_follow_dynamics() {
        let mut env = Environment::new(prop2(NoiseModel::None), 0);
        assert_eq!(env.step(0).unwrap(), 1.0);
        assert_eq!(env.step(0).unwrap(), 2.0);
        assert_eq!(env.step(1).unwrap(), 3.0);
        assert_eq!(env.round(), 4);
        assert_eq!(env.counts().counts(), &[2, 1]);
        assert_eq!(env.state_residual(), 0.0);
    }

    #[test]
    fn stationary_when_matrix_is_zero() {
        let inst = Instance::new(InteractionMatrix::zeros(2), vec![3.0, -1.0], NoiseModel::None).unwrap();
        let mut env = Environment::new(inst, 1);
        for _ in 0..5 {
            assert_eq!(env.step(0).unwrap(), 3.0);
            assert_eq!(env.step(1).unwrap(), -1.0);
        }
    }

    #[test]
    fn bounded_noise_stays_in_bounds() {
        let mut env = Environment::new(prop2(NoiseModel::UniformBounded { bound: 1.0 }), 99);
        let mut max_dev: f64 = 0.0;
        for t in 0..2000 {
            let o = env.step_detailed(t % 2).unwrap();
            max_dev = max_dev.max((o.observed - o.expected).abs());
        }
        assert!(max_dev <= 1.0);
        assert!(max_dev > 0.5, "noise should actually be drawn");
    }

    #[test]
    fn step_rejects_bad_arm() {
        let mut env = Environment::new(prop2(NoiseModel::None), 0);
        assert!(matches!(env.step(5), Err(Error::ArmOutOfRange { arm: 5, k: 2 })));
        assert_eq!(env.round(), 1);
    }

    #[test]
    fn noise_depends_only_on_seed_and_round() {
        let s = NoiseStream::new(NoiseModel::Gaussian { sigma: 1.0 }, 42);
        let again = NoiseStream::new(NoiseModel::Gaussian { sigma: 1.0 }, 42);
        let other = NoiseStream::new(NoiseModel::Gaussian { sigma: 1.0 }, 43);
        assert_eq!(s.sample(17), again.sample(17));
        assert_ne!(s.sample(17), s.sample(18));
        assert_ne!(s.sample(17), other.sample(17));
    }

    #[test]
    fn run_policy_examples() {
        let trace = run_policy(&prop2(NoiseModel::None), &mut FixedArm::new(0, 2).unwrap(), 10, 0).unwrap();
        assert_eq!(trace.total_expected_loss(), 55.0);

        let a = InteractionMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.25]]).unwrap();
        let p3 = Instance::new(a, vec![0.5, 0.125], NoiseModel::None).unwrap();
        let trace = run_policy(&p3, &mut FixedArm::new(1, 2).unwrap(), 8, 0).unwrap();
        assert_eq!(trace.total_expected_loss(), 8.0);

        let trace = run_policy(&prop2(NoiseModel::None), &mut RoundRobin::new(2), 5, 3).unwrap();
        assert_eq!(trace.observed_losses, trace.expected_losses);
    }

    #[test]
    fn traces_are_deterministic_and_replayable() {
        let inst = prop2(NoiseModel::Gaussian { sigma: 1.0 });
        let a = run_policy(&inst, &mut StandardLcb::new(2), 200, 5).unwrap();
        let b = run_policy(&inst, &mut StandardLcb::new(2), 200, 5).unwrap();
        assert_eq!(a, b);
        let (replayed, _) = replay_expected(&inst, &a.arms).unwrap();
        assert_eq!(replayed, a.expected_losses);
    }

    #[test]
    fn seeds_do_not_matter_without_noise() {
        let inst = prop2(NoiseModel::None);
        let a = run_policy(&inst, &mut InfluentialLcb::new(2), 100, 1).unwrap();
        let b = run_policy(&inst, &mut InfluentialLcb::new(2), 100, 2).unwrap();
        assert_eq!(a.expected_losses, b.expected_losses);
    }

    #[test]
    fn prefix_of_long_run_matches_short_run() {
        let inst = prop2(NoiseModel::Gaussian { sigma: 1.0 });
        let long = run_policy(&inst, &mut InfluentialLcb::new(2), 300, 11).unwrap();
        let short = run_policy(&inst, &mut InfluentialLcb::new(2), 120, 11).unwrap();
        assert_eq!(&long.arms[..120], &short.arms[..]);
        assert_eq!(&long.observed_losses[..120], &short.observed_losses[..]);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        assert!(run_policy(&prop2(NoiseModel::None), &mut RoundRobin::new(2), 0, 0).is_err());
    }
}
