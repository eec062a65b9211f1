//! Bandits whose arm losses evolve through a symmetric interaction matrix.
//!
//! Pulling arm `i` reveals its current loss (plus noise) and adds row `i` of
//! an unknown matrix `A` to every arm's loss. The crate provides the
//! simulation environment, the last-observation LCB policy and standard
//! baselines, the continuous-relaxation benchmark, regret-growth experiments,
//! and estimators of `A` from logged interactions.
//!
//! The numeric core is generic over the scalar type: the loss algebra accepts
//! anything implementing [`Scalar`] (including exact rationals), while
//! eigenvalues, the simplex solver and the environment need [`Real`]. The
//! aliases below fix the scalar to `f64`, which is what the experiments and
//! estimators use.

pub mod benchmark;
pub mod env;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod matrix;
pub mod model;
pub mod policy;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{NoiseModel, PullCounts};
pub use policy::{Policy, PolicySpec};
pub use scalar::{Real, Scalar};

pub type InteractionMatrix = matrix::InteractionMatrix<f64>;
pub type Instance = model::Instance<f64>;
pub type EpisodeTrace = model::EpisodeTrace<f64>;
pub type Environment = env::Environment<f64>;
pub type SimplexQpSolution = benchmark::SimplexQpSolution<f64>;
