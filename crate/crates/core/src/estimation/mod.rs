//! Estimating `(l1, A)` from logs, the stationary baseline, and the online
//! probing estimator.

pub mod analysis;
pub mod baseline;
pub mod fit;
pub mod log;
pub mod probe;

pub use analysis::{analyze_fits, FitSummary, NormKind};
pub use baseline::{stationary_baseline, BaselineResult};
pub use fit::{fit_interaction_model, FitHyperparams, FitResult, LeastSquaresProblem, Parametrization};
pub use log::{ingest_rating_csv, synthetic_log, IngestOptions, LogEvent, LogGenerator, RatingLog};
pub use probe::{probe_pulls, probing_estimator, ProbeResult};
