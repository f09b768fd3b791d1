//! Deterministic federated-learning simulator built around guessed Adam updates.
//!
//! Clients with a limited computational budget run `u` real Adam steps on
//! local mini-batches and then `g` extra steps that feed the last computed
//! gradient back into the optimizer. Guessed steps cost no gradient
//! evaluation; the server averages the returned models.
//!
//! Module map:
//!
//! * [`numeric`]: dense vectors and labeled, replayable random streams.
//! * [`models`]: logistic regression and a one-hidden-layer MLP with analytic gradients.
//! * [`optim`]: SGD, momentum, RMSProp and Adam update rules.
//! * [`data`]: synthetic non-IID benchmark, IID repartition, batching, dataset files.
//! * [`federation`]: server round loop, client update with guessing, aggregation.
//! * [`harness`]: paired Baseline/GeL/Target experiments, sweeps, metrics and result files.
//!
//! Client updates inside a round run on rayon when the `parallel` feature is
//! enabled (the default). Results are merged in ascending client-id order, so
//! serial and parallel execution produce bit-identical trajectories.

pub mod data;
pub mod error;
pub mod exec;
pub mod federation;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod optim;

pub use error::{Error, Result};
