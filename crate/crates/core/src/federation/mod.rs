//! The guess-and-learn protocol engine.
//!
//! Each round the server selects `K` clients, fixes every selected client's
//! budget `u_k` and guess count `g_k`, and broadcasts the global model. A
//! client builds a fresh optimizer, takes `u_k` real steps on sampled
//! mini-batches, then `g_k` more steps that reuse its last computed gradient,
//! and returns its model. The server replaces the global model with the plain
//! mean of the returned models.

mod client;
mod plan;
mod server;

pub use client::{client_update, ClientOutcome, StepRecord};
pub use plan::{assign_guesses, select_clients, BudgetModel, ClientPlan, GuessPolicy};
pub use server::{
    aggregate, run_training, Checkpoint, RoundOutcome, RoundRecord, Server, TrainingConfig, TrainingRun,
};

/// Stream labels derived from the master seed. Paired runs that share a
/// master seed share every one of these streams.
pub mod streams {
    pub const INIT: &str = "init";

    pub fn select(round: usize) -> String {
        format!("select/{round}")
    }

    pub fn budget(round: usize) -> String {
        format!("budget/{round}")
    }

    pub fn client(round: usize, client: usize) -> String {
        format!("client/{round}/{client}")
    }
}
