//! FADE: Fisher-guided online adaptation under sequential covariate shift.
//!
//! The crate is organized around a sequential pipeline: [`data_stream`]
//! produces temporally ordered labeled batches, [`divergence`] and [`fisher`]
//! summarize how the feature distribution and the model's sensitivity move
//! between consecutive batches, [`detector`] turns those summaries into a
//! shift signal, and [`adapter`] runs the shift-gated, Fisher-regularized
//! update loop together with ERM and EWC baselines. [`federated`] reuses the
//! same machinery across simulated non-i.i.d. clients, [`metrics`] computes
//! evaluation quantities, and [`experiment`] binds everything into the
//! config-driven runner behind the `fade` CLI.

pub mod adapter;
pub mod data_stream;
pub mod detector;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod federated;
pub mod fisher;
pub mod metrics;
pub mod models;
pub mod seeding;

pub use error::{FadeError, Result};
