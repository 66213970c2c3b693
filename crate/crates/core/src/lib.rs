//! Churn propensity modelling and causal effect analysis.
//!
//! The crate covers the whole pipeline: windowed label construction from
//! member histories, stratified splitting and standardization, SMOTE
//! rebalancing, a feedforward classifier trained with ADAM, voting
//! ensembles, ranking metrics, Shapley attributions, and backdoor-adjusted
//! effect estimation on a user-supplied causal DAG. A structural causal
//! model generator supplies data with known interventional effects.

pub mod causal;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod model;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
