//! Multi-interest process pattern discovery.
//!
//! The crate turns CSV event logs into partially ordered traces, grows
//! labeled DAG patterns one node at a time, scores every candidate with a
//! set of interest functions and keeps the Pareto-optimal ones for the next
//! round. An evaluation harness measures how well a discovered pattern set
//! predicts the process outcome.
//!
//! Module map:
//!
//! - [`log_model`]: events, traces, CSV ingestion under a declarative schema.
//! - [`partial_order`]: conversion of traces into block-chain DAGs.
//! - [`patterns`]: pattern representation, canonical keys, instance matching.
//! - [`extension`]: the six one-node extension rules.
//! - [`interest`]: coverage, outcome interest, case distance, survival stats.
//! - [`pareto`]: dominance and front filtering.
//! - [`discovery`]: interactive and automated discovery sessions.
//! - [`eval`]: frequency encoding, CART trees, stratified cross-validation.
//! - [`synth`]: seeded generator for logs with planted patterns.

pub mod bitmatrix;
pub mod discovery;
pub mod eval;
pub mod extension;
pub mod interest;
pub mod log_model;
pub mod pareto;
pub mod partial_order;
pub mod patterns;
pub mod synth;

pub use discovery::{DiscoveryConfig, DiscoverySession, Iteration};
pub use extension::{ExtensionRule, Quantifier};
pub use interest::InterestVector;
pub use log_model::{EventLog, LogSchema, OutcomeKind, OutcomeValue};
pub use pareto::{Direction, MeasuredPattern};
pub use partial_order::{OracleConfig, PoLog, PoTrace, RelationKind};
pub use patterns::{Pattern, PatternId};
