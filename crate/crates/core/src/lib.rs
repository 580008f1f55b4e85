//! Restoration engine for DER-led black start of distribution feeders with
//! synchronization-safe dynamic microgrid formation.
//!
//! The crate is organised bottom-up: [`topology`] ingests a feeder and builds
//! the block-level backbone graph, [`sync_structure`] derives the system
//! modes, [`plan`] holds the restoration plan model and its validator,
//! [`powerflow`] evaluates the linear unbalanced flow model, [`optimizer`]
//! searches for plans, [`feasibility`] turns logits into safe
//! synchronization schedules and warm starts, and [`scenario`] generates the
//! outage grid and learning features. [`experiment`] runs strategy batches
//! and renders report tables.

pub mod dsu;
pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod fixtures;
pub mod network;
pub mod optimizer;
pub mod plan;
pub mod powerflow;
pub mod scenario;
pub mod settings;
pub mod sync_structure;
pub mod topology;

pub use error::{Error, Result};
pub use network::Network;
