//! Configurable synchronization structure: black-start sets, SSW
//! configurations, system modes and classes, and the safe-transition test.

pub mod config;
pub mod mode;
pub mod safety;
pub mod sets;

pub use config::{feasible_configurations, SswConfigSet};
pub use mode::{enumerate_modes, mode_of, modes_by_class, CatalogueEntry, Mode, ModeCatalogue};
pub use safety::{check_transition_safety, pair_index, SafetyVerdict, SyncMatrix};
pub use sets::BlackStartSets;
