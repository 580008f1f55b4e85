//! Outage scenario grid, learning features and supervision labels.

pub mod features;
pub mod grid;
pub mod labels;

pub use features::{build_features, FeatureHeader, FeatureTensor, CHANNELS};
pub use grid::{generate_grid, split_dataset, DatasetSplit, GridConfig, Scenario};
pub use labels::extract_labels;
