//! Batch experiments across warm-start strategies and report tables.

pub mod batch;
pub mod render;

pub use batch::{
    aggregate, run_batch, run_scenario, scenario_seed, warm_start_for, BatchOptions, BatchRow, ExperimentReport,
    StrategyAggregate,
};
pub use render::{report_render, ClassRow, EnvelopeRow, RenderedTables, RestoredRow};
