//! Plan search, the exhaustive oracle, warm starts and model export.

pub mod brute;
pub mod export;
pub mod fill;
pub mod search;
pub mod warm;

pub use brute::brute_force_small;
pub use export::{build_model, export_model, plan_point, Census, LpModel};
pub use fill::{fill, StepAction};
pub use search::{solve, solve_outcome, Budget, SolveOutcome, SolveStats, SolveStatus};
pub use warm::{check_warm_start, PartialAssignment, WarmStrategy};
