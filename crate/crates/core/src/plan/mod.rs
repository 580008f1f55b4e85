//! Restoration plan model, objective, device models, frequency surrogate
//! and the constraint validator.

pub mod config;
pub mod devices;
pub mod frequency;
pub mod io;
pub mod islands;
pub mod model;
pub mod objective;
pub mod report;
pub mod validate;

pub use config::{Band, FrequencySurrogate, Params, RuleSet};
pub use devices::{bess_step, clpu_demand, clpu_multiplier, pv_output, BessStep};
pub use io::{read_plan_dir, write_plan_dir, PlanManifest};
pub use frequency::{evaluate_frequency, FrequencyState};
pub use model::{RestorationPlan, StepRecord};
pub use objective::{objective_value, step_score};
pub use report::{Constraint, Violation, ViolationReport};
pub use validate::{radiality_terms, slack_count, validate_plan, validate_step};
