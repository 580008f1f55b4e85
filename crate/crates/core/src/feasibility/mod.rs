//! Turns predicted root labels and SSW closures into a synchronization-safe
//! schedule, scores predictions, and builds warm starts from them.

pub mod heuristic;
pub mod logits;
pub mod metrics;
pub mod resolve;
pub mod ste;
pub mod warm;

pub use heuristic::heuristic_logits;
pub use logits::{sigmoid, softmax, Dims, Logits};
pub use metrics::{metrics, DecisionTensors, MetricWeights, Metrics};
pub use resolve::{
    assign_root, compress, resolve_sequence, resolve_step, unite, FeasibleOutputs, ResolutionState, ResolveContext,
    DEFAULT_LAMBDA,
};
pub use ste::{sigmoid_slope, soft_root, soft_sync, ste_wrap, SteOutput};
pub use warm::{extract_warm_start, replay_modes, Extracted};
