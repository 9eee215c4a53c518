//! Adaptive selection of instances for human annotation: a boosted
//! confidence → error regressor, inclusion probabilities proportional to
//! predicted error (times leverage for regression targets), and the batched
//! sampling loop.

mod allocation;
mod leverage;
mod plan;
mod predictor;
mod session;

pub use allocation::{compute_pi, Allocation};
pub use leverage::leverage_for;
pub use plan::{uniform_plan, LabelSource, SamplingPlan, SimulationOracle};
pub use predictor::{fit_error_predictor, fit_error_predictor_with, BoostingParams, ErrorPredictor};
pub use session::{run_sampling_loop, SamplingSession};
