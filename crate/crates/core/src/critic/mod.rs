//! State-value critics, λ-returns, fitted value iteration and compatible
//! Q critics.

mod compatible;
mod returns;
mod value;

pub use compatible::{CompatibleQCritic, COMPATIBLE_RIDGE};
pub use returns::{lambda_returns, lambda_targets, td_error, LambdaReturnBatch};
pub use value::{fitted_value_iteration, FittedIteration, VCritic};
