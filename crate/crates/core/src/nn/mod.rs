//! Minimal neural-network core.
//!
//! Dense networks are stored as a single flat parameter vector so that
//! optimizers, gradient checks and snapshots all work on `&[f64]`.

mod activation;
mod adam;
mod batchnorm;
mod gradcheck;
mod mlp;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState, StepDirection};
pub use batchnorm::{BatchNorm, BatchNormCache, BN_EPS, BN_MOMENTUM};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport};
pub use mlp::{Mode, MlpNet, MlpSpec};
