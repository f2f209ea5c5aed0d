//! Numerical core: multilayer perceptron with hand-rolled reverse-mode
//! differentiation, exact input-derivative jets, and the Adam / L-BFGS
//! optimizers that training builds on.

mod adam;
mod jet;
mod lbfgs;
mod mlp;

pub use adam::AdamState;
pub use jet::{JetBatch, JetCotangent, JetTrace};
pub use lbfgs::{LbfgsOutcome, LbfgsState};
pub use mlp::{Backprop, InputDerivatives, Mlp, CHECKPOINT_VERSION};
