pub mod diagnostics;
pub mod eb;
pub mod envelope;
pub mod harness;
pub mod error;
pub mod linmodel;
pub mod mask;
pub mod oracle;
pub mod prox;
pub mod quad;
pub mod sampler;
pub mod special;

pub use envelope::{EnvelopeContext, SmoothLoss};
pub use error::{Error, Result};
pub use linmodel::{Dataset, HyperState, LinearModel};
pub use mask::InclusionMask;
pub use prox::{PriorSpec, ProxResult};
