//! Brute-force references for small problems: posteriors by quadrature,
//! the `r_γ`/`ϱ_γ` quantities and their bounds, and distance estimators.

mod bounds;
mod distance;
mod example1;
mod quadrature;

pub use bounds::{beta_metric_bound, cor1_bound, thm2_bound, TheoremBoundInputs};
pub use distance::{beta_metric_lower, tv_discrete, tv_distance, wasserstein1_1d};
pub use example1::{example1_suite, Example1Report, Example1Row};
pub use quadrature::{quad_posterior, r_gamma, varrho_gamma_estimate, Axis, Panel, QuadOptions, QuadraturePosterior, Which};
