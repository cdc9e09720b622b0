//! The guide's chapters, included so `cargo test` runs their listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/priors.md")]
pub mod priors {}
#[doc = include_str!("../../../book/src/envelope.md")]
pub mod envelope {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/checking.md")]
pub mod checking {}
#[doc = include_str!("../../../book/src/empirical-bayes.md")]
pub mod empirical_bayes {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
