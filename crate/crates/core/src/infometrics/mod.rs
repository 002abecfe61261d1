//! Comparing popularity and site models: relative entropy, rank lists and
//! power-law shape.

mod divergence;
mod powerlaw;
mod ranking;

pub use divergence::{max_relative_entropy, normalized_relative_entropy, relative_entropy, Divergence};
pub use powerlaw::{powerlaw_fit, residuals};
pub use ranking::{footrule_complement, footrule_distance, top_k, RankedPage, TopK};
