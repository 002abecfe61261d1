//! Popularity Rank and Site Rank of a web site.
//!
//! Navigation sessions define an empirical Markov chain over pages (the
//! popularity chain); the link structure alone defines a random-surfer chain
//! (the site chain). Their stationary distributions rank pages, and their
//! entropies and relative entropy measure how far real navigation departs
//! from uniform link following.

pub mod chains;
pub mod error;
pub mod exact;
pub mod infometrics;
pub mod ingest;
pub mod model;
pub mod synth;
pub mod walk;

pub use error::{Error, Result};
