//! Construction and analysis of `(p,q)`-transition free codes for on-chip buses.
//!
//! The pipeline: [`word`] defines the violation predicate, [`pairgraph`] counts
//! transition-free word pairs and computes the edge-density growth rate,
//! [`tfgraph`] materializes the transition free graph, [`subdp`] finds
//! (sub)graph domatic partitions, [`codec`] turns a partition into a stateful
//! encoder with a stateless decoder, and [`analysis`] gathers rate bounds.

pub mod analysis;
pub mod codec;
pub mod error;
pub mod pairgraph;
pub mod subdp;
pub mod tfgraph;
pub mod word;

pub use error::{Error, Result};
pub use word::{BitWord, ForbiddenPair};
