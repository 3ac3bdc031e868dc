//! Longest-common-prefix (Baire) ultrametric clustering toolkit.
//!
//! Decimal values are encoded as fixed-precision digit keys ([`madic`]); the
//! longest common prefix of two keys induces an ultrametric, and reading the
//! digits of every key once builds the full cluster hierarchy as a sparse
//! m-adic prefix tree ([`bairetree`]) in linear time.
//!
//! Around that core:
//!
//! * [`coincidence`] measures per-observation prefix agreement between two
//!   key columns, with census tables, confidence levels, and digit
//!   histograms;
//! * [`partition`] fits k-means and cross-tabulates its clusters against
//!   tree levels;
//! * [`oracle`] holds the deliberately-naive references used to verify the
//!   fast path: quadratic agglomerative clustering, metric/ultrametric axiom
//!   checkers, and the lattice-valued dissimilarity demo;
//! * [`pipeline`] ingests catalog CSVs, generates synthetic catalogs with
//!   planted ground truth, and times methods against each other;
//! * [`cli`] wires everything into the `baire` binary.

pub mod bairetree;
pub mod cli;
pub mod coincidence;
pub mod error;
pub mod madic;
pub mod oracle;
pub mod partition;
pub mod pipeline;

pub use error::{Error, Result};
