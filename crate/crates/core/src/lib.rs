//! Induced-subtree pattern statistics in random labeled trees.
//!
//! Given a finite tree pattern the crate builds a finite class partition of
//! planted trees, turns it into a system of functional equations, computes the
//! exact central-limit constants of the number of occurrences as Laurent
//! polynomials in `e`, expands exact occurrence distributions, and checks all of
//! it against exhaustive enumeration of labeled trees.

pub mod algebra;
pub mod analysis;
pub mod oracle;
pub mod partition;
pub mod pattern;
pub mod selftest;
pub mod series;
pub mod system;
pub mod trees;
