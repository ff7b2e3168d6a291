//! Sumset structure in groups `Z + H` with `H` finite abelian.
//!
//! The library computes exact set algebra (sumsets, stabilizers,
//! representation counts, deficiencies), recovers minimum-cost
//! coset-progression covers `P + K` for small-doubling sets, and drives
//! exhaustive and randomized verification of the structural statements that
//! govern this regime, Kneser's theorem and Freiman-type bounds among them.
//!
//! All arithmetic is exact: sizes are integers, doubling coefficients are
//! reduced rationals, and every threshold comparison is performed without
//! floating point. See the `book/` guide for a narrative walk-through.

mod bits;

pub mod checks;
pub mod error;
pub mod extremal;
pub mod family;
pub mod group;
pub mod ratio;
pub mod structure;
pub mod sumset;

pub use error::{Error, Result};
pub use group::{gset_from_json, quotient, subgroups_of_h, Element, GSet, GroupSpec, QuotientMap, Subgroup};
pub use ratio::Ratio;
pub use sumset::{normalize, rep_count, stabilizer, sumset, total_deficiency, NormalizedInstance};
pub use structure::{cover_number, find_structure, CosetProgression, StructureReport};
