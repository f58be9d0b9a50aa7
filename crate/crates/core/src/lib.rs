//! Robust assortment optimization under ranking-based choice models.
//!
//! Given sales data from past assortments, the toolkit computes worst-case and
//! best-case expected revenues over every ranking-based choice model that is
//! consistent with the data, solves the robust assortment problem and its
//! Pareto variant, and runs the accompanying numerical experiments.

pub mod bitset;
pub mod candidates;
pub mod choice;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod instance;
pub mod nested;
pub mod opt;
pub mod oracle;
pub mod robust;
pub mod tuples;

pub use bitset::{Assortment, BitSet};
pub use error::{Error, Result};
pub use instance::{Instance, Norm, StructureKind, StructureTag};
