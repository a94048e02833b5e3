//! Rank-one cutting-and-stacking systems.
//!
//! The crate builds rank-one constructions from their cutting and spacer
//! parameters and computes, exactly where possible:
//!
//! * tower heights and spacer statistics ([`construction`]),
//! * building blocks, word frequencies and the ABC structure of names
//!   ([`blocks`]),
//! * odometer arithmetic and laws of the Morse-type cocycle ([`odometer`],
//!   [`distribution`]),
//! * limit profiles, the laws `P_j`, spectral disjointness certificates and
//!   the odometer / rational eigenvalue / weak mixing classification
//!   ([`limits`]),
//! * empirical weak-limit correlations ([`correlations`]) and Möbius
//!   orthogonality experiments ([`sarnak`]).
//!
//! Heavy loops take an [`Execution`] and run on rayon unless the `parallel`
//! feature is disabled or [`Execution::Sequential`] is requested; both paths
//! return identical results.

pub mod blocks;
pub mod construction;
pub mod correlations;
pub mod distribution;
pub mod error;
pub mod exec;
pub mod limits;
pub mod odometer;
pub mod rational;
pub mod sarnak;

pub use construction::{ConstructionParams, Family, HeightSequence, Stage};
pub use distribution::IntegerDistribution;
pub use error::{Error, Result};
pub use exec::Execution;
