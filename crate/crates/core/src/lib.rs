//! Numerical laboratory for multimodal versus unimodal learning.
//!
//! Two-stage multimodal ERM, its unimodal and joint-representation
//! baselines, Monte Carlo Gaussian/Rademacher averages, and exact
//! constructions of the hard instances that separate the two regimes.

pub mod analysis;
pub mod complexity;
pub mod data;
pub mod erm;
pub mod error;
pub mod hypotheses;
pub mod instances;
pub mod loss;
pub mod par;
pub mod rational;
pub mod report;
pub mod seed;
pub mod shatter;
pub mod stats;
pub mod theta;

pub use error::{Error, Result};
pub use seed::SeedSpec;
