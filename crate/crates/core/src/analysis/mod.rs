//! Population risks, the generalization bound, heterogeneity gaps and the
//! separation experiments.

pub mod bound;
pub mod experiments;
pub mod gap;
pub mod repr;
pub mod risk;
pub mod separability;

pub use bound::{bound_for_solution, theorem1_bound, BoundInputs, BoundReport, ComplexitySource};
pub use gap::{case2_instance, heterogeneity_gap, GapReport};
pub use repr::{representation_comparison, ReprReport};
pub use risk::{
    excess_risk, excess_risk_unimodal, excess_risk_with, EvalMode, RiskMode, RiskReport,
};
pub use separability::{separability_check, SeparabilityReport};
