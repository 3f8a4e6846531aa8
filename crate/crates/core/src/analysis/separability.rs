use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::data::Observation;
use crate::error::{Error, Result};
use crate::instances::SeparableInstance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub points: usize,
    /// A separator `(w_x, w_y, b)` with zero errors exists.
    pub feasible: bool,
    pub separator: [f64; 3],
    /// Optimal margin of the box-constrained program.
    pub margin: f64,
    pub separator_errors: usize,
    /// Errors of `x − y = 0`.
    pub canonical_errors: usize,
    /// Label changes along the sample sorted by `x`.
    pub crossings: usize,
    pub interior_fixed_points: usize,
    pub crossings_match: bool,
}

fn errors(sample: &[Observation], w: [f64; 3]) -> usize {
    sample
        .iter()
        .filter(|o| {
            let s = w[0] * o.x[0] + w[1] * o.y[0] + w[2];
            (if s >= 0.0 { 1.0 } else { -1.0 }) != o.z
        })
        .count()
}

/// Maximizes `t` subject to `z_i·(w_x·x_i + w_y·y_i + b) ≥ t`, with
/// `w, b ∈ [−1, 1]` and `t ≤ 1`.
fn max_margin(sample: &[Observation]) -> Result<([f64; 3], f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let wx = lp.add_var(0.0, (-1.0, 1.0));
    let wy = lp.add_var(0.0, (-1.0, 1.0));
    let b = lp.add_var(0.0, (-1.0, 1.0));
    let t = lp.add_var(1.0, (-4.0, 1.0));
    for o in sample {
        lp.add_constraint(
            [(wx, o.z * o.x[0]), (wy, o.z * o.y[0]), (b, o.z), (t, -1.0)],
            ComparisonOp::Ge,
            0.0,
        );
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::Degenerate(format!("separator program: {e}")))?
        .into_solution()
        .map_err(|e| Error::Degenerate(format!("separator program: {e:?}")))?;
    Ok(([solution[wx], solution[wy], solution[b]], solution[t]))
}

/// Linear separability of `(x, y) ↦ z` and the count of label changes along
/// `x` against the interior fixed points of `f`.
pub fn separability_check(
    instance: &SeparableInstance,
    sample: &[Observation],
) -> Result<SeparabilityReport> {
    if sample.iter().any(|o| o.x.len() != 1 || o.y.len() != 1) {
        return Err(Error::InvalidInput(
            "separability needs scalar modalities".into(),
        ));
    }
    let interior = instance
        .fixed_points()
        .iter()
        .filter(|&&p| p > 0.0 && p < 1.0)
        .count();
    let canonical = [1.0, -1.0, 0.0];
    if sample.is_empty() {
        return Ok(SeparabilityReport {
            points: 0,
            feasible: true,
            separator: canonical,
            margin: 1.0,
            separator_errors: 0,
            canonical_errors: 0,
            crossings: 0,
            interior_fixed_points: interior,
            crossings_match: interior == 0,
        });
    }
    let (separator, margin) = max_margin(sample)?;
    let separator_errors = errors(sample, separator);
    let mut sorted: Vec<&Observation> = sample.iter().collect();
    sorted.sort_by(|a, b| a.x[0].total_cmp(&b.x[0]));
    let crossings = sorted.windows(2).filter(|w| w[0].z != w[1].z).count();
    Ok(SeparabilityReport {
        points: sample.len(),
        feasible: margin >= 0.0 && separator_errors == 0,
        separator,
        margin,
        separator_errors,
        canonical_errors: errors(sample, canonical),
        crossings,
        interior_fixed_points: interior,
        crossings_match: crossings == interior,
    })
}
