use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complexity::{gaussian_average, threshold_patterns, ComplexityEstimate, SupOracle};
use crate::error::{Error, Result};
use crate::instances::{draw_unlabeled, make_subspace};
use crate::seed::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReprReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub instance_hash: String,
    /// Hat-sample on the line `{x·v + y0}`; every threshold pattern enumerated.
    pub collinear: ComplexityEstimate,
    /// Basis points `(x_i, e_i)`; every sign pattern realized.
    pub adversarial: ComplexityEstimate,
    pub ratio: f64,
    /// `n·√(2/π)`, the value for a class realizing all sign patterns.
    pub adversarial_reference: f64,
}

fn random_direction(k: usize, seed: &SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Paired Gaussian averages of smoothed hyperplanes on a collinear hat-sample
/// and on `n` orthonormal points, with common coefficients per draw.
pub fn representation_comparison(
    n: usize,
    k: usize,
    eps: Option<f64>,
    draws: usize,
    seed: &SeedSpec,
) -> Result<ReprReport> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput(format!("n = {n}, k = {k}")));
    }
    if n > k {
        return Err(Error::Domain(format!(
            "n = {n} exceeds k = {k}; the basis sample needs n ≤ k"
        )));
    }
    let eps = eps.unwrap_or(1.0 / (10.0 * (k as f64).sqrt()));
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidInput(format!("ε = {eps}")));
    }
    let v: Vec<f64> = random_direction(k, &seed.child("v"))
        .iter()
        .map(|a| 0.6 * a)
        .collect();
    let y0: Vec<f64> = random_direction(k, &seed.child("y0"))
        .iter()
        .map(|a| 0.3 * a)
        .collect();
    let inst = make_subspace(v, y0, None)?;
    let sample = draw_unlabeled(&inst, 1, n, seed)?;
    let xs: Vec<f64> = sample.tasks()[0].iter().map(|p| p.x[0]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let collinear = gaussian_average(
        &SupOracle::Patterns {
            patterns: threshold_patterns(&order),
        },
        draws,
        &seed.child("sigma"),
    )?;
    let points = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            (vec![x], e)
        })
        .collect();
    let adversarial = gaussian_average(
        &SupOracle::HyperplaneWitness { points, eps },
        draws,
        &seed.child("sigma"),
    )?;
    Ok(ReprReport {
        n,
        k,
        eps,
        instance_hash: inst.sha256(),
        ratio: adversarial.value / collinear.value,
        collinear,
        adversarial,
        adversarial_reference: n as f64 * (2.0 / PI).sqrt(),
    })
}
