//! Gaussian and Rademacher averages by Monte Carlo, their closed forms where
//! they exist, and approximate realizability.
//!
//! A [`SupOracle`] binds a class to a sample and returns, for a coefficient
//! vector `σ`, a member of the class and its value `Σ σ_i h(p_i)`. Oracles are
//! either exact (the supremum itself, found analytically or by enumeration)
//! or witness-based, in which case every value is attained by an in-class
//! member and the estimate is a lower bound.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::data::{hash_hex, Pair, XView, YView};
use crate::error::{Error, Result};
use crate::hypotheses::{fit_connection, Connection, ConnectionClass, Predictor, ResidualNorm};
use crate::par;
use crate::rational;
use crate::seed::SeedSpec;
use crate::shatter::{self, Sign, SignConvention};
use crate::stats::mean_stderr;
use crate::theta::Theta;

pub const MIN_DRAWS: usize = 100;
pub const DEFAULT_DRAWS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum SupOracle {
    /// One fixed function with the given values on the sample.
    Singleton { values: Vec<f64> },
    /// `{θp : θ ∈ (0, 1]}` on the flattened sample outputs `p`.
    Scaling { points: Vec<f64> },
    /// `{θp : θ ∈ (−1, 0) ∪ (0, 1)}`.
    SignedScaling { points: Vec<f64> },
    /// All maps `{0,1} → {0,1}` applied to the Boolean inputs.
    BooleanMaps { inputs: Vec<u8> },
    /// Every map of `n` distinct points into `[−scale, scale]`.
    SignComplete { n: usize, scale: f64 },
    /// A finite class given by its value vectors on the sample.
    Patterns { patterns: Vec<Vec<f64>> },
    /// `{sin(1/(θx))}` on lattice points, via shattering witnesses plus any
    /// extra parameters.
    ComposedSineWitness {
        indices: Vec<u32>,
        #[serde(default)]
        extra: Vec<Theta>,
    },
    /// Smoothed hyperplanes on the points `(x_i, y_i)`; the witness normal is
    /// `Σ sign(σ_i)·y_i` on the `y` block, normalized.
    HyperplaneWitness {
        points: Vec<(Vec<f64>, Vec<f64>)>,
        eps: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// The per-draw supremum is computed exactly by enumerating members.
    EnumerationExact,
    /// The per-draw supremum is computed exactly in closed form.
    AnalyticExact,
    /// Each draw's value is attained by a class member: a lower bound.
    WitnessLowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageKind {
    Gaussian,
    Rademacher,
}

/// The member achieving a per-draw value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Fixed,
    Scale { theta: f64 },
    Table { table: [u8; 2] },
    Values { values: Vec<f64> },
    Pattern { index: usize },
    Sine { theta: Theta },
    Hyperplane { predictor: Predictor },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupValue {
    pub witness: Witness,
    pub value: f64,
    /// False when the value is a supremum approached but not attained.
    pub attained: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl SupOracle {
    pub fn name(&self) -> &'static str {
        match self {
            SupOracle::Singleton { .. } => "singleton",
            SupOracle::Scaling { .. } => "scaling",
            SupOracle::SignedScaling { .. } => "signed-scaling",
            SupOracle::BooleanMaps { .. } => "boolean-maps",
            SupOracle::SignComplete { .. } => "sign-complete",
            SupOracle::Patterns { .. } => "patterns",
            SupOracle::ComposedSineWitness { .. } => "composed-sine",
            SupOracle::HyperplaneWitness { .. } => "smoothed-hyperplanes",
        }
    }

    /// Number of coefficients per draw.
    pub fn dim(&self) -> usize {
        match self {
            SupOracle::Singleton { values } => values.len(),
            SupOracle::Scaling { points } | SupOracle::SignedScaling { points } => points.len(),
            SupOracle::BooleanMaps { inputs } => inputs.len(),
            SupOracle::SignComplete { n, .. } => *n,
            SupOracle::Patterns { patterns } => patterns.first().map_or(0, Vec::len),
            SupOracle::ComposedSineWitness { indices, .. } => indices.len(),
            SupOracle::HyperplaneWitness { points, .. } => points.len(),
        }
    }

    pub fn mode(&self) -> EstimateMode {
        match self {
            SupOracle::Patterns { .. }
            | SupOracle::BooleanMaps { .. }
            | SupOracle::Singleton { .. } => EstimateMode::EnumerationExact,
            SupOracle::Scaling { .. }
            | SupOracle::SignedScaling { .. }
            | SupOracle::SignComplete { .. } => EstimateMode::AnalyticExact,
            SupOracle::ComposedSineWitness { .. } | SupOracle::HyperplaneWitness { .. } => {
                EstimateMode::WitnessLowerBound
            }
        }
    }

    pub fn sample_hash(&self) -> String {
        hash_hex(
            serde_json::to_string(self)
                .expect("oracles serialize")
                .as_bytes(),
        )
    }

    /// The best member for `sigma` and its value `Σ σ_i h(p_i)`.
    pub fn sup_witness(&self, sigma: &[f64]) -> Result<SupValue> {
        if sigma.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a sample of size {}",
                sigma.len(),
                self.dim()
            )));
        }
        match self {
            SupOracle::Singleton { values } => Ok(SupValue {
                witness: Witness::Fixed,
                value: dot(sigma, values),
                attained: true,
            }),
            SupOracle::Scaling { points } => {
                let s = dot(sigma, points);
                Ok(if s > 0.0 {
                    SupValue {
                        witness: Witness::Scale { theta: 1.0 },
                        value: s,
                        attained: true,
                    }
                } else {
                    SupValue {
                        witness: Witness::Scale { theta: 0.0 },
                        value: 0.0,
                        attained: false,
                    }
                })
            }
            SupOracle::SignedScaling { points } => {
                let s = dot(sigma, points);
                Ok(SupValue {
                    witness: Witness::Scale {
                        theta: if s >= 0.0 { 1.0 } else { -1.0 },
                    },
                    value: s.abs(),
                    attained: false,
                })
            }
            SupOracle::BooleanMaps { inputs } => {
                let mut sums = [0.0f64; 2];
                for (s, &v) in sigma.iter().zip(inputs) {
                    if v > 1 {
                        return Err(Error::InvalidInput(format!("Boolean input {v}")));
                    }
                    sums[v as usize] += s;
                }
                let table = [(sums[0] > 0.0) as u8, (sums[1] > 0.0) as u8];
                Ok(SupValue {
                    witness: Witness::Table { table },
                    value: sums[0].max(0.0) + sums[1].max(0.0),
                    attained: true,
                })
            }
            SupOracle::SignComplete { scale, .. } => {
                let values: Vec<f64> = sigma
                    .iter()
                    .map(|s| if *s >= 0.0 { *scale } else { -scale })
                    .collect();
                Ok(SupValue {
                    value: dot(sigma, &values),
                    witness: Witness::Values { values },
                    attained: true,
                })
            }
            SupOracle::Patterns { patterns } => {
                let mut best = (0usize, f64::NEG_INFINITY);
                for (i, p) in patterns.iter().enumerate() {
                    let v = dot(sigma, p);
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                Ok(SupValue {
                    witness: Witness::Pattern { index: best.0 },
                    value: best.1,
                    attained: true,
                })
            }
            SupOracle::ComposedSineWitness { indices, extra } => {
                composed_sine_sup(indices, extra, sigma)
            }
            SupOracle::HyperplaneWitness { points, eps } => {
                let k = points.first().map_or(0, |p| p.1.len());
                let q = points.first().map_or(0, |p| p.0.len());
                let mut w = vec![0.0; k];
                for (s, (_, y)) in sigma.iter().zip(points) {
                    let sign = if *s >= 0.0 { 1.0 } else { -1.0 };
                    for (wj, yj) in w.iter_mut().zip(y) {
                        *wj += sign * yj;
                    }
                }
                let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
                let mut normal = vec![0.0; q];
                if norm > 0.0 {
                    normal.extend(w.iter().map(|a| a / norm));
                } else {
                    normal.extend(std::iter::repeat_n(0.0, k));
                    normal[0] = 1.0;
                }
                let predictor = Predictor::SmoothedHyperplane {
                    normal,
                    offset: 0.0,
                    eps: *eps,
                };
                let mut value = 0.0;
                for (s, (x, y)) in sigma.iter().zip(points) {
                    value += s * predictor.eval(XView::plain(x), YView::plain(y))?;
                }
                Ok(SupValue {
                    witness: Witness::Hyperplane { predictor },
                    value,
                    attained: true,
                })
            }
        }
    }
}

fn composed_sine_sup(indices: &[u32], extra: &[Theta], sigma: &[f64]) -> Result<SupValue> {
    // Duplicate points share a label, so group their coefficients.
    let mut groups: Vec<(u32, f64)> = Vec::new();
    for (&i, &s) in indices.iter().zip(sigma) {
        match groups.iter_mut().find(|g| g.0 == i) {
            Some(g) => g.1 += s,
            None => groups.push((i, s)),
        }
    }
    let idx: Vec<u32> = groups.iter().map(|g| g.0).collect();
    let signs: Vec<Sign> = groups.iter().map(|g| Sign::of(g.1)).collect();
    let cert = shatter::construct_on(&idx, &signs, SignConvention::SineSign)?;
    let value_of = |theta: &Theta| -> Result<f64> {
        let mut v = 0.0;
        for &(i, s) in &groups {
            let recip = rational::lattice_recip(i);
            let x = [rational::to_f64(&rational::lattice_point(i))];
            v += s * theta.compose_sine(XView {
                x: &x,
                recip: Some(&recip),
                lattice: Some(i),
            })?;
        }
        Ok(v)
    };
    let mut best_theta = cert.theta();
    let mut best = value_of(&best_theta)?;
    for t in extra {
        let v = value_of(t)?;
        if v > best {
            best = v;
            best_theta = t.clone();
        }
    }
    Ok(SupValue {
        witness: Witness::Sine { theta: best_theta },
        value: best,
        attained: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub draws: usize,
    pub kind: AverageKind,
    pub mode: EstimateMode,
    pub class: String,
    pub sample_hash: String,
    pub seed: SeedSpec,
}

fn average(
    oracle: &SupOracle,
    draws: usize,
    seed: &SeedSpec,
    kind: AverageKind,
) -> Result<ComplexityEstimate> {
    if draws < MIN_DRAWS {
        return Err(Error::InvalidInput(format!(
            "{draws} draws; at least {MIN_DRAWS} required"
        )));
    }
    let dim = oracle.dim();
    let values = par::try_map_indexed(draws, |d| {
        let mut rng = seed.child(d).rng();
        let sigma: Vec<f64> = match kind {
            AverageKind::Gaussian => (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
            AverageKind::Rademacher => (0..dim)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        };
        oracle
            .sup_witness(&sigma)
            .map(|s| s.value)
            .map_err(|e| e.at_draw(d))
    })?;
    let est = mean_stderr(&values);
    Ok(ComplexityEstimate {
        value: est.mean,
        stderr: est.stderr,
        draws,
        kind,
        mode: oracle.mode(),
        class: oracle.name().to_string(),
        sample_hash: oracle.sample_hash(),
        seed: seed.clone(),
    })
}

/// `E_σ sup_h Σ σ_i h(p_i)` with i.i.d. standard normal `σ`, one coefficient
/// per sample coordinate. Draw `d` reads stream `seed/d`.
pub fn gaussian_average(
    oracle: &SupOracle,
    draws: usize,
    seed: &SeedSpec,
) -> Result<ComplexityEstimate> {
    average(oracle, draws, seed, AverageKind::Gaussian)
}

/// As [`gaussian_average`] with uniform `±1` coefficients.
pub fn rademacher_average(
    oracle: &SupOracle,
    draws: usize,
    seed: &SeedSpec,
) -> Result<ComplexityEstimate> {
    average(oracle, draws, seed, AverageKind::Rademacher)
}

/// Exact Gaussian average for the classes that have one.
pub fn gaussian_average_closed_form(oracle: &SupOracle) -> Result<f64> {
    let norm = |p: &[f64]| p.iter().map(|a| a * a).sum::<f64>().sqrt();
    match oracle {
        SupOracle::Singleton { .. } => Ok(0.0),
        // E[Z⁺] with Z ~ N(0, ‖p‖²)
        SupOracle::Scaling { points } => Ok(norm(points) / TAU.sqrt()),
        // E|Z|
        SupOracle::SignedScaling { points } => Ok(norm(points) * (2.0 / PI).sqrt()),
        SupOracle::SignComplete { n, scale } => Ok(scale * *n as f64 * (2.0 / PI).sqrt()),
        // Σ_v E[max(0, N(0, c_v))]
        SupOracle::BooleanMaps { inputs } => {
            let ones = inputs.iter().filter(|&&v| v == 1).count() as f64;
            let zeros = inputs.len() as f64 - ones;
            Ok((zeros.sqrt() + ones.sqrt()) / TAU.sqrt())
        }
        other => Err(Error::Unsupported(format!(
            "no closed form for the {} class",
            other.name()
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizabilityReport {
    pub value: f64,
    pub witness: Connection,
    /// False when `value` only bounds the minimum from above.
    pub exact: bool,
    pub norm: ResidualNorm,
}

/// `min_g (1/N)·Σ‖g(x) − y‖` over the class.
pub fn approximate_realizability(
    class: &ConnectionClass,
    pairs: &[&Pair],
    norm: ResidualNorm,
) -> Result<RealizabilityReport> {
    let fit = fit_connection(class, pairs, norm)?;
    Ok(RealizabilityReport {
        value: fit.objective,
        witness: fit.member,
        exact: fit.exact,
        norm,
    })
}

/// Threshold patterns of `n` points on a line, sorted by position, in both
/// orientations: the extreme points of the monotone maps into `[−1, 1]`.
pub fn threshold_patterns(order: &[usize]) -> Vec<Vec<f64>> {
    let n = order.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(2 * (n + 1));
    for cut in 0..=n {
        for up in [1.0, -1.0] {
            let mut p = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                p[i] = if rank < cut { -up } else { up };
            }
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let c = gaussian_average_closed_form(&SupOracle::Scaling {
            points: vec![1.0; 4],
        })
        .unwrap();
        assert!((c - 2.0 / TAU.sqrt()).abs() < 1e-15);
        assert!((c - 0.7979).abs() < 1e-4);
        let c =
            gaussian_average_closed_form(&SupOracle::SignComplete { n: 8, scale: 1.0 }).unwrap();
        assert!((c - 6.383).abs() < 1e-3);
        assert_eq!(
            gaussian_average_closed_form(&SupOracle::Singleton { values: vec![0.3] }).unwrap(),
            0.0
        );
        assert!(matches!(
            gaussian_average_closed_form(&SupOracle::ComposedSineWitness {
                indices: vec![1],
                extra: vec![]
            }),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn scaling_witness_examples() {
        let o = SupOracle::Scaling { points: vec![1.0] };
        let s = o.sup_witness(&[2.0]).unwrap();
        assert_eq!((s.value, s.attained), (2.0, true));
        assert_eq!(s.witness, Witness::Scale { theta: 1.0 });
        let s = o.sup_witness(&[-2.0]).unwrap();
        assert_eq!((s.value, s.attained), (0.0, false));
    }

    #[test]
    fn singleton_average_is_zero() {
        let e = gaussian_average(
            &SupOracle::Singleton {
                values: vec![0.0; 5],
            },
            200,
            &SeedSpec::new(1),
        )
        .unwrap();
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn sign_complete_rademacher_is_n() {
        let e = rademacher_average(
            &SupOracle::SignComplete { n: 5, scale: 1.0 },
            300,
            &SeedSpec::new(2),
        )
        .unwrap();
        assert_eq!(e.value, 5.0);
    }

    #[test]
    fn sign_complete_matches_brute_force() {
        let o = SupOracle::SignComplete { n: 3, scale: 1.0 };
        let sigma = [0.3, -1.2, 0.7];
        let brute = (0..8)
            .map(|m| {
                (0..3)
                    .map(|i| sigma[i] * if m >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((o.sup_witness(&sigma).unwrap().value - brute).abs() < 1e-15);
    }

    #[test]
    fn too_few_draws() {
        assert!(gaussian_average(
            &SupOracle::SignComplete { n: 2, scale: 1.0 },
            99,
            &SeedSpec::new(0)
        )
        .is_err());
    }

    #[test]
    fn witness_dominates_half_abs_sum() {
        let o = SupOracle::ComposedSineWitness {
            indices: (1..=8).collect(),
            extra: vec![],
        };
        let mut rng = SeedSpec::new(3).rng();
        for _ in 0..50 {
            let sigma: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
            let v = o.sup_witness(&sigma).unwrap().value;
            let half: f64 = sigma.iter().map(|s| 0.5 * s.abs()).sum();
            assert!(v >= half);
        }
    }

    #[test]
    fn extra_candidates_never_lower() {
        let base = SupOracle::ComposedSineWitness {
            indices: vec![1, 2, 3],
            extra: vec![],
        };
        let more = SupOracle::ComposedSineWitness {
            indices: vec![1, 2, 3],
            extra: vec![Theta::Value(0.3), Theta::Value(0.01)],
        };
        let sigma = [0.4, -0.9, 1.3];
        assert!(more.sup_witness(&sigma).unwrap().value >= base.sup_witness(&sigma).unwrap().value);
    }

    #[test]
    fn threshold_pattern_count() {
        let p = threshold_patterns(&[2, 0, 1]);
        assert_eq!(p.len(), 2 * 3 + 2 - 2);
        assert!(p.contains(&vec![1.0, 1.0, -1.0]));
    }

    #[test]
    fn realizability_examples() {
        let mk = |x: f64, y: f64| Pair {
            x: vec![x],
            y: vec![y],
            exact: None,
        };
        let ps = [mk(0.0, 0.0), mk(0.0, 1.0)];
        let refs: Vec<&Pair> = ps.iter().collect();
        let r = approximate_realizability(
            &ConnectionClass::BooleanMaps,
            &refs,
            ResidualNorm::Euclidean,
        )
        .unwrap();
        assert_eq!(r.value, 0.5);
        let ps = [mk(0.2, 0.2), mk(0.7, 0.7)];
        let refs: Vec<&Pair> = ps.iter().collect();
        let r =
            approximate_realizability(&ConnectionClass::Scaling, &refs, ResidualNorm::Euclidean)
                .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(
            approximate_realizability(&ConnectionClass::Scaling, &[], ResidualNorm::Euclidean)
                .is_err()
        );
    }
}
