use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::complexity::{
    approximate_realizability, gaussian_average, gaussian_average_closed_form, EstimateMode,
    SupOracle,
};
use crate::data::{LabeledMultiSample, Pair, UnlabeledMultiSample, XView, YView};
use crate::erm::MultimodalSolution;
use crate::error::{Error, Result};
use crate::hypotheses::{Connection, ConnectionClass, PredictorClass};
use crate::instances::{Instance, SineSupport};
use crate::rational;
use crate::seed::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub m: usize,
    pub tasks: usize,
    /// `Ĝ(F(X̂_t, Ŷ_t))` for each task.
    pub predictor_complexities: Vec<f64>,
    /// `Ĝ(G(X′))` on the pooled unlabeled sample.
    pub connection_complexity: f64,
    pub realizability: f64,
    pub lipschitz: f64,
    pub delta: f64,
    /// Some complexity above is only a lower-bound estimate.
    #[serde(default)]
    pub lower_bound_inputs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
    /// The total is indicative only: an input complexity is a lower bound.
    pub indicative: bool,
}

/// The four terms of the excess-risk bound for two-stage ERM:
///
/// `√(2π)/(nT)·Σ_t Ĝ_t + 2√(2π)·L/(mT)·Ĝ(G(X′)) + L·R + (8L + 4)·√(ln(8/δ)/(2nT))`.
pub fn theorem1_bound(inputs: BoundInputs) -> Result<BoundReport> {
    if !(inputs.delta > 0.0 && inputs.delta < 1.0) {
        return Err(Error::Domain(format!(
            "δ = {} outside (0, 1)",
            inputs.delta
        )));
    }
    if inputs.n == 0 || inputs.m == 0 || inputs.tasks == 0 {
        return Err(Error::InvalidInput("n, m and T must be positive".into()));
    }
    if !(inputs.lipschitz.is_finite() && inputs.lipschitz >= 0.0) {
        return Err(Error::Domain(format!(
            "Lipschitz constant {}",
            inputs.lipschitz
        )));
    }
    if inputs.predictor_complexities.len() != inputs.tasks {
        return Err(Error::InvalidInput(format!(
            "{} predictor complexities for {} tasks",
            inputs.predictor_complexities.len(),
            inputs.tasks
        )));
    }
    let (n, m, t) = (inputs.n as f64, inputs.m as f64, inputs.tasks as f64);
    let l = inputs.lipschitz;
    let root = TAU.sqrt();
    let term1 = root / (n * t) * inputs.predictor_complexities.iter().sum::<f64>();
    let term2 = 2.0 * root * l / (m * t) * inputs.connection_complexity;
    let term3 = l * inputs.realizability;
    let term4 = (8.0 * l + 4.0) * ((8.0 / inputs.delta).ln() / (2.0 * n * t)).sqrt();
    Ok(BoundReport {
        term1,
        term2,
        term3,
        term4,
        total: term1 + term2 + term3 + term4,
        indicative: inputs.lower_bound_inputs,
        inputs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ComplexitySource {
    ClosedForm,
    MonteCarlo { draws: usize, seed: SeedSpec },
}

/// Gaussian-average oracle of a predictor class on the points `(x_i, y_i)`.
pub fn predictor_oracle(
    class: &PredictorClass,
    points: &[(XView<'_>, YView<'_>)],
) -> Result<SupOracle> {
    Ok(match class {
        PredictorClass::SingletonSine => SupOracle::Singleton {
            values: points
                .iter()
                .map(|(_, y)| crate::theta::sine_of_y(*y))
                .collect::<Result<_>>()?,
        },
        PredictorClass::BooleanLookup => SupOracle::BooleanMaps {
            inputs: points
                .iter()
                .map(|(_, y)| boolean_bit(y.y[0]))
                .collect::<Result<_>>()?,
        },
        PredictorClass::SignComplete => SupOracle::SignComplete {
            n: points.len(),
            scale: 1.0,
        },
        PredictorClass::SmoothedHyperplanes { eps } => SupOracle::HyperplaneWitness {
            points: points
                .iter()
                .map(|(x, y)| (x.x.to_vec(), y.y.to_vec()))
                .collect(),
            eps: *eps,
        },
    })
}

fn boolean_bit(v: f64) -> Result<u8> {
    match v {
        0.0 => Ok(0),
        1.0 => Ok(1),
        other => Err(Error::InvalidInput(format!(
            "expected a Boolean value, got {other}"
        ))),
    }
}

/// Gaussian-average oracle of a connection class on the pooled inputs `x′`,
/// over flattened outputs.
pub fn connection_oracle(class: &ConnectionClass, xs: &[XView<'_>]) -> Result<SupOracle> {
    let scalars = || xs.iter().map(|x| x.scalar()).collect::<Result<Vec<f64>>>();
    Ok(match class {
        ConnectionClass::Scaling => SupOracle::Scaling { points: scalars()? },
        ConnectionClass::SignedScaling => SupOracle::SignedScaling { points: scalars()? },
        ConnectionClass::BooleanMaps => SupOracle::BooleanMaps {
            inputs: scalars()?
                .into_iter()
                .map(boolean_bit)
                .collect::<Result<_>>()?,
        },
        ConnectionClass::Finite { members } => SupOracle::Patterns {
            patterns: members
                .iter()
                .map(|g| flattened(g, xs))
                .collect::<Result<_>>()?,
        },
        ConnectionClass::Polynomial { .. } => {
            return Err(Error::Unsupported(
                "no Gaussian-average oracle for polynomial connections".into(),
            ))
        }
    })
}

fn flattened(g: &Connection, xs: &[XView<'_>]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for x in xs {
        out.extend(g.apply(*x)?.y);
    }
    Ok(out)
}

fn estimate(
    oracle: &SupOracle,
    source: &ComplexitySource,
    stream: impl Fn(&SeedSpec) -> SeedSpec,
) -> Result<(f64, bool)> {
    match source {
        ComplexitySource::ClosedForm => Ok((gaussian_average_closed_form(oracle)?, false)),
        ComplexitySource::MonteCarlo { draws, seed } => {
            let est = gaussian_average(oracle, *draws, &stream(seed))?;
            Ok((est.value, est.mode == EstimateMode::WitnessLowerBound))
        }
    }
}

/// Evaluates the bound for a fitted solution: per-task predictor complexity on
/// the hat-sample `(x, ĝ(x))`, connection complexity and realizability on the
/// pooled unlabeled sample.
pub fn bound_for_solution(
    sol: &MultimodalSolution,
    s: &LabeledMultiSample,
    s_prime: &UnlabeledMultiSample,
    lipschitz: f64,
    delta: f64,
    source: &ComplexitySource,
) -> Result<BoundReport> {
    let g = sol.connection();
    let mut lower = false;
    let mut predictor_complexities = Vec::with_capacity(s.task_count());
    for (t, block) in s.tasks().iter().enumerate() {
        let hats = block
            .iter()
            .map(|o| g.apply(o.x_view()))
            .collect::<Result<Vec<_>>>()?;
        let points: Vec<(XView<'_>, YView<'_>)> = block
            .iter()
            .zip(&hats)
            .map(|(o, y)| (o.x_view(), y.view()))
            .collect();
        let oracle = predictor_oracle(&sol.predictor_class, &points)?;
        let (v, lb) = estimate(&oracle, source, |s| s.child("predictor").child(t))?;
        lower |= lb;
        predictor_complexities.push(v);
    }
    let pooled: Vec<&Pair> = s_prime.iter().collect();
    let xs: Vec<XView<'_>> = pooled.iter().map(|p| p.x_view()).collect();
    let (connection_complexity, lb) = estimate(
        &connection_oracle(&sol.connection_class, &xs)?,
        source,
        |s| s.child("connection"),
    )?;
    lower |= lb;
    let realizability = approximate_realizability(&sol.connection_class, &pooled, sol.norm)?.value;
    theorem1_bound(BoundInputs {
        n: s.per_task(),
        m: s_prime.per_task(),
        tasks: s.task_count(),
        predictor_complexities,
        connection_complexity,
        realizability,
        lipschitz,
        delta,
        lower_bound_inputs: lower,
    })
}

/// Lipschitz constant of the predictor class restricted to the modality-2
/// range the instance can produce, when it is finite.
pub fn effective_lipschitz(instance: &Instance, class: &PredictorClass) -> Option<f64> {
    match (instance, class) {
        (Instance::Sine(s), PredictorClass::SingletonSine) => {
            let x_min = match &s.support {
                SineSupport::Continuous { lower } => *lower,
                SineSupport::Lattice { indices } => indices
                    .iter()
                    .map(|&i| rational::to_f64(&rational::lattice_point(i)))
                    .fold(f64::INFINITY, f64::min),
            };
            let y_min = s.theta.value() * x_min;
            (y_min > 0.0).then(|| 1.0 / (y_min * y_min))
        }
        (_, PredictorClass::SingletonSine) => None,
        (_, other) => other.effective_lipschitz(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            n: 1,
            m: 100,
            tasks: 1,
            predictor_complexities: vec![0.0],
            connection_complexity: 5.0,
            realizability: 0.0,
            lipschitz: 1.0,
            delta: 0.05,
            lower_bound_inputs: false,
        }
    }

    #[test]
    fn worked_example() {
        let r = theorem1_bound(inputs()).unwrap();
        assert!((r.term2 - 0.2507).abs() < 1e-4, "{}", r.term2);
        assert!((r.term4 - 19.116).abs() < 1e-3, "{}", r.term4);
        assert!((r.total - 19.366).abs() < 1e-3, "{}", r.total);
        assert!(!r.indicative);
    }

    #[test]
    fn delta_domain() {
        for d in [0.0, 1.0, -0.1, 2.0, f64::NAN] {
            let mut i = inputs();
            i.delta = d;
            assert!(matches!(theorem1_bound(i), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn zero_lipschitz_keeps_confidence_term() {
        let mut i = inputs();
        i.lipschitz = 0.0;
        let r = theorem1_bound(i).unwrap();
        assert_eq!(r.term2, 0.0);
        assert_eq!(r.term3, 0.0);
        assert!(r.term4 > 0.0);
    }

    #[test]
    fn lower_bound_inputs_mark_indicative() {
        let mut i = inputs();
        i.lower_bound_inputs = true;
        assert!(theorem1_bound(i).unwrap().indicative);
    }
}
