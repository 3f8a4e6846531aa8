use serde::{Deserialize, Serialize};

use crate::analysis::bound::predictor_oracle;
use crate::analysis::risk::{population, RiskMode};
use crate::complexity::{gaussian_average, gaussian_average_closed_form, EstimateMode, SupOracle};
use crate::data::{Observation, XView, YView};
use crate::error::{Error, Result};
use crate::hypotheses::{
    fit_predictor, fit_unimodal, LabeledView, PredictorClass, UnimodalClass, UnimodalMember,
};
use crate::instances::{draw_labeled, make_sine, sine_lattice_observation, Instance, SineSupport};
use crate::loss::Loss;
use crate::seed::SeedSpec;
use crate::shatter::{construct_on, Sign, SignConvention};
use crate::stats::{mean_stderr, MeanEstimate};
use crate::theta::Theta;

pub const MIN_RESAMPLES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub resamples: usize,
    pub draws: usize,
    /// `E[Ĝ(G(X))]/n` over resamples.
    pub g_complexity: MeanEstimate,
    /// `E[Ĝ(F(X, Y))]/n` over resamples.
    pub f_complexity: MeanEstimate,
    pub risk_g_star: f64,
    pub risk_f_star: f64,
    pub g_star: UnimodalMember,
    /// `risk(g*) − risk(f*)`.
    pub intrinsic: f64,
    pub h: f64,
    pub h_stderr: f64,
    /// Some complexity is a witness lower bound.
    pub lower_bound_inputs: bool,
    pub exact_risks: bool,
}

/// Gaussian-average oracle of a unimodal class on the inputs of a sample.
pub fn unimodal_oracle(class: &UnimodalClass, sample: &[Observation]) -> Result<SupOracle> {
    let scalars = || {
        sample
            .iter()
            .map(|o| o.x_view().scalar())
            .collect::<Result<Vec<f64>>>()
    };
    Ok(match class {
        UnimodalClass::ComposedSine => SupOracle::ComposedSineWitness {
            indices: sample
                .iter()
                .map(|o| o.exact.as_ref().and_then(|e| e.lattice))
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| {
                    Error::Unsupported("composed-sine complexity needs lattice inputs".into())
                })?,
            extra: Vec::new(),
        },
        UnimodalClass::Scaling => SupOracle::Scaling { points: scalars()? },
        UnimodalClass::BooleanMaps => SupOracle::BooleanMaps {
            inputs: scalars()?
                .into_iter()
                .map(|v| match v {
                    0.0 => Ok(0),
                    1.0 => Ok(1),
                    other => Err(Error::InvalidInput(format!(
                        "expected a Boolean value, got {other}"
                    ))),
                })
                .collect::<Result<_>>()?,
        },
        UnimodalClass::Singleton { member } => SupOracle::Singleton {
            values: sample
                .iter()
                .map(|o| member.eval(o.x_view()))
                .collect::<Result<_>>()?,
        },
    })
}

fn complexity(oracle: &SupOracle, draws: usize, seed: &SeedSpec) -> Result<(f64, bool)> {
    match gaussian_average_closed_form(oracle) {
        Ok(v) => Ok((v, false)),
        Err(Error::Unsupported(_)) => {
            let est = gaussian_average(oracle, draws, seed)?;
            Ok((est.value, est.mode == EstimateMode::WitnessLowerBound))
        }
        Err(e) => Err(e),
    }
}

fn own_parameter(instance: &Instance, class: &UnimodalClass) -> Vec<UnimodalMember> {
    match (instance, class) {
        (Instance::Sine(s), UnimodalClass::ComposedSine) => vec![UnimodalMember::ComposedSine {
            theta: s.theta.clone(),
        }],
        _ => Vec::new(),
    }
}

/// Heterogeneity gap
/// `H = E[Ĝ(G(X))]/n + risk(g*) − E[Ĝ(F(X, Y))]/n − risk(f*)`
/// on task 0 of the instance, with the expectations over `resamples` fresh
/// samples of size `n`.
#[allow(clippy::too_many_arguments)]
pub fn heterogeneity_gap(
    instance: &Instance,
    g: &UnimodalClass,
    f: &PredictorClass,
    n: usize,
    resamples: usize,
    draws: usize,
    seed: &SeedSpec,
    loss: &Loss,
    grid: usize,
    risk_mode: &RiskMode,
) -> Result<GapReport> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidInput(format!(
            "{resamples} resamples; at least {MIN_RESAMPLES} required"
        )));
    }
    let mut g_values = Vec::with_capacity(resamples);
    let mut f_values = Vec::with_capacity(resamples);
    let mut lower = false;
    for r in 0..resamples {
        let stream = seed.child("resample").child(r);
        let sample = draw_labeled(instance, 1, n, &stream)?;
        let block = sample.task(0);
        let (gv, lg) = complexity(&unimodal_oracle(g, block)?, draws, &stream.child("g"))?;
        let points: Vec<(XView<'_>, YView<'_>)> =
            block.iter().map(|o| (o.x_view(), o.y_view())).collect();
        let (fv, lf) = complexity(&predictor_oracle(f, &points)?, draws, &stream.child("f"))?;
        lower |= lg || lf;
        g_values.push(gv / n as f64);
        f_values.push(fv / n as f64);
    }
    let (pop, exact) = population(instance, 0, risk_mode)?;
    let g_fit = fit_unimodal(g, &pop, loss, grid, &own_parameter(instance, g))?;
    let views: Vec<LabeledView<'_>> = pop.iter().map(LabeledView::from).collect();
    let f_fit = fit_predictor(f, &views, loss)?;
    let diffs: Vec<f64> = g_values.iter().zip(&f_values).map(|(a, b)| a - b).collect();
    let g_complexity = mean_stderr(&g_values);
    let f_complexity = mean_stderr(&f_values);
    let intrinsic = g_fit.objective - f_fit.objective;
    Ok(GapReport {
        n,
        resamples,
        draws,
        g_complexity,
        f_complexity,
        risk_g_star: g_fit.objective,
        risk_f_star: f_fit.objective,
        g_star: g_fit.member,
        intrinsic,
        h: (g_complexity.mean - f_complexity.mean) + intrinsic,
        h_stderr: mean_stderr(&diffs).stderr,
        lower_bound_inputs: lower,
        exact_risks: exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case2Instance {
    pub instance: Instance,
    pub signs: Vec<Sign>,
    /// `sup_g Σ ε_i g(x_i)` for the chosen signs.
    pub sup_value: f64,
}

/// Sine instance on the lattice `indices` whose labels follow the sign
/// pattern `ε` minimizing `sup_g Σ ε_i g(x_i)` over the unimodal class. Under
/// the uniform law on those points every `g` pays for the mismatch.
pub fn case2_instance(class: &UnimodalClass, indices: &[u32]) -> Result<Case2Instance> {
    let n = indices.len();
    if n == 0 || n > 16 {
        return Err(Error::InvalidInput(format!(
            "{n} points; between 1 and 16 supported"
        )));
    }
    let points = indices
        .iter()
        .map(|&i| sine_lattice_observation(&Theta::Value(1.0), i))
        .collect::<Result<Vec<_>>>()?;
    let oracle = unimodal_oracle(class, &points)?;
    let mut best: Option<(Vec<Sign>, f64)> = None;
    for code in 0..(1u32 << n) {
        let signs: Vec<Sign> = (0..n)
            .map(|i| {
                if code >> i & 1 == 1 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            })
            .collect();
        let sigma: Vec<f64> = signs.iter().map(|s| s.as_f64()).collect();
        let v = oracle.sup_witness(&sigma)?.value;
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((signs, v));
        }
    }
    let (signs, sup_value) = best.expect("at least one pattern");
    let theta = construct_on(indices, &signs, SignConvention::SineSign)?.theta();
    Ok(Case2Instance {
        instance: make_sine(
            theta,
            SineSupport::Lattice {
                indices: indices.to_vec(),
            },
        )?,
        signs,
        sup_value,
    })
}
