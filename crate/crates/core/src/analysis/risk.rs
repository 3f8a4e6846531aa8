use serde::{Deserialize, Serialize};

use crate::data::Observation;
use crate::erm::{predict_unimodal, MultimodalSolution};
use crate::error::{Error, Result};
use crate::hypotheses::{fit_predictor, LabeledView, Predictor, PredictorClass, UnimodalMember};
use crate::instances::Instance;
use crate::loss::Loss;
use crate::par;
use crate::seed::SeedSpec;
use crate::stats::mean_stderr;

pub const DEFAULT_MC_POINTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RiskMode {
    /// Exact on finite supports, Monte Carlo with the default size otherwise.
    Auto {
        seed: SeedSpec,
    },
    Exact,
    MonteCarlo {
        points: usize,
        seed: SeedSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EvalMode {
    ExactFiniteSupport,
    MonteCarlo { points: usize, stderr: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub task_risks: Vec<f64>,
    pub risk: f64,
    pub comparators: Vec<Predictor>,
    pub comparator_risks: Vec<f64>,
    pub comparator_risk: f64,
    pub excess: f64,
    pub mode: EvalMode,
}

/// Population of task `t`: its support points (uniform law) or a Monte Carlo
/// sample.
pub fn population(
    instance: &Instance,
    t: usize,
    mode: &RiskMode,
) -> Result<(Vec<Observation>, bool)> {
    let mc = |points: usize, seed: &SeedSpec| -> Result<(Vec<Observation>, bool)> {
        let mut rng = seed.child("population").child(t).rng();
        let obs = (0..points)
            .map(|_| instance.draw_observation(t, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok((obs, false))
    };
    let exact = || -> Result<Option<Vec<Observation>>> {
        Ok(match instance.finite_support(t)? {
            Some(support) => {
                let p0 = support[0].0;
                if support.iter().any(|(p, _)| *p != p0) {
                    return Err(Error::Unsupported("non-uniform finite support".into()));
                }
                Some(support.into_iter().map(|(_, o)| o).collect())
            }
            None => None,
        })
    };
    match mode {
        RiskMode::Exact => exact()?.map(|o| (o, true)).ok_or_else(|| {
            Error::Unsupported(format!(
                "{} instance has no finite support",
                instance.family()
            ))
        }),
        RiskMode::Auto { seed } => match exact()? {
            Some(o) => Ok((o, true)),
            None => mc(DEFAULT_MC_POINTS, seed),
        },
        RiskMode::MonteCarlo { points, seed } => mc(*points, seed),
    }
}

fn at_point(e: Error, o: &Observation) -> Error {
    match e {
        Error::Singularity(msg) => {
            Error::Singularity(format!("{msg} at support point x = {:?}", o.x))
        }
        other => other,
    }
}

/// Excess risk of an arbitrary per-task predictor `predict(t, observation)`
/// against the best member of `comparator` on each task.
pub fn excess_risk_with<P>(
    predict: P,
    instance: &Instance,
    tasks: usize,
    comparator: &PredictorClass,
    loss: &Loss,
    mode: &RiskMode,
) -> Result<RiskReport>
where
    P: Fn(usize, &Observation) -> Result<f64> + Sync + Send,
{
    if tasks == 0 {
        return Err(Error::InvalidInput("no tasks".into()));
    }
    instance.check_tasks(tasks)?;
    let per_task = par::try_map_indexed(tasks, |t| {
        let (pop, exact) = population(instance, t, mode)?;
        let losses = pop
            .iter()
            .map(|o| loss.eval(predict(t, o).map_err(|e| at_point(e, o))?, o.z))
            .collect::<Result<Vec<f64>>>()?;
        let views: Vec<LabeledView<'_>> = pop.iter().map(LabeledView::from).collect();
        let best = fit_predictor(comparator, &views, loss)?;
        let mut diffs = Vec::with_capacity(pop.len());
        for (o, l) in pop.iter().zip(&losses) {
            let c = loss.eval(best.member.eval(o.x_view(), o.y_view())?, o.z)?;
            diffs.push(l - c);
        }
        let risk = losses.iter().sum::<f64>() / losses.len() as f64;
        Ok((risk, best, mean_stderr(&diffs).stderr, pop.len(), exact))
    })?;
    let t = tasks as f64;
    let task_risks: Vec<f64> = per_task.iter().map(|r| r.0).collect();
    let comparator_risks: Vec<f64> = per_task.iter().map(|r| r.1.objective).collect();
    let risk = task_risks.iter().sum::<f64>() / t;
    let comparator_risk = comparator_risks.iter().sum::<f64>() / t;
    let exact = per_task.iter().all(|r| r.4);
    let mode = if exact {
        EvalMode::ExactFiniteSupport
    } else {
        EvalMode::MonteCarlo {
            points: per_task[0].3,
            stderr: per_task.iter().map(|r| r.2 * r.2).sum::<f64>().sqrt() / t,
        }
    };
    Ok(RiskReport {
        task_risks,
        risk,
        comparators: per_task.into_iter().map(|r| r.1.member).collect(),
        comparator_risks,
        comparator_risk,
        excess: risk - comparator_risk,
        mode,
    })
}

/// `L(ĝ, f̂)`: task-averaged risk of `f̂_t(x, ĝ(x))` minus the best
/// two-modality predictor in the solution's predictor class.
pub fn excess_risk(
    sol: &MultimodalSolution,
    instance: &Instance,
    mode: &RiskMode,
) -> Result<RiskReport> {
    excess_risk_with(
        |t, o| predict_unimodal(sol, t, o.x_view()),
        instance,
        sol.task_count(),
        &sol.predictor_class,
        &sol.loss,
        mode,
    )
}

/// Excess risk of a single function of `x`, shared by all tasks.
pub fn excess_risk_unimodal(
    member: &UnimodalMember,
    instance: &Instance,
    tasks: usize,
    comparator: &PredictorClass,
    loss: &Loss,
    mode: &RiskMode,
) -> Result<RiskReport> {
    excess_risk_with(
        |_, o| member.eval(o.x_view()),
        instance,
        tasks,
        comparator,
        loss,
        mode,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::Connection;
    use crate::instances::{make_boolean, make_sine, SineSupport};
    use crate::theta::Theta;

    #[test]
    fn boolean_composition_excess_is_half() {
        let inst = make_boolean(vec![[0, 1], [1, 0]]).unwrap();
        for code in 0..4u8 {
            let member = UnimodalMember::Composition {
                connection: Connection::BooleanMap {
                    table: [code >> 1, code & 1],
                },
                predictor: Predictor::BooleanLookup { table: [0, 1] },
            };
            let r = excess_risk_unimodal(
                &member,
                &inst,
                2,
                &PredictorClass::BooleanLookup,
                &Loss::clipped(),
                &RiskMode::Exact,
            )
            .unwrap();
            assert_eq!(r.excess, 0.5);
            assert_eq!(r.comparator_risk, 0.0);
            assert_eq!(r.mode, EvalMode::ExactFiniteSupport);
        }
    }

    #[test]
    fn comparator_against_itself_is_zero() {
        let inst = make_boolean(vec![[1, 0]]).unwrap();
        let f = Predictor::BooleanLookup { table: [1, 0] };
        let r = excess_risk_with(
            |_, o| f.eval(o.x_view(), o.y_view()),
            &inst,
            1,
            &PredictorClass::BooleanLookup,
            &Loss::clipped(),
            &RiskMode::Exact,
        )
        .unwrap();
        assert_eq!(r.excess, 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let inst = make_sine(
            Theta::Value(0.4),
            SineSupport::Lattice {
                indices: vec![1, 2, 3],
            },
        )
        .unwrap();
        let member = UnimodalMember::ComposedSine {
            theta: Theta::Value(0.9),
        };
        let loss = Loss::clipped();
        let exact = excess_risk_unimodal(
            &member,
            &inst,
            1,
            &PredictorClass::SingletonSine,
            &loss,
            &RiskMode::Exact,
        )
        .unwrap();
        let mc = excess_risk_unimodal(
            &member,
            &inst,
            1,
            &PredictorClass::SingletonSine,
            &loss,
            &RiskMode::MonteCarlo {
                points: 20_000,
                seed: SeedSpec::new(4),
            },
        )
        .unwrap();
        let EvalMode::MonteCarlo { stderr, .. } = mc.mode else {
            panic!()
        };
        assert!((mc.excess - exact.excess).abs() <= 4.0 * stderr);
    }

    #[test]
    fn singularity_names_the_point() {
        let inst = make_sine(Theta::Value(0.4), SineSupport::Lattice { indices: vec![1] }).unwrap();
        let bad = UnimodalMember::Composition {
            connection: Connection::SignedScaling { theta: 0.0 },
            predictor: Predictor::SingletonSine,
        };
        let err = excess_risk_unimodal(
            &bad,
            &inst,
            1,
            &PredictorClass::SingletonSine,
            &Loss::clipped(),
            &RiskMode::Exact,
        )
        .unwrap_err();
        assert!(err.to_string().contains("support point"));
    }
}
