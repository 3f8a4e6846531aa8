//! Two-stage multimodal ERM and the unimodal and joint baselines.

use serde::{Deserialize, Serialize};

use crate::data::{LabeledMultiSample, Observation, Pair, UnlabeledMultiSample, XView, YValue};
use crate::error::{Error, Result};
use crate::hypotheses::{
    fit_connection, fit_predictor, fit_unimodal as fit_unimodal_class, grid_golden_minimize,
    Connection, ConnectionClass, ConnectionFit, LabeledView, Predictor, PredictorClass,
    ResidualNorm, UnimodalClass, UnimodalFit, UnimodalMember, DEFAULT_GRID,
};
use crate::loss::Loss;
use crate::par;
use crate::theta::Theta;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_hash: Option<String>,
    pub labeled_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unlabeled_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultimodalSolution {
    pub connection_class: ConnectionClass,
    pub predictor_class: PredictorClass,
    pub stage1: ConnectionFit,
    pub predictors: Vec<Predictor>,
    pub stage2_objectives: Vec<f64>,
    pub loss: Loss,
    pub norm: ResidualNorm,
    pub provenance: Provenance,
}

impl MultimodalSolution {
    pub fn connection(&self) -> &Connection {
        &self.stage1.member
    }

    pub fn task_count(&self) -> usize {
        self.predictors.len()
    }

    /// Mean of the per-task stage-2 objectives.
    pub fn training_objective(&self) -> f64 {
        self.stage2_objectives.iter().sum::<f64>() / self.stage2_objectives.len() as f64
    }
}

fn views(obs: &[Observation]) -> Vec<LabeledView<'_>> {
    obs.iter().map(LabeledView::from).collect()
}

/// Stage 1 fits `ĝ` on all of `S′` pooled across tasks; stage 2 fits each
/// `f̂_t` on task block `t` of `S` with the observed `(x, y)`. The stages do
/// not read each other's data.
pub fn fit_multimodal(
    s: &LabeledMultiSample,
    s_prime: &UnlabeledMultiSample,
    g: &ConnectionClass,
    f: &PredictorClass,
    loss: &Loss,
    norm: ResidualNorm,
) -> Result<MultimodalSolution> {
    let pooled: Vec<&Pair> = s_prime.iter().collect();
    let stage1 =
        fit_connection(g, &pooled, norm).map_err(|e| e.in_stage("stage 1 (connection)"))?;
    let fits = par::try_map_indexed(s.task_count(), |t| {
        fit_predictor(f, &views(s.task(t)), loss).map_err(|e| e.in_stage("stage 2 (predictors)"))
    })?;
    let (predictors, stage2_objectives) = fits.into_iter().map(|p| (p.member, p.objective)).unzip();
    Ok(MultimodalSolution {
        connection_class: g.clone(),
        predictor_class: f.clone(),
        stage1,
        predictors,
        stage2_objectives,
        loss: *loss,
        norm,
        provenance: Provenance {
            instance_hash: None,
            labeled_hash: s.sha256(),
            unlabeled_hash: Some(s_prime.sha256()),
            grid_resolution: None,
        },
    })
}

/// `f̂_t(x, ĝ(x))`.
pub fn predict_unimodal(sol: &MultimodalSolution, t: usize, x: XView<'_>) -> Result<f64> {
    let f = sol.predictors.get(t).ok_or_else(|| {
        Error::InvalidInput(format!(
            "task {t} out of range ({} tasks)",
            sol.predictors.len()
        ))
    })?;
    let y = sol.connection().apply(x)?;
    f.eval(x, y.view())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodalSolution {
    pub class: UnimodalClass,
    pub fit: UnimodalFit,
    pub loss: Loss,
    pub provenance: Provenance,
}

/// Unimodal ERM on `(x, z)`, all task blocks pooled.
pub fn fit_unimodal(
    s: &LabeledMultiSample,
    class: &UnimodalClass,
    loss: &Loss,
    grid: usize,
) -> Result<UnimodalSolution> {
    let data: Vec<Observation> = s.iter().cloned().collect();
    let fit = fit_unimodal_class(class, &data, loss, grid, &[])?;
    Ok(UnimodalSolution {
        class: class.clone(),
        provenance: Provenance {
            instance_hash: None,
            labeled_hash: s.sha256(),
            unlabeled_hash: None,
            grid_resolution: fit.resolution,
        },
        fit,
        loss: *loss,
    })
}

pub const DEFAULT_JOINT_BUDGET: usize = 1_000_000;
const ZERO_LOSS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSolution {
    pub connection: Connection,
    pub predictors: Vec<Predictor>,
    pub objective: f64,
    pub evaluations: usize,
    pub budget: usize,
    pub budget_exhausted: bool,
    /// Distinct minimizers found with training objective within `1e-6` of
    /// the best (refined local minima for grid searches).
    pub ties: usize,
    /// More than one connection attains the best training objective.
    pub ambiguous: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

/// Objective of a fixed connection with per-task predictors refit on the
/// hat-sample `(x, g(x), z)`.
fn joint_objective(
    g: &Connection,
    s: &LabeledMultiSample,
    f: &PredictorClass,
    loss: &Loss,
) -> Result<(f64, Vec<Predictor>)> {
    let mut total = 0.0;
    let mut predictors = Vec::with_capacity(s.task_count());
    for block in s.tasks() {
        let ys: Vec<YValue> = block
            .iter()
            .map(|o| g.apply(o.x_view()))
            .collect::<Result<_>>()?;
        let data: Vec<LabeledView<'_>> = block
            .iter()
            .zip(&ys)
            .map(|(o, y)| LabeledView {
                x: o.x_view(),
                y: y.view(),
                z: o.z,
            })
            .collect();
        let fit = fit_predictor(f, &data, loss)?;
        total += fit.objective;
        predictors.push(fit.member);
    }
    Ok((total / s.task_count() as f64, predictors))
}

/// Joint representation ERM over a one-parameter or finite connection class,
/// with each `f_t` refit exactly for every candidate connection.
pub fn fit_joint(
    s: &LabeledMultiSample,
    g: &ConnectionClass,
    f: &PredictorClass,
    loss: &Loss,
    budget: usize,
) -> Result<JointSolution> {
    let finite: Option<Vec<Connection>> = match g {
        ConnectionClass::BooleanMaps => Some(
            (0..4u8)
                .map(|c| Connection::BooleanMap {
                    table: [c >> 1, c & 1],
                })
                .collect(),
        ),
        ConnectionClass::Finite { members } => Some(members.clone()),
        _ => None,
    };
    if let Some(members) = finite {
        let take = members.len().min(budget);
        let scored = par::try_map_indexed(take, |i| joint_objective(&members[i], s, f, loss))?;
        let best = scored
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Domain("empty connection class".into()))?;
        let objective = scored[best].0;
        let ties = scored
            .iter()
            .filter(|(v, _)| *v <= objective + ZERO_LOSS_TOL)
            .count();
        return Ok(JointSolution {
            connection: members[best].clone(),
            predictors: scored[best].1.clone(),
            objective,
            evaluations: take,
            budget,
            budget_exhausted: take < members.len(),
            ties,
            ambiguous: ties > 1,
            resolution: None,
        });
    }

    let signed = match g {
        ConnectionClass::Scaling => false,
        ConnectionClass::SignedScaling => true,
        other => {
            return Err(Error::Unsupported(format!(
                "joint search needs a one-parameter or finite class, got {other:?}"
            )))
        }
    };
    let member = |t: f64| {
        if signed {
            Connection::SignedScaling { theta: t }
        } else {
            Connection::Scaling {
                theta: Theta::Value(t),
            }
        }
    };
    let halves: &[f64] = if signed { &[1.0, -1.0] } else { &[1.0] };
    let per_half = budget / halves.len();
    let grid = DEFAULT_GRID.min(per_half / 2).max(2);
    let refine = 64usize.min(per_half.saturating_sub(grid) / 62);
    let exhausted = grid < DEFAULT_GRID || refine < 64;

    let mut best: Option<(f64, f64)> = None;
    let mut minima: Vec<(f64, f64)> = Vec::new();
    let mut evaluations = 0;
    let mut resolution = None;
    for &side in halves {
        let search = grid_golden_minimize(
            |t| joint_objective(&member(side * t), s, f, loss).map(|r| r.0),
            grid,
            refine,
        )?;
        evaluations += search.evaluations;
        resolution = Some(search.resolution);
        let cand = (side * search.argmin, search.value);
        if best.is_none_or(|b| cand.1 < b.1) {
            best = Some(cand);
        }
        minima.extend(search.local_minima.iter().map(|&(t, v)| (side * t, v)));
    }
    let (theta, _) = best.expect("at least one half searched");
    let connection = member(theta);
    let (objective, predictors) = joint_objective(&connection, s, f, loss)?;
    let ties = minima
        .iter()
        .filter(|(_, v)| *v <= objective + ZERO_LOSS_TOL)
        .count()
        .max(1);
    Ok(JointSolution {
        connection,
        predictors,
        objective,
        evaluations,
        budget,
        budget_exhausted: exhausted,
        ties,
        ambiguous: ties > 1,
        resolution,
    })
}

/// The composed member `x ↦ f̂_t(x, ĝ(x))` of a multimodal solution.
pub fn composed_member(sol: &MultimodalSolution, t: usize) -> Result<UnimodalMember> {
    let predictor = sol
        .predictors
        .get(t)
        .ok_or_else(|| Error::InvalidInput(format!("task {t} out of range")))?
        .clone();
    Ok(UnimodalMember::Composition {
        connection: sol.connection().clone(),
        predictor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{
        draw_labeled, draw_unlabeled, make_boolean, make_sine, make_subspace, SineSupport,
    };
    use crate::SeedSpec;

    #[test]
    fn sine_multimodal_is_exact() {
        let inst = make_sine(Theta::Value(0.37), SineSupport::Continuous { lower: 0.1 }).unwrap();
        let s = draw_labeled(&inst, 2, 5, &SeedSpec::new(1)).unwrap();
        let sp = draw_unlabeled(&inst, 2, 3, &SeedSpec::new(2)).unwrap();
        let sol = fit_multimodal(
            &s,
            &sp,
            &ConnectionClass::Scaling,
            &PredictorClass::SingletonSine,
            &Loss::clipped(),
            ResidualNorm::Euclidean,
        )
        .unwrap();
        assert_eq!(
            sol.connection(),
            &Connection::Scaling {
                theta: Theta::Value(0.37)
            }
        );
        assert_eq!(sol.stage2_objectives, vec![0.0, 0.0]);
        for o in s.iter() {
            assert_eq!(predict_unimodal(&sol, 0, o.x_view()).unwrap(), o.z);
        }
        assert!(predict_unimodal(&sol, 2, s.task(0)[0].x_view()).is_err());
    }

    #[test]
    fn subspace_connection_recovered() {
        let v = vec![0.2, -0.3, 0.1];
        let y0 = vec![0.1, 0.05, -0.2];
        let inst = make_subspace(v.clone(), y0.clone(), None).unwrap();
        let s = draw_labeled(&inst, 1, 4, &SeedSpec::new(3)).unwrap();
        let sp = draw_unlabeled(&inst, 1, 6, &SeedSpec::new(4)).unwrap();
        let sol = fit_multimodal(
            &s,
            &sp,
            &ConnectionClass::Polynomial { degree: 1 },
            &PredictorClass::SmoothedHyperplanes { eps: 0.01 },
            &Loss::clipped(),
            ResidualNorm::Euclidean,
        )
        .unwrap();
        let Connection::Polynomial { coeffs } = sol.connection() else {
            panic!()
        };
        for j in 0..3 {
            assert!((coeffs[0][j] - y0[j]).abs() < 1e-10);
            assert!((coeffs[1][j] - v[j]).abs() < 1e-10);
        }
        assert!(sol.stage1.objective < 1e-10);
    }

    #[test]
    fn boolean_stage1_residual_is_high() {
        let inst = make_boolean(vec![[0, 1]]).unwrap();
        let s = draw_labeled(&inst, 1, 200, &SeedSpec::new(5)).unwrap();
        let sp = draw_unlabeled(&inst, 1, 2000, &SeedSpec::new(6)).unwrap();
        let sol = fit_multimodal(
            &s,
            &sp,
            &ConnectionClass::BooleanMaps,
            &PredictorClass::BooleanLookup,
            &Loss::clipped(),
            ResidualNorm::Euclidean,
        )
        .unwrap();
        assert!((sol.stage1.objective - 0.5).abs() < 0.05);
        assert_eq!(sol.stage2_objectives, vec![0.0]);
    }

    #[test]
    fn stage_errors_are_tagged() {
        let obs = vec![Observation::unbounded(vec![1.0], vec![0.0], 0.0)];
        let s = LabeledMultiSample::new(vec![obs]).unwrap();
        let err = fit_multimodal(
            &s,
            &s.unlabeled(),
            &ConnectionClass::BooleanMaps,
            &PredictorClass::SingletonSine,
            &Loss::clipped(),
            ResidualNorm::Euclidean,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Stage {
                stage: "stage 2 (predictors)",
                ..
            }
        ));
        let zero = vec![Observation::unbounded(vec![0.0], vec![0.5], 0.0)];
        let s = LabeledMultiSample::new(vec![zero]).unwrap();
        let err = fit_multimodal(
            &s,
            &s.unlabeled(),
            &ConnectionClass::Scaling,
            &PredictorClass::SingletonSine,
            &Loss::clipped(),
            ResidualNorm::Euclidean,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Stage {
                stage: "stage 1 (connection)",
                ..
            }
        ));
    }

    #[test]
    fn joint_fit_single_point_has_many_ties() {
        let inst = make_sine(Theta::Value(0.5), SineSupport::Continuous { lower: 0.5 }).unwrap();
        let s = draw_labeled(&inst, 1, 1, &SeedSpec::new(8)).unwrap();
        let sol = fit_joint(
            &s,
            &ConnectionClass::Scaling,
            &PredictorClass::SingletonSine,
            &Loss::clipped(),
            200_000,
        )
        .unwrap();
        assert!(sol.objective < 1e-6);
        assert!(sol.ties > 1 && sol.ambiguous);
    }

    #[test]
    fn joint_fit_finite_singleton_reduces_to_per_task() {
        let inst = make_boolean(vec![[0, 1], [1, 0]]).unwrap();
        let s = draw_labeled(&inst, 2, 12, &SeedSpec::new(9)).unwrap();
        let g = Connection::BooleanMap { table: [0, 1] };
        let sol = fit_joint(
            &s,
            &ConnectionClass::Finite {
                members: vec![g.clone()],
            },
            &PredictorClass::BooleanLookup,
            &Loss::clipped(),
            10,
        )
        .unwrap();
        assert_eq!(sol.connection, g);
        for t in 0..2 {
            let hat: Vec<Observation> = s
                .task(t)
                .iter()
                .map(|o| Observation::unbounded(o.x.clone(), o.x.clone(), o.z))
                .collect();
            let via_g = fit_predictor(
                &PredictorClass::BooleanLookup,
                &views(&hat),
                &Loss::clipped(),
            )
            .unwrap();
            assert_eq!(sol.predictors[t], via_g.member);
        }
    }
}
