use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mmlab::complexity::{SupOracle, DEFAULT_DRAWS};
use mmlab::hypotheses::{
    ConnectionClass, PredictorClass, ResidualNorm, UnimodalClass, DEFAULT_GRID,
};
use mmlab::instances::Instance;
use mmlab::loss::Loss;
use mmlab::shatter::SignConvention;

/// Everything a run depends on. Written beside the outputs after defaults are
/// filled in, and accepted back through `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub instance: Option<Instance>,
    pub connection: Option<ConnectionClass>,
    pub predictor: Option<PredictorClass>,
    pub unimodal: Option<UnimodalClass>,
    pub oracle: Option<SupOracle>,
    pub norm: ResidualNorm,
    pub loss: Loss,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub tasks: Option<usize>,
    pub seed: u64,
    pub draws: usize,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub delta: f64,
    pub trials: Option<usize>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub signs: Option<String>,
    pub convention: SignConvention,
    pub grid: usize,
    pub budget: usize,
    pub resamples: usize,
    pub fixed: Option<usize>,
    pub lipschitz: Option<f64>,
    pub monte_carlo: bool,
    pub rademacher: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            instance: None,
            connection: None,
            predictor: None,
            unimodal: None,
            oracle: None,
            norm: ResidualNorm::Euclidean,
            loss: Loss::clipped(),
            n: None,
            m: None,
            tasks: None,
            seed: 0,
            draws: DEFAULT_DRAWS,
            workers: 0,
            out: None,
            delta: 0.05,
            trials: None,
            k: None,
            eps: None,
            signs: None,
            convention: SignConvention::SineSign,
            grid: DEFAULT_GRID,
            budget: mmlab::erm::DEFAULT_JOINT_BUDGET,
            resamples: 30,
            fixed: None,
            lipschitz: None,
            monte_carlo: false,
            rademacher: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
    }

    /// Task count implied by the instance when none is given.
    pub fn default_tasks(&self) -> usize {
        match &self.instance {
            Some(Instance::Boolean(b)) => b.tables.len(),
            _ => 1,
        }
    }

    pub fn instance(&self) -> Result<&Instance> {
        match &self.instance {
            Some(i) => Ok(i),
            None => bail!(
                "{} needs an instance (--instance FILE or \"instance\" in the config)",
                self.experiment
            ),
        }
    }

    /// Classes matching the instance family when none were given.
    pub fn fill_classes(&mut self) -> Result<()> {
        let family = self.instance()?.family();
        let (_, k) = self.instance()?.dims();
        let (g, f, u) = match family {
            "sine" => (
                ConnectionClass::Scaling,
                PredictorClass::SingletonSine,
                UnimodalClass::ComposedSine,
            ),
            "boolean" => (
                ConnectionClass::BooleanMaps,
                PredictorClass::BooleanLookup,
                UnimodalClass::BooleanMaps,
            ),
            "three_param" => (
                ConnectionClass::SignedScaling,
                PredictorClass::SignComplete,
                UnimodalClass::Scaling,
            ),
            _ => (
                ConnectionClass::Polynomial { degree: 1 },
                PredictorClass::SmoothedHyperplanes {
                    eps: 1.0 / (10.0 * (k as f64).sqrt()),
                },
                UnimodalClass::Scaling,
            ),
        };
        self.connection.get_or_insert(g);
        self.predictor.get_or_insert(f);
        self.unimodal.get_or_insert(u);
        Ok(())
    }
}

pub fn parse_connection(s: &str) -> Result<ConnectionClass> {
    Ok(match s {
        "scaling" => ConnectionClass::Scaling,
        "signed-scaling" => ConnectionClass::SignedScaling,
        "boolean-maps" => ConnectionClass::BooleanMaps,
        other => match other.strip_prefix("polynomial:") {
            Some(d) => ConnectionClass::Polynomial {
                degree: d.parse().context("polynomial degree")?,
            },
            None => bail!("unknown connection class {other:?} (scaling, signed-scaling, boolean-maps, polynomial:D)"),
        },
    })
}

pub fn parse_predictor(s: &str) -> Result<PredictorClass> {
    Ok(match s {
        "singleton-sine" => PredictorClass::SingletonSine,
        "boolean-lookup" => PredictorClass::BooleanLookup,
        "sign-complete" => PredictorClass::SignComplete,
        other => match other.strip_prefix("hyperplanes:") {
            Some(e) => PredictorClass::SmoothedHyperplanes {
                eps: e.parse().context("hyperplane smoothing")?,
            },
            None => bail!(
                "unknown predictor class {other:?} (singleton-sine, boolean-lookup, sign-complete, hyperplanes:EPS)"
            ),
        },
    })
}

pub fn parse_unimodal(s: &str) -> Result<UnimodalClass> {
    Ok(match s {
        "composed-sine" => UnimodalClass::ComposedSine,
        "scaling" => UnimodalClass::Scaling,
        "boolean-maps" => UnimodalClass::BooleanMaps,
        other => bail!("unknown unimodal class {other:?} (composed-sine, scaling, boolean-maps)"),
    })
}
