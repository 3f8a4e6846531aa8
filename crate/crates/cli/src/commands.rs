use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::Rng;

use mmlab::analysis::bound::effective_lipschitz;
use mmlab::analysis::experiments::{
    realizability_necessity_experiment, unimodal_failure_experiment,
};
use mmlab::analysis::gap::unimodal_oracle;
use mmlab::analysis::{
    bound_for_solution, excess_risk, excess_risk_unimodal, heterogeneity_gap,
    representation_comparison, separability_check, ComplexitySource, RiskMode,
};
use mmlab::complexity::{
    approximate_realizability, gaussian_average, gaussian_average_closed_form, rademacher_average,
    AverageKind,
};
use mmlab::data::Pair;
use mmlab::erm::{fit_joint, fit_multimodal, fit_unimodal};
use mmlab::instances::{draw_labeled, draw_unlabeled, random_separable, Instance};
use mmlab::report::{to_csv, Check, Summary};
use mmlab::shatter::{construct, Sign, SignConvention};
use mmlab::SeedSpec;

use crate::config::ExperimentConfig;
use crate::Command;

pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<(&'static str, String)>,
}

impl Outcome {
    fn new<T: serde::Serialize>(
        cfg: &ExperimentConfig,
        result: &T,
        checks: Vec<Check>,
    ) -> Result<Self> {
        Ok(Outcome {
            summary: Summary::new(&cfg.experiment, result, checks)?,
            files: Vec::new(),
        })
    }

    fn with(mut self, name: &'static str, content: String) -> Self {
        self.files.push((name, content));
        self
    }

    /// Resolved config, summary and extra files, plus a timestamped sidecar
    /// log that is the only non-reproducible output.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let put = |name: &str, content: &str| {
            fs::write(dir.join(name), content)
                .with_context(|| format!("writing {}", dir.join(name).display()))
        };
        put("config.json", &(serde_json::to_string_pretty(cfg)? + "\n"))?;
        put("summary.json", &(self.summary.to_json() + "\n"))?;
        for (name, content) in &self.files {
            put(name, content)?;
        }
        let mut log = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("run.log"))
            .context("opening run.log")?;
        writeln!(
            log,
            "{} {} pass={} workers={}",
            chrono::Utc::now().to_rfc3339(),
            cfg.experiment,
            self.summary.pass,
            mmlab::par::current_workers()
        )?;
        Ok(())
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn root(cfg: &ExperimentConfig) -> SeedSpec {
    SeedSpec::new(cfg.seed)
}

pub fn run(command: Command, cfg: &mut ExperimentConfig) -> Result<Outcome> {
    match command {
        Command::Gaussavg => gaussavg(cfg),
        Command::Realizability => realizability(cfg),
        Command::FitMultimodal => fit_mm(cfg),
        Command::FitUnimodal => fit_uni(cfg),
        Command::FitJoint => fit_jt(cfg),
        Command::Shatter => shatter(cfg),
        Command::Bound => bound(cfg),
        Command::Gap => gap(cfg),
        Command::Separation => separation(cfg),
        Command::Necessity => necessity(cfg),
        Command::ReprCompare => repr(cfg),
        Command::Separability => separability(cfg),
    }
}

fn gaussavg(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let seed = root(cfg);
    let oracle = match &cfg.oracle {
        Some(o) => o.clone(),
        None => {
            let n = *cfg.n.get_or_insert(8);
            let inst = cfg.instance()?.clone();
            cfg.fill_classes()?;
            let sample = draw_labeled(&inst, 1, n, &seed.child("sample"))?;
            unimodal_oracle(cfg.unimodal.as_ref().expect("filled"), sample.task(0))?
        }
    };
    let est = if cfg.rademacher {
        rademacher_average(&oracle, cfg.draws, &seed.child("sigma"))?
    } else {
        gaussian_average(&oracle, cfg.draws, &seed.child("sigma"))?
    };
    let mut checks = Vec::new();
    let closed = gaussian_average_closed_form(&oracle).ok();
    if let (Some(exact), AverageKind::Gaussian) = (closed, est.kind) {
        checks.push(
            Check::within("closed_form_agreement", est.value, exact, 4.0 * est.stderr)
                .with_stderr(est.stderr),
        );
    }
    let result = serde_json::json!({ "estimate": est, "closed_form": closed });
    Outcome::new(cfg, &result, checks)
}

fn realizability(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let m = *cfg.m.get_or_insert(64);
    let tasks = cfg.tasks.unwrap_or_else(|| cfg.default_tasks());
    cfg.tasks = Some(tasks);
    let sp = draw_unlabeled(cfg.instance()?, tasks, m, &root(cfg))?;
    let pairs: Vec<&Pair> = sp.iter().collect();
    let r = approximate_realizability(cfg.connection.as_ref().expect("filled"), &pairs, cfg.norm)?;
    Ok(Outcome::new(cfg, &r, Vec::new())?.with("unlabeled.csv", sp.to_csv()))
}

fn risk_mode(cfg: &ExperimentConfig) -> RiskMode {
    RiskMode::Auto {
        seed: root(cfg).child("population"),
    }
}

fn fit_mm(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let n = *cfg.n.get_or_insert(16);
    let m = *cfg.m.get_or_insert(64);
    let tasks = cfg.tasks.unwrap_or_else(|| cfg.default_tasks());
    cfg.tasks = Some(tasks);
    let inst = cfg.instance()?.clone();
    let s = draw_labeled(&inst, tasks, n, &root(cfg))?;
    let sp = draw_unlabeled(&inst, tasks, m, &root(cfg))?;
    let mut sol = fit_multimodal(
        &s,
        &sp,
        cfg.connection.as_ref().expect("filled"),
        cfg.predictor.as_ref().expect("filled"),
        &cfg.loss,
        cfg.norm,
    )?;
    sol.provenance.instance_hash = Some(inst.sha256());
    let risk = excess_risk(&sol, &inst, &risk_mode(cfg))?;
    let result =
        serde_json::json!({ "training_objective": sol.training_objective(), "risk": risk });
    Ok(Outcome::new(cfg, &result, Vec::new())?
        .with("solution.json", pretty(&sol)?)
        .with("labeled.csv", s.to_csv())
        .with("unlabeled.csv", sp.to_csv()))
}

fn fit_uni(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let n = *cfg.n.get_or_insert(16);
    let tasks = cfg.tasks.unwrap_or_else(|| cfg.default_tasks());
    cfg.tasks = Some(tasks);
    let inst = cfg.instance()?.clone();
    let s = draw_labeled(&inst, tasks, n, &root(cfg))?;
    let mut sol = fit_unimodal(
        &s,
        cfg.unimodal.as_ref().expect("filled"),
        &cfg.loss,
        cfg.grid,
    )?;
    sol.provenance.instance_hash = Some(inst.sha256());
    let risk = excess_risk_unimodal(
        &sol.fit.member,
        &inst,
        tasks,
        cfg.predictor.as_ref().expect("filled"),
        &cfg.loss,
        &risk_mode(cfg),
    )?;
    let result = serde_json::json!({ "training_objective": sol.fit.objective, "risk": risk });
    Ok(Outcome::new(cfg, &result, Vec::new())?
        .with("solution.json", pretty(&sol)?)
        .with("labeled.csv", s.to_csv()))
}

fn fit_jt(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let n = *cfg.n.get_or_insert(16);
    let tasks = cfg.tasks.unwrap_or_else(|| cfg.default_tasks());
    cfg.tasks = Some(tasks);
    let s = draw_labeled(cfg.instance()?, tasks, n, &root(cfg))?;
    let sol = fit_joint(
        &s,
        cfg.connection.as_ref().expect("filled"),
        cfg.predictor.as_ref().expect("filled"),
        &cfg.loss,
        cfg.budget,
    )?;
    Ok(Outcome::new(cfg, &sol, Vec::new())?
        .with("solution.json", pretty(&sol)?)
        .with("labeled.csv", s.to_csv()))
}

fn shatter(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let signs = match (&cfg.signs, cfg.n) {
        (Some(s), n) => {
            let signs = Sign::parse_pattern(s)?;
            if let Some(n) = n {
                ensure!(n == signs.len(), "--n {n} but {} signs given", signs.len());
            }
            signs
        }
        (None, Some(n)) => {
            let mut rng = root(cfg).child("signs").rng();
            (0..n)
                .map(|_| {
                    if rng.gen::<bool>() {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect()
        }
        (None, None) => bail!("shatter needs --signs or --n"),
    };
    cfg.n = Some(signs.len());
    cfg.signs = Some(
        signs
            .iter()
            .map(|s| if *s == Sign::Plus { '+' } else { '-' })
            .collect(),
    );
    let cert = construct(&signs, cfg.convention)?;
    let realized_ok = cert.entries.iter().all(|e| match cfg.convention {
        SignConvention::SineSign => e.realized == e.target,
        SignConvention::Paper => e.realized == e.target.flip(),
    });
    let checks = vec![
        Check::equal("certificate_verified", cert.verify() as u8 as f64, 1.0),
        Check::equal("signs_realized", realized_ok as u8 as f64, 1.0),
    ];
    let result = serde_json::json!({
        "n": cert.n,
        "convention": cert.convention,
        "c": mmlab::rational::format(&cert.c),
        "theta": cert.witness_theta(),
    });
    Ok(Outcome::new(cfg, &result, checks)?
        .with("certificate.json", pretty(&cert)?)
        .with("certificate.csv", cert.to_csv()))
}

fn bound(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let n = *cfg.n.get_or_insert(8);
    let m = *cfg.m.get_or_insert(512);
    let tasks = cfg.tasks.unwrap_or_else(|| cfg.default_tasks());
    cfg.tasks = Some(tasks);
    let inst = cfg.instance()?.clone();
    let predictor = cfg.predictor.clone().expect("filled");
    let lipschitz = match cfg.lipschitz {
        Some(l) => l,
        None => effective_lipschitz(&inst, &predictor)
            .context("no finite Lipschitz constant on this support; pass --lipschitz")?,
    };
    cfg.lipschitz = Some(lipschitz);
    let s = draw_labeled(&inst, tasks, n, &root(cfg))?;
    let sp = draw_unlabeled(&inst, tasks, m, &root(cfg))?;
    let mut sol = fit_multimodal(
        &s,
        &sp,
        cfg.connection.as_ref().expect("filled"),
        &predictor,
        &cfg.loss,
        cfg.norm,
    )?;
    sol.provenance.instance_hash = Some(inst.sha256());
    let source = if cfg.monte_carlo {
        ComplexitySource::MonteCarlo {
            draws: cfg.draws,
            seed: root(cfg).child("complexity"),
        }
    } else {
        ComplexitySource::ClosedForm
    };
    let report = bound_for_solution(&sol, &s, &sp, lipschitz, cfg.delta, &source)?;
    let risk = excess_risk(&sol, &inst, &risk_mode(cfg))?;
    let mut checks = Vec::new();
    if !report.indicative {
        checks.push(Check::at_most(
            "excess_within_bound",
            risk.excess,
            report.total,
        ));
    }
    let result = serde_json::json!({ "bound": report, "risk": risk });
    Ok(Outcome::new(cfg, &result, checks)?.with("solution.json", pretty(&sol)?))
}

fn gap(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    cfg.fill_classes()?;
    let n = *cfg.n.get_or_insert(8);
    let inst = cfg.instance()?.clone();
    let grid = cfg.grid;
    let r = heterogeneity_gap(
        &inst,
        cfg.unimodal.as_ref().expect("filled"),
        cfg.predictor.as_ref().expect("filled"),
        n,
        cfg.resamples,
        cfg.draws,
        &root(cfg),
        &cfg.loss,
        grid,
        &risk_mode(cfg),
    )?;
    let terms = r.g_complexity.mean - r.f_complexity.mean;
    let checks = vec![Check::within(
        "gap_identity",
        r.h - terms,
        r.intrinsic,
        1e-12,
    )];
    Outcome::new(cfg, &r, checks)
}

fn separation(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let n = *cfg.n.get_or_insert(4);
    let trials = *cfg.trials.get_or_insert(200);
    let r = unimodal_failure_experiment(n, trials, &root(cfg), cfg.grid)?;
    let checks = vec![
        Check::at_least("mean_unimodal_excess", r.excess.mean, 0.2).with_stderr(r.excess.stderr),
        Check::at_least("duplicate_free_frequency", r.duplicate_free_frequency, 0.5),
        Check::equal("multimodal_max_excess", r.multimodal_max_excess, 0.0),
    ];
    let csv = to_csv(&r.rows)?;
    Ok(Outcome::new(cfg, &r, checks)?.with("rows.csv", csv))
}

fn necessity(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let n = *cfg.n.get_or_insert(64);
    let tasks = *cfg.tasks.get_or_insert(4);
    let trials = *cfg.trials.get_or_insert(400);
    let r = realizability_necessity_experiment(n, tasks, trials, &root(cfg))?;
    let checks = vec![
        Check::at_least("unrealizable_frequency", r.unrealizable_frequency, 0.5),
        Check::at_least("balanced_frequency", r.balanced_frequency, 0.75),
        Check::equal("composition_excess_min", r.composition_excess_min, 0.5),
        Check::equal("composition_excess_max", r.composition_excess_max, 0.5),
        Check::equal(
            "closed_form_matches",
            r.closed_form_matches as u8 as f64,
            1.0,
        ),
    ];
    let csv = to_csv(&r.rows)?;
    Ok(Outcome::new(cfg, &r, checks)?.with("rows.csv", csv))
}

fn repr(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let n = *cfg.n.get_or_insert(8);
    let k = *cfg.k.get_or_insert(16);
    let r = representation_comparison(n, k, cfg.eps, cfg.draws, &root(cfg))?;
    cfg.eps = Some(r.eps);
    let checks = vec![Check::at_least(
        "adversarial_to_collinear_ratio",
        r.ratio,
        1.8,
    )];
    Outcome::new(cfg, &r, checks)
}

fn separability(cfg: &mut ExperimentConfig) -> Result<Outcome> {
    let seed = root(cfg);
    let inst = match &cfg.instance {
        Some(i) => i.clone(),
        None => {
            let fixed = *cfg.fixed.get_or_insert(4);
            let inst = random_separable(fixed, &mut seed.child("curve").rng())?;
            cfg.instance = Some(inst.clone());
            inst
        }
    };
    let Instance::Separable(curve) = &inst else {
        bail!(
            "separability needs a separable instance, got {}",
            inst.family()
        );
    };
    let n = *cfg.n.get_or_insert(2000);
    let sample = draw_labeled(&inst, 1, n, &seed)?;
    let r = separability_check(curve, sample.task(0))?;
    let checks = vec![
        Check::equal("separator_errors", r.separator_errors as f64, 0.0),
        Check::equal(
            "crossings",
            r.crossings as f64,
            r.interior_fixed_points as f64,
        ),
    ];
    Ok(Outcome::new(cfg, &r, checks)?.with("labeled.csv", sample.to_csv()))
}
