//! Seeded experiments: unimodal failure on the sine family, necessity of a
//! realizable connection on the Boolean family, and bound dominance over a
//! size grid. Trials run in parallel, each on its own stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::bound::{bound_for_solution, effective_lipschitz, ComplexitySource};
use crate::analysis::risk::{excess_risk, excess_risk_unimodal, RiskMode};
use crate::complexity::approximate_realizability;
use crate::data::Pair;
use crate::erm::fit_multimodal;
use crate::error::{Error, Result};
use crate::hypotheses::{
    fit_unimodal, Connection, ConnectionClass, Predictor, PredictorClass, ResidualNorm,
    UnimodalClass, UnimodalMember,
};
use crate::instances::{
    draw_labeled, draw_unlabeled, make_boolean, make_sine, make_theorem2_distribution, Instance,
    SineSupport,
};
use crate::loss::Loss;
use crate::par;
use crate::seed::SeedSpec;
use crate::shatter::{construct, Sign, SignConvention};
use crate::stats::{log_log_slope, mean_stderr, MeanEstimate};
use crate::theta::Theta;

/// Sine law, uniform on the lattice points `1..=n³`, with `θ*` the shattering
/// witness of uniformly random signs.
pub fn theorem2_instance(n: usize, seed: &SeedSpec) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidInput("n = 0".into()));
    }
    let m = n
        .checked_pow(3)
        .filter(|&m| m <= u32::MAX as usize)
        .ok_or_else(|| Error::InvalidInput(format!("support n³ too large for n = {n}")))?
        as u32;
    let mut rng = seed.child("signs").rng();
    let signs: Vec<Sign> = (0..m)
        .map(|_| {
            if rng.gen::<bool>() {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect();
    let theta = construct(&signs, SignConvention::SineSign)?.theta();
    let indices: Vec<u32> = (1..=m).collect();
    make_theorem2_distribution(&indices, m, theta)
}

/// Two-stage ERM on `n` labeled and `n` unlabeled points with scaling
/// connections and the singleton sine predictor; returns the exact excess.
pub fn multimodal_excess(instance: &Instance, n: usize, seed: &SeedSpec) -> Result<f64> {
    let loss = Loss::clipped();
    let s = draw_labeled(instance, 1, n, seed)?;
    let sp = draw_unlabeled(instance, 1, n, seed)?;
    let sol = fit_multimodal(
        &s,
        &sp,
        &ConnectionClass::Scaling,
        &PredictorClass::SingletonSine,
        &loss,
        ResidualNorm::Euclidean,
    )?;
    Ok(excess_risk(&sol, instance, &RiskMode::Exact)?.excess)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub trial: usize,
    pub duplicate_free: bool,
    pub train_objective: f64,
    pub excess: f64,
    pub multimodal_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub grid: usize,
    pub excess: MeanEstimate,
    pub duplicate_free_frequency: f64,
    pub multimodal_max_excess: f64,
    /// `(m − n)/(2m)`.
    pub reference_bound: f64,
    pub rows: Vec<FailureRow>,
}

/// Unimodal ERM over the composed sine class against the two-stage learner,
/// on fresh Theorem-2 style laws per trial.
pub fn unimodal_failure_experiment(
    n: usize,
    trials: usize,
    seed: &SeedSpec,
    grid: usize,
) -> Result<FailureReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("no trials".into()));
    }
    let loss = Loss::clipped();
    let rows = par::try_map_indexed(trials, |k| {
        let stream = seed.child("trial").child(k);
        let inst = theorem2_instance(n, &stream)?;
        let s = draw_labeled(&inst, 1, n, &stream)?;
        let mut seen: Vec<u32> = s
            .task(0)
            .iter()
            .filter_map(|o| o.exact.as_ref()?.lattice)
            .collect();
        seen.sort_unstable();
        seen.dedup();
        let fit = fit_unimodal(&UnimodalClass::ComposedSine, s.task(0), &loss, grid, &[])?;
        let r = excess_risk_unimodal(
            &fit.member,
            &inst,
            1,
            &PredictorClass::SingletonSine,
            &loss,
            &RiskMode::Exact,
        )?;
        Ok(FailureRow {
            trial: k,
            duplicate_free: seen.len() == n,
            train_objective: fit.objective,
            excess: r.excess,
            multimodal_excess: multimodal_excess(&inst, n, &stream)?,
        })
    })?;
    let m = n.pow(3);
    let excess: Vec<f64> = rows.iter().map(|r| r.excess).collect();
    Ok(FailureReport {
        n,
        m,
        trials,
        grid,
        excess: mean_stderr(&excess),
        duplicate_free_frequency: rows.iter().filter(|r| r.duplicate_free).count() as f64
            / trials as f64,
        multimodal_max_excess: rows
            .iter()
            .map(|r| r.multimodal_excess.abs())
            .fold(0.0, f64::max),
        reference_bound: (m - n) as f64 / (2 * m) as f64,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessityRow {
    pub trial: usize,
    pub c0: usize,
    pub c1: usize,
    pub realizability: f64,
    /// `Σ_v (c_v − |d_v|)/2` with `d_v` the signed count of `y` over `x = v`.
    pub closed_form_mismatches: usize,
    pub balanced: bool,
    pub unrealizable: bool,
    pub composition_excess: f64,
    pub multimodal_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub n: usize,
    pub tasks: usize,
    pub trials: usize,
    /// `1/2 − 4√3/√(nT)`.
    pub realizability_threshold: f64,
    /// `3√(nT)`.
    pub balance_threshold: f64,
    pub balanced_frequency: f64,
    pub unrealizable_frequency: f64,
    pub closed_form_matches: bool,
    pub composition_excess_min: f64,
    pub composition_excess_max: f64,
    pub rows: Vec<NecessityRow>,
}

fn boolean_members() -> Vec<[u8; 2]> {
    (0..4u8).map(|c| [c >> 1, c & 1]).collect()
}

/// Best exact excess of any unimodal composition `x ↦ f(g(x))` with `g` a
/// Boolean map and `f` a lookup, per task, averaged over tasks.
fn best_composition_excess(instance: &Instance, tasks: usize, loss: &Loss) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..tasks {
        let mut best = f64::INFINITY;
        for g in boolean_members() {
            for f in boolean_members() {
                let member = UnimodalMember::Composition {
                    connection: Connection::BooleanMap { table: g },
                    predictor: Predictor::BooleanLookup { table: f },
                };
                let single = match instance {
                    Instance::Boolean(b) if b.tables.len() > 1 => make_boolean(vec![b.tables[t]])?,
                    other => other.clone(),
                };
                let r = excess_risk_unimodal(
                    &member,
                    &single,
                    1,
                    &PredictorClass::BooleanLookup,
                    loss,
                    &RiskMode::Exact,
                )?;
                best = best.min(r.excess);
            }
        }
        total += best;
    }
    Ok(total / tasks as f64)
}

/// Boolean family with independent `x`, `y` and a random non-constant
/// `b_t` per task: the connection class cannot be realized, and no unimodal
/// composition beats chance.
pub fn realizability_necessity_experiment(
    n: usize,
    tasks: usize,
    trials: usize,
    seed: &SeedSpec,
) -> Result<NecessityReport> {
    if n == 0 || tasks == 0 || trials == 0 {
        return Err(Error::InvalidInput(format!(
            "n = {n}, T = {tasks}, trials = {trials}"
        )));
    }
    let nt = (n * tasks) as f64;
    let r_threshold = 0.5 - 4.0 * 3f64.sqrt() / nt.sqrt();
    let c_threshold = 3.0 * nt.sqrt();
    let loss = Loss::clipped();
    let rows = par::try_map_indexed(trials, |k| {
        let stream = seed.child("trial").child(k);
        let mut rng = stream.child("tables").rng();
        let tables: Vec<[u8; 2]> = (0..tasks)
            .map(|_| if rng.gen::<bool>() { [0, 1] } else { [1, 0] })
            .collect();
        let inst = make_boolean(tables)?;
        let s = draw_labeled(&inst, tasks, n, &stream)?;
        let mut counts = [[0usize; 2]; 2];
        for o in s.iter() {
            counts[o.x[0] as usize][o.y[0] as usize] += 1;
        }
        let c0 = counts[0][0] + counts[0][1];
        let c1 = counts[1][0] + counts[1][1];
        let closed: usize = (0..2)
            .map(|v| {
                let c = counts[v][0] + counts[v][1];
                let d = counts[v][1].abs_diff(counts[v][0]);
                (c - d) / 2
            })
            .sum();
        let pairs: Vec<Pair> = s.iter().map(|o| o.pair()).collect();
        let refs: Vec<&Pair> = pairs.iter().collect();
        let realizability = approximate_realizability(
            &ConnectionClass::BooleanMaps,
            &refs,
            ResidualNorm::Euclidean,
        )?
        .value;
        let sp = draw_unlabeled(&inst, tasks, n, &stream)?;
        let sol = fit_multimodal(
            &s,
            &sp,
            &ConnectionClass::BooleanMaps,
            &PredictorClass::BooleanLookup,
            &loss,
            ResidualNorm::Euclidean,
        )?;
        Ok(NecessityRow {
            trial: k,
            c0,
            c1,
            realizability,
            closed_form_mismatches: closed,
            balanced: (c0.abs_diff(c1) as f64) <= c_threshold,
            unrealizable: realizability >= r_threshold,
            composition_excess: best_composition_excess(&inst, tasks, &loss)?,
            multimodal_excess: excess_risk(&sol, &inst, &RiskMode::Exact)?.excess,
        })
    })?;
    let freq = |f: &dyn Fn(&NecessityRow) -> bool| {
        rows.iter().filter(|r| f(r)).count() as f64 / trials as f64
    };
    Ok(NecessityReport {
        n,
        tasks,
        trials,
        realizability_threshold: r_threshold,
        balance_threshold: c_threshold,
        balanced_frequency: freq(&|r| r.balanced),
        unrealizable_frequency: freq(&|r| r.unrealizable),
        closed_form_matches: rows
            .iter()
            .all(|r| r.realizability == r.closed_form_mismatches as f64 / nt),
        composition_excess_min: rows
            .iter()
            .map(|r| r.composition_excess)
            .fold(f64::INFINITY, f64::min),
        composition_excess_max: rows
            .iter()
            .map(|r| r.composition_excess)
            .fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    /// Boolean tables, `L = 1`.
    Boolean,
    /// Sine law on lattice points `1..=8` with `θ* ∈ [1/2, 1]`, scaling
    /// connections and support-restricted `L`.
    SineLattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceGrid {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub tasks: Vec<usize>,
    pub seeds: usize,
    pub delta: f64,
}

impl Default for DominanceGrid {
    fn default() -> Self {
        DominanceGrid {
            n: vec![4, 16, 64],
            m: vec![64, 256],
            tasks: vec![1, 4],
            seeds: 20,
            delta: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub family: BoundFamily,
    pub seed: usize,
    pub n: usize,
    pub m: usize,
    pub tasks: usize,
    pub lipschitz: f64,
    pub excess: f64,
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySlopes {
    pub family: BoundFamily,
    /// Log-log slope of term 2 against `mT`.
    pub term2_vs_mt: f64,
    /// Log-log slope of term 4 against `nT`.
    pub term4_vs_nt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub grid: DominanceGrid,
    pub runs: usize,
    pub dominated_fraction: f64,
    pub slopes: Vec<FamilySlopes>,
    pub rows: Vec<DominanceRow>,
}

fn dominance_run(
    family: BoundFamily,
    seed_index: usize,
    n: usize,
    m: usize,
    tasks: usize,
    delta: f64,
    seed: &SeedSpec,
) -> Result<DominanceRow> {
    let loss = Loss::clipped();
    let family_seed = seed.child(match family {
        BoundFamily::Boolean => "boolean",
        BoundFamily::SineLattice => "sine",
    });
    let base = family_seed.child(seed_index);
    let mut rng = base.child("instance").rng();
    let (inst, g, f) = match family {
        BoundFamily::Boolean => {
            let tables: Vec<[u8; 2]> = (0..4)
                .map(|_| if rng.gen::<bool>() { [0, 1] } else { [1, 0] })
                .collect();
            (
                make_boolean(tables[..tasks].to_vec())?,
                ConnectionClass::BooleanMaps,
                PredictorClass::BooleanLookup,
            )
        }
        BoundFamily::SineLattice => {
            let theta = Theta::Value(rng.gen_range(0.5..=1.0));
            let inst = make_sine(
                theta,
                SineSupport::Lattice {
                    indices: (1..=8).collect(),
                },
            )?;
            (
                inst,
                ConnectionClass::Scaling,
                PredictorClass::SingletonSine,
            )
        }
    };
    let lipschitz = effective_lipschitz(&inst, &f)
        .ok_or_else(|| Error::Unsupported("no finite Lipschitz constant on this support".into()))?;
    let stream = base.child(n).child(m).child(tasks);
    let s = draw_labeled(&inst, tasks, n, &stream)?;
    let sp = draw_unlabeled(&inst, tasks, m, &stream)?;
    let sol = fit_multimodal(&s, &sp, &g, &f, &loss, ResidualNorm::Euclidean)?;
    let excess = excess_risk(&sol, &inst, &RiskMode::Exact)?.excess;
    let b = bound_for_solution(
        &sol,
        &s,
        &sp,
        lipschitz,
        delta,
        &ComplexitySource::ClosedForm,
    )?;
    Ok(DominanceRow {
        family,
        seed: seed_index,
        n,
        m,
        tasks,
        lipschitz,
        excess,
        term1: b.term1,
        term2: b.term2,
        term3: b.term3,
        term4: b.term4,
        total: b.total,
        dominated: excess <= b.total,
    })
}

/// Fits and bounds every cell of the grid for both families with closed-form
/// complexities, and regresses the size dependence of terms 2 and 4.
pub fn bound_dominance_experiment(
    grid: &DominanceGrid,
    seed: &SeedSpec,
) -> Result<DominanceReport> {
    let mut cells = Vec::new();
    for family in [BoundFamily::Boolean, BoundFamily::SineLattice] {
        for k in 0..grid.seeds {
            for &n in &grid.n {
                for &m in &grid.m {
                    for &t in &grid.tasks {
                        cells.push((family, k, n, m, t));
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let rows = par::try_map_indexed(cells.len(), |i| {
        let (family, k, n, m, t) = cells[i];
        dominance_run(family, k, n, m, t, grid.delta, seed)
    })?;
    let slopes = [BoundFamily::Boolean, BoundFamily::SineLattice]
        .into_iter()
        .map(|family| {
            let fam: Vec<&DominanceRow> = rows.iter().filter(|r| r.family == family).collect();
            let mt: Vec<f64> = fam.iter().map(|r| (r.m * r.tasks) as f64).collect();
            let nt: Vec<f64> = fam.iter().map(|r| (r.n * r.tasks) as f64).collect();
            let t2: Vec<f64> = fam.iter().map(|r| r.term2).collect();
            let t4: Vec<f64> = fam.iter().map(|r| r.term4).collect();
            FamilySlopes {
                family,
                term2_vs_mt: log_log_slope(&mt, &t2),
                term4_vs_nt: log_log_slope(&nt, &t4),
            }
        })
        .collect();
    Ok(DominanceReport {
        grid: grid.clone(),
        runs: rows.len(),
        dominated_fraction: rows.iter().filter(|r| r.dominated).count() as f64 / rows.len() as f64,
        slopes,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_duplicate_free() {
        let r = unimodal_failure_experiment(1, 5, &SeedSpec::new(2), 1000).unwrap();
        assert_eq!(r.duplicate_free_frequency, 1.0);
        assert_eq!(r.multimodal_max_excess, 0.0);
    }

    #[test]
    fn necessity_small() {
        let r = realizability_necessity_experiment(2, 2, 20, &SeedSpec::new(3)).unwrap();
        assert!(r.closed_form_matches);
        assert_eq!(r.composition_excess_min, 0.5);
        assert_eq!(r.composition_excess_max, 0.5);
        // 1/2 − 4√3/2 < 0
        assert_eq!(r.unrealizable_frequency, 1.0);
    }

    #[test]
    fn dominance_small_grid() {
        let grid = DominanceGrid {
            n: vec![4],
            m: vec![64],
            tasks: vec![1, 4],
            seeds: 2,
            delta: 0.05,
        };
        let r = bound_dominance_experiment(&grid, &SeedSpec::new(5)).unwrap();
        assert_eq!(r.runs, 8);
        assert_eq!(r.dominated_fraction, 1.0);
    }
}
