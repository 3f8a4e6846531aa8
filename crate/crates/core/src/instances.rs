//! Distribution families used throughout: the sine family and its lattice
//! supports, the three-parameter variant, Boolean tasks, affine subspaces and
//! separable curves.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::data::{
    ExactCoords, LabeledMultiSample, Observation, Pair, UnlabeledMultiSample, XView,
};
use crate::error::{Error, Result};
use crate::par;
use crate::rational;
use crate::seed::{SeedSpec, StreamRng};
use crate::theta::{sine_of_y, Theta};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SineSupport {
    /// Uniform on `(lower, 1]`.
    Continuous {
        #[serde(default)]
        lower: f64,
    },
    /// Uniform over the lattice points `x_i = 1/(1 + 16^{-i})`.
    Lattice { indices: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineInstance {
    pub theta: Theta,
    pub support: SineSupport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeParamLabel {
    /// `z = sin(1/(x + y))`.
    #[default]
    SineOfSum,
    /// `z = x + y = c(θ₁ + θ₂)`.
    RawSum,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThreeParamInstance {
    #[serde(default)]
    pub label: ThreeParamLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BooleanInstance {
    /// `tables[t] = [b_t(0), b_t(1)]`. A single table is shared by all tasks.
    pub tables: Vec<[u8; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LabelRule {
    /// `z = sign(w·(x, y) − offset)`, with `sign(0) = +1`.
    Hyperplane { normal: Vec<f64>, offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceInstance {
    pub v: Vec<f64>,
    pub y0: Vec<f64>,
    pub label: LabelRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableInstance {
    /// Breakpoints of the piecewise-linear `f`, from `(0, 0)` to `(1, 1)`.
    pub breakpoints: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Instance {
    Sine(SineInstance),
    ThreeParam(ThreeParamInstance),
    Boolean(BooleanInstance),
    Subspace(SubspaceInstance),
    Separable(SeparableInstance),
}

pub fn make_sine(theta: Theta, support: SineSupport) -> Result<Instance> {
    theta.validate()?;
    match &support {
        SineSupport::Continuous { lower } => {
            if !(lower.is_finite() && *lower >= 0.0 && *lower < 1.0) {
                return Err(Error::Domain(format!("support lower bound {lower}")));
            }
        }
        SineSupport::Lattice { indices } => {
            if indices.is_empty() {
                return Err(Error::Domain("empty lattice support".into()));
            }
            if indices.contains(&0) {
                return Err(Error::Domain("lattice indices start at 1".into()));
            }
            let set: BTreeSet<u32> = indices.iter().copied().collect();
            if set.len() != indices.len() {
                return Err(Error::Domain("duplicate lattice index".into()));
            }
        }
    }
    Ok(Instance::Sine(SineInstance { theta, support }))
}

/// Uniform law on the lattice points with the given indices, all drawn from
/// `{1, …, m}`.
pub fn make_theorem2_distribution(indices: &[u32], m: u32, theta: Theta) -> Result<Instance> {
    if let Some(&bad) = indices.iter().find(|&&i| i > m) {
        return Err(Error::Domain(format!(
            "index {bad} exceeds support size {m}"
        )));
    }
    make_sine(
        theta,
        SineSupport::Lattice {
            indices: indices.to_vec(),
        },
    )
}

pub fn make_boolean(tables: Vec<[u8; 2]>) -> Result<Instance> {
    if tables.is_empty() {
        return Err(Error::InvalidInput("no Boolean tables".into()));
    }
    if tables.iter().flatten().any(|&b| b > 1) {
        return Err(Error::Domain("Boolean table entries must be 0 or 1".into()));
    }
    Ok(Instance::Boolean(BooleanInstance { tables }))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `y = x·v + y₀` with `x` uniform on `[−1, 1]`. Requires `‖v‖ + ‖y₀‖ ≤ 1`
/// so that every `y` stays in the unit ball.
pub fn make_subspace(v: Vec<f64>, y0: Vec<f64>, label: Option<LabelRule>) -> Result<Instance> {
    if v.is_empty() || v.len() != y0.len() {
        return Err(Error::InvalidInput(format!(
            "v has dimension {}, y0 has {}",
            v.len(),
            y0.len()
        )));
    }
    if v.iter().chain(&y0).any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("non-finite subspace parameter".into()));
    }
    if norm(&v) + norm(&y0) > 1.0 + 1e-12 {
        return Err(Error::Domain("‖v‖ + ‖y0‖ exceeds 1".into()));
    }
    let k = v.len();
    let label = label.unwrap_or_else(|| {
        let mut normal = vec![0.0; 1 + k];
        normal[0] = 1.0;
        LabelRule::Hyperplane {
            normal,
            offset: 0.0,
        }
    });
    let LabelRule::Hyperplane { normal, offset } = &label;
    if normal.len() != 1 + k || !offset.is_finite() {
        return Err(Error::InvalidInput(format!(
            "label hyperplane needs {} coefficients",
            1 + k
        )));
    }
    Ok(Instance::Subspace(SubspaceInstance { v, y0, label }))
}

/// Piecewise-linear strictly increasing `f` through the breakpoints.
/// Rejects the identity and any segment lying on the diagonal, where
/// `sign(x − f(x))` would be undefined on an interval.
pub fn make_separable(breakpoints: Vec<(f64, f64)>) -> Result<Instance> {
    if breakpoints.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    if breakpoints.first() != Some(&(0.0, 0.0)) || breakpoints.last() != Some(&(1.0, 1.0)) {
        return Err(Error::Domain(
            "breakpoints must start at (0,0) and end at (1,1)".into(),
        ));
    }
    for w in breakpoints.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Domain(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if x0 == y0 && x1 == y1 {
            return Err(Error::Domain(
                "a segment lies on the identity; labels undefined there".into(),
            ));
        }
    }
    Ok(Instance::Separable(SeparableInstance { breakpoints }))
}

pub fn make_three_param(label: ThreeParamLabel) -> Instance {
    Instance::ThreeParam(ThreeParamInstance { label })
}

/// Random separable curve with `fixed` fixed points (`0` and `1` included),
/// interior points at least `0.05` apart, and bumps of alternating sign
/// between them.
pub fn random_separable(fixed: usize, rng: &mut StreamRng) -> Result<Instance> {
    if !(2..=12).contains(&fixed) {
        return Err(Error::InvalidInput(format!("{fixed} fixed points")));
    }
    const MIN_GAP: f64 = 0.05;
    let points = loop {
        let mut inner: Vec<f64> = (0..fixed - 2).map(|_| rng.gen::<f64>()).collect();
        inner.sort_by(f64::total_cmp);
        let mut pts = vec![0.0];
        pts.extend(inner);
        pts.push(1.0);
        if pts.windows(2).all(|w| w[1] - w[0] >= MIN_GAP) {
            break pts;
        }
    };
    let up = rng.gen::<bool>();
    let mut bps = vec![(0.0, 0.0)];
    for (j, w) in points.windows(2).enumerate() {
        let gap = w[1] - w[0];
        let mid = w[0] + gap / 2.0;
        let sign = if (j % 2 == 0) == up { 1.0 } else { -1.0 };
        bps.push((mid, mid + sign * gap / 4.0));
        bps.push((w[1], w[1]));
    }
    make_separable(bps)
}

impl SeparableInstance {
    pub fn eval(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let j = bp.partition_point(|p| p.0 <= x).clamp(1, bp.len() - 1);
        let ((x0, y0), (x1, y1)) = (bp[j - 1], bp[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// The set `{x : f(x) = x}`, sorted.
    pub fn fixed_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.breakpoints.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let d0 = x0 - y0;
            let d1 = x1 - y1;
            if d0 == 0.0 {
                out.push(x0);
            } else if d0 * d1 < 0.0 {
                out.push(x0 + d0 / (d0 - d1) * (x1 - x0));
            }
        }
        out.push(1.0);
        out
    }
}

fn sign_label(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl LabelRule {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            LabelRule::Hyperplane { normal, offset } => {
                let s: f64 = normal
                    .iter()
                    .zip(x.iter().chain(y))
                    .map(|(w, v)| w * v)
                    .sum();
                sign_label(s - offset)
            }
        }
    }
}

/// One lattice observation under the sine law.
pub fn sine_lattice_observation(theta: &Theta, index: u32) -> Result<Observation> {
    let x = rational::to_f64(&rational::lattice_point(index));
    let recip = rational::lattice_recip(index);
    let xs = [x];
    let y = theta.apply(XView {
        x: &xs,
        recip: Some(&recip),
        lattice: Some(index),
    })?;
    let z = sine_of_y(y.view())?;
    Ok(Observation::new(vec![x], y.y, z)?.with_exact(ExactCoords {
        lattice: Some(index),
        x_recip: recip,
        y_turns: y.turns,
    }))
}

fn sine_continuous_observation(theta: &Theta, x: f64) -> Result<Observation> {
    let xs = [x];
    let y = theta.apply(XView::plain(&xs))?;
    let z = sine_of_y(y.view())?;
    let obs = Observation::new(vec![x], y.y, z)?;
    Ok(match y.turns {
        Some(turns) => obs.with_exact(ExactCoords {
            lattice: None,
            x_recip: rational::from_f64(x)?.recip(),
            y_turns: Some(turns),
        }),
        None => obs,
    })
}

fn boolean_observation(table: [u8; 2], x: u8, y: u8) -> Observation {
    Observation::unbounded(vec![x as f64], vec![y as f64], table[y as usize] as f64)
}

impl Instance {
    pub fn family(&self) -> &'static str {
        match self {
            Instance::Sine(_) => "sine",
            Instance::ThreeParam(_) => "three_param",
            Instance::Boolean(_) => "boolean",
            Instance::Subspace(_) => "subspace",
            Instance::Separable(_) => "separable",
        }
    }

    /// Re-runs the constructor checks, for instances read from JSON.
    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Sine(s) => make_sine(s.theta.clone(), s.support.clone()).map(|_| ()),
            Instance::ThreeParam(_) => Ok(()),
            Instance::Boolean(b) => make_boolean(b.tables.clone()).map(|_| ()),
            Instance::Subspace(s) => {
                make_subspace(s.v.clone(), s.y0.clone(), Some(s.label.clone())).map(|_| ())
            }
            Instance::Separable(s) => make_separable(s.breakpoints.clone()).map(|_| ()),
        }
    }

    /// Dimensions `(q, k)` of the two modalities.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Instance::Subspace(s) => (1, s.v.len()),
            _ => (1, 1),
        }
    }

    fn boolean_table(&self, task: usize) -> Result<[u8; 2]> {
        match self {
            Instance::Boolean(b) => match b.tables.len() {
                1 => Ok(b.tables[0]),
                len if task < len => Ok(b.tables[task]),
                len => Err(Error::InvalidInput(format!(
                    "task {task} but only {len} Boolean tables"
                ))),
            },
            _ => Err(Error::InvalidInput("not a Boolean instance".into())),
        }
    }

    /// Checks that `tasks` task blocks can be drawn.
    pub fn check_tasks(&self, tasks: usize) -> Result<()> {
        if let Instance::Boolean(b) = self {
            if b.tables.len() != 1 && b.tables.len() != tasks {
                return Err(Error::InvalidInput(format!(
                    "{} Boolean tables for {tasks} tasks",
                    b.tables.len()
                )));
            }
        }
        Ok(())
    }

    /// One observation from task `task`.
    pub fn draw_observation(&self, task: usize, rng: &mut StreamRng) -> Result<Observation> {
        match self {
            Instance::Sine(s) => match &s.support {
                SineSupport::Continuous { lower } => {
                    let u: f64 = rng.gen();
                    sine_continuous_observation(&s.theta, 1.0 - u * (1.0 - lower))
                }
                SineSupport::Lattice { indices } => {
                    let i = indices[rng.gen_range(0..indices.len())];
                    sine_lattice_observation(&s.theta, i)
                }
            },
            Instance::ThreeParam(p) => loop {
                let c: f64 = rng.gen_range(0.0..1.0);
                let t1: f64 = rng.gen_range(1.0..2.0);
                let t2: f64 = rng.gen_range(-2.0..-1.0);
                let (x, y) = (c * t1, c * t2);
                let sum = x + y;
                if c == 0.0 || sum == 0.0 {
                    continue;
                }
                let z = match p.label {
                    ThreeParamLabel::SineOfSum => (1.0 / sum).sin(),
                    ThreeParamLabel::RawSum => sum,
                };
                break Ok(Observation::unbounded(vec![x], vec![y], z));
            },
            Instance::Boolean(_) => {
                let table = self.boolean_table(task)?;
                let x = rng.gen_range(0..2u8);
                let y = rng.gen_range(0..2u8);
                Ok(boolean_observation(table, x, y))
            }
            Instance::Subspace(s) => {
                let x: f64 = rng.gen_range(-1.0..=1.0);
                let y: Vec<f64> = s.v.iter().zip(&s.y0).map(|(v, y0)| x * v + y0).collect();
                let z = s.label.eval(&[x], &y);
                Observation::new(vec![x], y, z)
            }
            Instance::Separable(s) => {
                let x: f64 = rng.gen();
                let y = s.eval(x);
                Observation::new(vec![x], vec![y], sign_label(x - y))
            }
        }
    }

    /// The exact law of task `task` as `(probability, observation)` pairs,
    /// when it has finite support.
    pub fn finite_support(&self, task: usize) -> Result<Option<Vec<(f64, Observation)>>> {
        match self {
            Instance::Sine(SineInstance {
                theta,
                support: SineSupport::Lattice { indices },
            }) => {
                let p = 1.0 / indices.len() as f64;
                let obs = indices
                    .iter()
                    .map(|&i| sine_lattice_observation(theta, i).map(|o| (p, o)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(obs))
            }
            Instance::Boolean(_) => {
                let table = self.boolean_table(task)?;
                Ok(Some(
                    [(0, 0), (1, 0), (0, 1), (1, 1)]
                        .iter()
                        .map(|&(x, y)| (0.25, boolean_observation(table, x, y)))
                        .collect(),
                ))
            }
            _ => Ok(None),
        }
    }

    pub fn sha256(&self) -> String {
        crate::data::hash_hex(
            serde_json::to_string(self)
                .expect("instances serialize")
                .as_bytes(),
        )
    }
}

fn task_stream(seed: &SeedSpec, kind: &str, t: usize) -> StreamRng {
    seed.child(kind).child(t).rng()
}

/// `T` task blocks of `n` i.i.d. observations. Task `t` reads its own stream.
pub fn draw_labeled(
    instance: &Instance,
    tasks: usize,
    n: usize,
    seed: &SeedSpec,
) -> Result<LabeledMultiSample> {
    if tasks == 0 || n == 0 {
        return Err(Error::InvalidInput(format!("counts T={tasks}, n={n}")));
    }
    instance.check_tasks(tasks)?;
    let blocks = par::try_map_indexed(tasks, |t| {
        let mut rng = task_stream(seed, "labeled", t);
        (0..n)
            .map(|_| instance.draw_observation(t, &mut rng))
            .collect::<Result<Vec<_>>>()
    })?;
    LabeledMultiSample::new(blocks)
}

/// `T` task blocks of `m` unlabeled pairs, from streams disjoint from the
/// labeled ones.
pub fn draw_unlabeled(
    instance: &Instance,
    tasks: usize,
    m: usize,
    seed: &SeedSpec,
) -> Result<UnlabeledMultiSample> {
    if tasks == 0 || m == 0 {
        return Err(Error::InvalidInput(format!("counts T={tasks}, m={m}")));
    }
    instance.check_tasks(tasks)?;
    let blocks = par::try_map_indexed(tasks, |t| {
        let mut rng = task_stream(seed, "unlabeled", t);
        (0..m)
            .map(|_| instance.draw_observation(t, &mut rng).map(|o| o.pair()))
            .collect::<Result<Vec<Pair>>>()
    })?;
    UnlabeledMultiSample::new(blocks)
}
