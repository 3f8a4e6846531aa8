//! Connection classes `G`, predictor classes `F` and the unimodal classes
//! used as baselines, with their ERM sub-oracles.

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::TAU;

use crate::data::{Observation, Pair, XView, YValue, YView};
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::par;
use crate::rational::{self, Rational};
use crate::shatter::{self, Sign, SignConvention};
use crate::theta::{sine_of_y, Theta};

/// A member of a connection class, mapping `x` to `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Connection {
    Scaling {
        theta: Theta,
    },
    SignedScaling {
        theta: f64,
    },
    BooleanMap {
        table: [u8; 2],
    },
    /// `y_j = Σ_d coeffs[d][j]·x^d`, projected onto the unit ball.
    Polynomial {
        coeffs: Vec<Vec<f64>>,
    },
}

fn bit(v: f64) -> Result<usize> {
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::InvalidInput(format!(
            "expected a Boolean value, got {v}"
        )))
    }
}

fn project_unit_ball(mut y: Vec<f64>) -> Vec<f64> {
    let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 1.0 {
        y.iter_mut().for_each(|a| *a /= norm);
    }
    y
}

impl Connection {
    pub fn apply(&self, x: XView<'_>) -> Result<YValue> {
        match self {
            Connection::Scaling { theta } => theta.apply(x),
            Connection::SignedScaling { theta } => Ok(YValue::plain(vec![theta * x.scalar()?])),
            Connection::BooleanMap { table } => {
                Ok(YValue::plain(vec![table[bit(x.scalar()?)?] as f64]))
            }
            Connection::Polynomial { coeffs } => {
                let x = x.scalar()?;
                let k = coeffs.first().map_or(0, Vec::len);
                let mut y = vec![0.0; k];
                let mut power = 1.0;
                for row in coeffs {
                    for (yj, c) in y.iter_mut().zip(row) {
                        *yj += c * power;
                    }
                    power *= x;
                }
                Ok(YValue::plain(project_unit_ball(y)))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualNorm {
    #[default]
    Euclidean,
    L1,
}

impl ResidualNorm {
    pub fn residual(self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(p, q)| p - q);
        match self {
            ResidualNorm::Euclidean => it.map(|d| d * d).sum::<f64>().sqrt(),
            ResidualNorm::L1 => it.map(f64::abs).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ConnectionClass {
    /// `{θx : θ ∈ (0, 1]}`.
    Scaling,
    /// `{θx : θ ∈ (−1, 0) ∪ (0, 1)}`.
    SignedScaling,
    /// All four maps `{0,1} → {0,1}`.
    BooleanMaps,
    /// Degree-`degree` polynomials, projected onto the unit ball.
    Polynomial {
        degree: usize,
    },
    Finite {
        members: Vec<Connection>,
    },
}

/// Outcome of a connection ERM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionFit {
    pub member: Connection,
    /// Mean residual `(1/N)·Σ‖g(x) − y‖` of `member`.
    pub objective: f64,
    /// False when the infimum is approached but not attained in the class.
    pub attained: bool,
    /// False when other minimizers exist (rank-deficient polynomial fits).
    pub unique: bool,
    /// True when `objective` is the exact class minimum; false for the
    /// least-squares surrogate, which only bounds it from above.
    pub exact: bool,
}

/// `|x|`-weighted median fit of `θ ∈ (0, 1]` minimizing `Σ|θx − y|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub theta: Theta,
    pub objective: f64,
    pub attained: bool,
}

/// Smallest weighted median: the first value whose cumulative weight reaches
/// half the total. Values must be sorted ascending.
fn lower_weighted_median(sorted: &[(f64, f64)]) -> f64 {
    let total: f64 = sorted.iter().map(|(_, w)| w).sum();
    let mut acc = 0.0;
    for &(v, w) in sorted {
        acc += w;
        if 2.0 * acc >= total {
            return v;
        }
    }
    sorted.last().map_or(f64::NAN, |p| p.0)
}

pub fn fit_scaling_lad(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidInput("non-finite pair".into()));
    }
    let mut ratios: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, _)| *x != 0.0)
        .map(|(x, y)| (y / x, x.abs()))
        .collect();
    if ratios.is_empty() {
        return Err(Error::Degenerate("every x is zero".into()));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let median = lower_weighted_median(&ratios);
    let (theta, attained) = if median > 1.0 {
        (1.0, true)
    } else if median <= 0.0 {
        (0.0, false)
    } else {
        (median, true)
    };
    let objective = pairs
        .iter()
        .map(|(x, y)| (theta * x - y).abs())
        .sum::<f64>()
        / pairs.len() as f64;
    Ok(ScalingFit {
        theta: Theta::Value(theta),
        objective,
        attained,
    })
}

/// Exact LAD fit for pairs whose `y` came from witness parameters: with
/// `x = 1/a` and `y = 1/(2π·t)`, each pair has ratio `y/x = 1/(2π·t/a)`, so
/// the weighted median runs over `c_i = t_i/a_i` in descending order with
/// exact weights `1/a_i`.
fn fit_scaling_lad_exact(pairs: &[&Pair]) -> Option<ScalingFit> {
    let mut items: Vec<(Rational, Rational)> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let e = p.exact.as_ref()?;
        let turns = e.y_turns.as_ref()?;
        if !e.x_recip.is_positive() || !turns.is_positive() {
            return None;
        }
        items.push((turns / &e.x_recip, e.x_recip.recip()));
    }
    // Descending c is ascending θ.
    items.sort_by(|a, b| b.0.cmp(&a.0));
    let total: Rational = items.iter().map(|(_, w)| w.clone()).sum();
    let mut acc = Rational::zero();
    let mut chosen = items.last()?.0.clone();
    for (c, w) in &items {
        acc += w;
        if &acc * Rational::from_integer(2.into()) >= total {
            chosen = c.clone();
            break;
        }
    }
    if rational::to_f64(&chosen) * TAU < 1.0 {
        return None;
    }
    // Σ (1/a_i)·|1/ĉ − 1/c_i| / 2π
    let inv = chosen.recip();
    let sum: Rational = items
        .iter()
        .map(|(c, w)| w * (&inv - c.recip()).abs())
        .sum();
    let objective = rational::to_f64(&sum) / TAU / pairs.len() as f64;
    Some(ScalingFit {
        theta: Theta::Witness(chosen),
        objective,
        attained: true,
    })
}

/// Majority table per input value; ties go to `0`, the smaller table.
/// Returns the table and the number of mismatches.
pub fn fit_boolean_table(pairs: &[(f64, f64)]) -> Result<([u8; 2], usize)> {
    let mut counts = [[0usize; 2]; 2];
    for &(x, y) in pairs {
        counts[bit(x)?][bit(y)?] += 1;
    }
    let mut best = ([0u8; 2], usize::MAX);
    for code in 0..4u8 {
        let table = [code >> 1, code & 1];
        let miss: usize = (0..2).map(|v| counts[v][1 - table[v] as usize]).sum();
        if miss < best.1 {
            best = (table, miss);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub coeffs: Vec<Vec<f64>>,
    pub unique: bool,
    pub rank: usize,
}

/// Minimum-norm least-squares polynomial fit of degree `degree`.
pub fn fit_polynomial_connection(
    pairs: &[(f64, Vec<f64>)],
    degree: usize,
) -> Result<PolynomialFit> {
    let m = pairs.len();
    if m == 0 {
        return Err(Error::Domain("no pairs".into()));
    }
    let k = pairs[0].1.len();
    if k == 0 || pairs.iter().any(|(_, y)| y.len() != k) {
        return Err(Error::InvalidInput("inconsistent output dimension".into()));
    }
    let cols = degree + 1;
    let v = DMatrix::from_fn(m, cols, |i, d| pairs[i].0.powi(d as i32));
    let y = DMatrix::from_fn(m, k, |i, j| pairs[i].1[j]);
    let svd = v.svd(true, true);
    let tol = f64::EPSILON * (m.max(cols) as f64) * svd.singular_values.max();
    let rank = svd.rank(tol);
    let sol = svd
        .solve(&y, tol)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let coeffs = (0..cols)
        .map(|d| (0..k).map(|j| sol[(d, j)]).collect())
        .collect();
    Ok(PolynomialFit {
        coeffs,
        unique: rank == cols,
        rank,
    })
}

fn mean_residual<'a>(
    g: &Connection,
    pairs: impl IntoIterator<Item = &'a Pair>,
    norm: ResidualNorm,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in pairs {
        let y = g.apply(p.x_view())?;
        sum += norm.residual(&y.y, &p.y);
        count += 1;
    }
    Ok(sum / count as f64)
}

fn scalar_pairs(pairs: &[&Pair]) -> Result<Vec<(f64, f64)>> {
    pairs
        .iter()
        .map(|p| Ok((XView::plain(&p.x).scalar()?, XView::plain(&p.y).scalar()?)))
        .collect()
}

/// Connection ERM: `argmin_g (1/N)·Σ‖g(x) − y‖` over the pooled pairs.
pub fn fit_connection(
    class: &ConnectionClass,
    pairs: &[&Pair],
    norm: ResidualNorm,
) -> Result<ConnectionFit> {
    if pairs.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    match class {
        ConnectionClass::Scaling => {
            let fit = match fit_scaling_lad_exact(pairs) {
                Some(f) => f,
                None => fit_scaling_lad(&scalar_pairs(pairs)?)?,
            };
            let member = Connection::Scaling {
                theta: match fit.theta {
                    Theta::Value(v) => Theta::Value(v.max(f64::MIN_POSITIVE)),
                    w => w,
                },
            };
            let objective = mean_residual(&member, pairs.iter().copied(), norm)?;
            Ok(ConnectionFit {
                member,
                objective,
                attained: fit.attained,
                unique: true,
                exact: true,
            })
        }
        ConnectionClass::SignedScaling => {
            let sp = scalar_pairs(pairs)?;
            let mut ratios: Vec<(f64, f64)> = sp
                .iter()
                .filter(|(x, _)| *x != 0.0)
                .map(|(x, y)| (y / x, x.abs()))
                .collect();
            if ratios.is_empty() {
                return Err(Error::Degenerate("every x is zero".into()));
            }
            ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
            let median = lower_weighted_median(&ratios);
            let clamped = median.clamp(-1.0, 1.0);
            let attained = clamped != 0.0 && clamped.abs() < 1.0;
            let member = Connection::SignedScaling { theta: clamped };
            let objective = mean_residual(&member, pairs.iter().copied(), norm)?;
            Ok(ConnectionFit {
                member,
                objective,
                attained,
                unique: true,
                exact: true,
            })
        }
        ConnectionClass::BooleanMaps => {
            let (table, _) = fit_boolean_table(&scalar_pairs(pairs)?)?;
            let member = Connection::BooleanMap { table };
            let objective = mean_residual(&member, pairs.iter().copied(), norm)?;
            Ok(ConnectionFit {
                member,
                objective,
                attained: true,
                unique: true,
                exact: true,
            })
        }
        ConnectionClass::Polynomial { degree } => {
            let pp = pairs
                .iter()
                .map(|p| Ok((XView::plain(&p.x).scalar()?, p.y.clone())))
                .collect::<Result<Vec<_>>>()?;
            let fit = fit_polynomial_connection(&pp, *degree)?;
            let member = Connection::Polynomial { coeffs: fit.coeffs };
            let objective = mean_residual(&member, pairs.iter().copied(), norm)?;
            Ok(ConnectionFit {
                member,
                exact: objective == 0.0,
                objective,
                attained: true,
                unique: fit.unique,
            })
        }
        ConnectionClass::Finite { members } => {
            let mut best: Option<(usize, f64)> = None;
            let mut ties = 0;
            for (i, g) in members.iter().enumerate() {
                let r = mean_residual(g, pairs.iter().copied(), norm)?;
                match best {
                    Some((_, b)) if r > b => {}
                    Some((_, b)) if r == b => ties += 1,
                    _ => {
                        best = Some((i, r));
                        ties = 0;
                    }
                }
            }
            let (i, objective) =
                best.ok_or_else(|| Error::Domain("finite class has no members".into()))?;
            Ok(ConnectionFit {
                member: members[i].clone(),
                objective,
                attained: true,
                unique: ties == 0,
                exact: true,
            })
        }
    }
}

/// A member of a predictor class, mapping `(x, y)` to a prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    /// `f(x, y) = sin(1/y)`.
    SingletonSine,
    /// `f(x, y) = table(y)`.
    BooleanLookup { table: [u8; 2] },
    /// `(p·v − c)/max(|p·v − c|, ε)` on `p = (x, y)`.
    SmoothedHyperplane {
        normal: Vec<f64>,
        offset: f64,
        eps: f64,
    },
    /// Arbitrary `[−1, 1]` values on a finite set of points `(x, y)`.
    Lookup {
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl Predictor {
    pub fn eval(&self, x: XView<'_>, y: YView<'_>) -> Result<f64> {
        match self {
            Predictor::SingletonSine => sine_of_y(y),
            Predictor::BooleanLookup { table } => {
                Ok(table[bit(XView::plain(y.y).scalar()?)?] as f64)
            }
            Predictor::SmoothedHyperplane {
                normal,
                offset,
                eps,
            } => {
                if normal.len() != x.x.len() + y.y.len() {
                    return Err(Error::InvalidInput("hyperplane dimension mismatch".into()));
                }
                let s: f64 = normal
                    .iter()
                    .zip(x.x.iter().chain(y.y))
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    - offset;
                Ok(s / s.abs().max(*eps))
            }
            Predictor::Lookup { points, values } => {
                let key: Vec<f64> = x.x.iter().chain(y.y).copied().collect();
                points
                    .iter()
                    .position(|p| *p == key)
                    .map(|i| values[i])
                    .ok_or_else(|| Error::InvalidInput("lookup predictor: unseen point".into()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PredictorClass {
    SingletonSine,
    BooleanLookup,
    SmoothedHyperplanes {
        eps: f64,
    },
    /// Every map from the sample points into `[−1, 1]`.
    SignComplete,
}

impl PredictorClass {
    /// Lipschitz constant on a support whose `|y|` is at least `y_min`.
    /// `None` when the class has no finite constant.
    pub fn effective_lipschitz(&self, y_min: f64) -> Option<f64> {
        match self {
            PredictorClass::SingletonSine => {
                (y_min > 0.0 && y_min.is_finite()).then(|| 1.0 / (y_min * y_min))
            }
            PredictorClass::BooleanLookup => Some(1.0),
            PredictorClass::SmoothedHyperplanes { eps } => Some(1.0 / eps),
            PredictorClass::SignComplete => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorFit {
    pub member: Predictor,
    pub objective: f64,
}

/// A labeled point with its `y` possibly replaced by a connection output.
#[derive(Clone, Copy, Debug)]
pub struct LabeledView<'a> {
    pub x: XView<'a>,
    pub y: YView<'a>,
    pub z: f64,
}

impl<'a> From<&'a Observation> for LabeledView<'a> {
    fn from(o: &'a Observation) -> Self {
        LabeledView {
            x: o.x_view(),
            y: o.y_view(),
            z: o.z,
        }
    }
}

pub fn predictor_objective(f: &Predictor, data: &[LabeledView<'_>], loss: &Loss) -> Result<f64> {
    let mut sum = 0.0;
    for d in data {
        sum += loss.eval(f.eval(d.x, d.y)?, d.z)?;
    }
    Ok(sum / data.len() as f64)
}

fn sign_of(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Pocket perceptron on `p = (x, y)` with targets `sign(z)`, returning a unit
/// normal and offset.
fn pocket_perceptron(points: &[Vec<f64>], targets: &[f64], epochs: usize) -> (Vec<f64>, f64) {
    let d = points[0].len();
    let mut w = vec![0.0; d + 1];
    let errors = |w: &[f64]| {
        points
            .iter()
            .zip(targets)
            .filter(|(p, t)| {
                let s: f64 = p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - w[d];
                sign_of(s) != **t
            })
            .count()
    };
    let mut best = (w.clone(), errors(&w));
    for _ in 0..epochs {
        if best.1 == 0 {
            break;
        }
        for (p, t) in points.iter().zip(targets) {
            let s: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - w[d];
            if sign_of(s) != *t {
                for (wi, pi) in w.iter_mut().zip(p) {
                    *wi += t * pi;
                }
                w[d] -= t;
                let e = errors(&w);
                if e < best.1 {
                    best = (w.clone(), e);
                }
            }
        }
    }
    let (w, _) = best;
    let norm = w[..d].iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut normal = vec![0.0; d];
        normal[0] = 1.0;
        return (normal, 0.0);
    }
    (w[..d].iter().map(|a| a / norm).collect(), w[d] / norm)
}

/// Per-task predictor ERM.
pub fn fit_predictor(
    class: &PredictorClass,
    data: &[LabeledView<'_>],
    loss: &Loss,
) -> Result<PredictorFit> {
    if data.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let member = match class {
        PredictorClass::SingletonSine => Predictor::SingletonSine,
        PredictorClass::BooleanLookup => {
            let mut best: Option<(Predictor, f64)> = None;
            for code in 0..4u8 {
                let f = Predictor::BooleanLookup {
                    table: [code >> 1, code & 1],
                };
                let obj = predictor_objective(&f, data, loss)?;
                if best.as_ref().is_none_or(|b| obj < b.1) {
                    best = Some((f, obj));
                }
            }
            let (member, objective) = best.expect("four tables");
            return Ok(PredictorFit { member, objective });
        }
        PredictorClass::SmoothedHyperplanes { eps } => {
            let points: Vec<Vec<f64>> = data
                .iter()
                .map(|d| d.x.x.iter().chain(d.y.y).copied().collect())
                .collect();
            let targets: Vec<f64> = data.iter().map(|d| sign_of(d.z)).collect();
            let (normal, offset) = pocket_perceptron(&points, &targets, 200);
            Predictor::SmoothedHyperplane {
                normal,
                offset,
                eps: *eps,
            }
        }
        PredictorClass::SignComplete => {
            let mut points: Vec<Vec<f64>> = Vec::new();
            let mut labels: Vec<Vec<f64>> = Vec::new();
            for d in data {
                let key: Vec<f64> = d.x.x.iter().chain(d.y.y).copied().collect();
                match points.iter().position(|p| *p == key) {
                    Some(i) => labels[i].push(d.z),
                    None => {
                        points.push(key);
                        labels.push(vec![d.z]);
                    }
                }
            }
            let values = labels
                .into_iter()
                .map(|mut zs| {
                    zs.sort_by(f64::total_cmp);
                    zs[(zs.len() - 1) / 2].clamp(-1.0, 1.0)
                })
                .collect();
            Predictor::Lookup { points, values }
        }
    };
    let objective = predictor_objective(&member, data, loss)?;
    Ok(PredictorFit { member, objective })
}

/// A function of `x` alone, predicting `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnimodalMember {
    /// `sin(1/(θx))`.
    ComposedSine {
        theta: Theta,
    },
    /// `θx`.
    Scaling {
        theta: Theta,
    },
    BooleanMap {
        table: [u8; 2],
    },
    /// `f(x, g(x))`.
    Composition {
        connection: Connection,
        predictor: Predictor,
    },
}

impl UnimodalMember {
    pub fn eval(&self, x: XView<'_>) -> Result<f64> {
        match self {
            UnimodalMember::ComposedSine { theta } => theta.compose_sine(x),
            UnimodalMember::Scaling { theta } => Ok(theta.apply(x)?.y[0]),
            UnimodalMember::BooleanMap { table } => Ok(table[bit(x.scalar()?)?] as f64),
            UnimodalMember::Composition {
                connection,
                predictor,
            } => {
                let y = connection.apply(x)?;
                predictor.eval(x, y.view())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum UnimodalClass {
    /// `{sin(1/(θx)) : θ ∈ (0, 1]}`.
    ComposedSine,
    /// `{θx : θ ∈ (0, 1]}`.
    Scaling,
    BooleanMaps,
    Singleton {
        member: UnimodalMember,
    },
}

/// Result of a 1-D grid search with golden-section refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub argmin: f64,
    pub value: f64,
    pub grid: usize,
    pub resolution: f64,
    pub evaluations: usize,
    /// Refined local minima `(θ, objective)` in ascending `θ`.
    pub local_minima: Vec<(f64, f64)>,
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd {
        (c, fc, iters + 2)
    } else {
        (d, fd, iters + 2)
    })
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        Ordering::Less => true,
        Ordering::Equal => a.0 < b.0,
        Ordering::Greater => false,
    }
}

/// Minimizes `f` over `θ ∈ (0, 1]`: grid `θ_j = j/grid`, then golden-section
/// refinement of up to `refine` of the best grid-local minima. Ties go to the
/// smaller `θ`.
pub fn grid_golden_minimize<F>(f: F, grid: usize, refine: usize) -> Result<GridSearch>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    if grid < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    let g = grid as f64;
    let values = par::try_map_indexed(grid, |j| f((j + 1) as f64 / g))?;
    let mut minima: Vec<usize> = (0..grid)
        .filter(|&j| {
            let left = if j > 0 { values[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < grid {
                values[j + 1]
            } else {
                f64::INFINITY
            };
            values[j] <= left && values[j] <= right
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(refine);
    let refined = par::try_map_indexed(minima.len(), |r| {
        let j = minima[r];
        let lo = j as f64 / g;
        let hi = ((j + 2) as f64 / g).min(1.0);
        let (t, v, evals) = golden_section(&f, lo.max(f64::MIN_POSITIVE), hi, 60)?;
        let grid_pt = ((j + 1) as f64 / g, values[j]);
        Ok((
            if better((t, v), grid_pt) {
                (t, v)
            } else {
                grid_pt
            },
            evals,
        ))
    })?;
    let mut best = (1.0 / g, values[0]);
    for (j, &v) in values.iter().enumerate() {
        if better(((j + 1) as f64 / g, v), best) {
            best = ((j + 1) as f64 / g, v);
        }
    }
    let mut evaluations = grid;
    let mut local_minima = Vec::with_capacity(refined.len());
    for (pt, evals) in refined {
        evaluations += evals;
        if better(pt, best) {
            best = pt;
        }
        local_minima.push(pt);
    }
    local_minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GridSearch {
        argmin: best.0,
        value: best.1,
        grid,
        resolution: 1.0 / g,
        evaluations,
        local_minima,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodalFit {
    pub member: UnimodalMember,
    pub objective: f64,
    /// Grid spacing of the 1-D search, when one ran.
    pub resolution: Option<f64>,
    pub evaluations: usize,
}

pub fn unimodal_objective(
    member: &UnimodalMember,
    data: &[Observation],
    loss: &Loss,
) -> Result<f64> {
    let mut sum = 0.0;
    for o in data {
        sum += loss.eval(member.eval(o.x_view())?, o.z)?;
    }
    Ok(sum / data.len() as f64)
}

/// Sign-pattern witnesses for lattice data: the exact parameter realizing
/// `sign(z)` on the distinct lattice indices of the sample.
pub fn lattice_witness_candidate(data: &[Observation]) -> Option<Theta> {
    let mut by_index: Vec<(u32, f64)> = Vec::new();
    for o in data {
        let i = o.exact.as_ref()?.lattice?;
        match by_index.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += o.z,
            None => by_index.push((i, o.z)),
        }
    }
    let indices: Vec<u32> = by_index.iter().map(|e| e.0).collect();
    let signs: Vec<Sign> = by_index.iter().map(|e| Sign::of(e.1)).collect();
    shatter::construct_on(&indices, &signs, SignConvention::SineSign)
        .ok()
        .map(|c| c.theta())
}

pub const DEFAULT_GRID: usize = 100_000;
const REFINE: usize = 16;

/// Unimodal ERM `argmin_g (1/n)·Σ ℓ(g(x), z)`. One-parameter classes use
/// the grid search; `extra` members are compared as well, so the result is
/// never worse than any of them.
pub fn fit_unimodal(
    class: &UnimodalClass,
    data: &[Observation],
    loss: &Loss,
    grid: usize,
    extra: &[UnimodalMember],
) -> Result<UnimodalFit> {
    if data.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut evaluations = 0;
    for c in extra {
        evaluations += 1;
        if unimodal_objective(c, data, loss)? == 0.0 {
            return Ok(UnimodalFit {
                member: c.clone(),
                objective: 0.0,
                resolution: None,
                evaluations,
            });
        }
    }
    let mut candidates: Vec<UnimodalMember> = Vec::new();
    let mut resolution = None;
    match class {
        UnimodalClass::Singleton { member } => candidates.push(member.clone()),
        UnimodalClass::BooleanMaps => {
            for code in 0..4u8 {
                candidates.push(UnimodalMember::BooleanMap {
                    table: [code >> 1, code & 1],
                });
            }
        }
        UnimodalClass::ComposedSine | UnimodalClass::Scaling => {
            let xs: Vec<f64> = data
                .iter()
                .map(|o| o.x_view().scalar())
                .collect::<Result<_>>()?;
            let sine = matches!(class, UnimodalClass::ComposedSine);
            let objective = |t: f64| -> Result<f64> {
                let mut sum = 0.0;
                for (x, o) in xs.iter().zip(data) {
                    let y = t * x;
                    let p = if sine {
                        if y == 0.0 {
                            return Err(Error::Singularity(format!("sin(1/y) at x = {x}")));
                        }
                        (1.0 / y).sin()
                    } else {
                        y
                    };
                    sum += loss.eval(p, o.z)?;
                }
                Ok(sum / xs.len() as f64)
            };
            let search = grid_golden_minimize(objective, grid, REFINE)?;
            resolution = Some(search.resolution);
            evaluations += search.evaluations;
            let theta = Theta::Value(search.argmin);
            if sine {
                candidates.push(UnimodalMember::ComposedSine { theta });
                if let Some(w) = lattice_witness_candidate(data) {
                    candidates.push(UnimodalMember::ComposedSine { theta: w });
                }
            } else {
                candidates.push(UnimodalMember::Scaling { theta });
                let pairs: Vec<(f64, f64)> = xs.iter().zip(data).map(|(x, o)| (*x, o.z)).collect();
                if let Ok(f) = fit_scaling_lad(&pairs) {
                    if f.attained {
                        candidates.push(UnimodalMember::Scaling { theta: f.theta });
                    }
                }
            }
        }
    }
    candidates.extend(extra.iter().cloned());
    let mut best: Option<(UnimodalMember, f64)> = None;
    for c in candidates {
        let obj = unimodal_objective(&c, data, loss)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|b| obj < b.1) {
            best = Some((c, obj));
        }
    }
    let (member, objective) = best.expect("at least one candidate");
    Ok(UnimodalFit {
        member,
        objective,
        resolution,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ExactCoords;
    use proptest::prelude::*;

    fn pair(x: f64, y: f64) -> Pair {
        Pair {
            x: vec![x],
            y: vec![y],
            exact: None,
        }
    }

    #[test]
    fn connection_and_predictor_examples() {
        let g = Connection::Scaling {
            theta: Theta::Value(0.5),
        };
        assert_eq!(g.apply(XView::plain(&[0.8])).unwrap().y, vec![0.4]);
        let s = Predictor::SingletonSine
            .eval(
                XView::plain(&[0.3]),
                YView::plain(&[2.0 / std::f64::consts::PI]),
            )
            .unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        let h = Predictor::SmoothedHyperplane {
            normal: vec![1.0, 0.0],
            offset: 0.0,
            eps: 0.1,
        };
        assert_eq!(
            h.eval(XView::plain(&[0.05]), YView::plain(&[0.7])).unwrap(),
            0.5
        );
        assert!(matches!(
            Predictor::SingletonSine.eval(XView::plain(&[0.3]), YView::plain(&[0.0])),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn scaling_lad_examples() {
        let f = fit_scaling_lad(&[(1.0, 0.3), (2.0, 0.6), (4.0, 1.2)]).unwrap();
        assert_eq!(f.theta, Theta::Value(0.3));
        let f = fit_scaling_lad(&[(1.0, 0.2), (1.0, 0.4), (1.0, 0.9)]).unwrap();
        assert_eq!(f.theta, Theta::Value(0.4));
        let f = fit_scaling_lad(&[(1.0, 0.5)]).unwrap();
        assert_eq!(f.theta, Theta::Value(0.5));
        assert!(matches!(
            fit_scaling_lad(&[(0.0, 0.5)]),
            Err(Error::Degenerate(_))
        ));
        let f = fit_scaling_lad(&[(1.0, -0.5)]).unwrap();
        assert!(!f.attained);
        // Even split: smallest minimizer.
        let f = fit_scaling_lad(&[(1.0, 0.2), (1.0, 0.6)]).unwrap();
        assert_eq!(f.theta, Theta::Value(0.2));
    }

    #[test]
    fn scaling_lad_matches_brute_force_grid() {
        let pairs = [(1.0, 0.2), (1.0, 0.4), (1.0, 0.9)];
        let obj = |t: f64| pairs.iter().map(|(x, y)| (t * x - y).abs()).sum::<f64>();
        let mut best = (0.0, f64::INFINITY);
        for j in 1..=10_000 {
            let t = j as f64 * 1e-4;
            if obj(t) < best.1 - 1e-12 {
                best = (t, obj(t));
            }
        }
        assert!((best.0 - 0.4).abs() < 1e-9);
    }

    #[test]
    fn exact_lad_recovers_witness() {
        let c = Rational::new(681.into(), 2.into());
        let theta = Theta::Witness(c.clone());
        let pairs: Vec<Pair> = [1u32, 2, 5]
            .iter()
            .map(|&i| {
                let o = crate::instances::sine_lattice_observation(&theta, i).unwrap();
                o.pair()
            })
            .collect();
        let refs: Vec<&Pair> = pairs.iter().collect();
        let fit =
            fit_connection(&ConnectionClass::Scaling, &refs, ResidualNorm::Euclidean).unwrap();
        assert_eq!(fit.member, Connection::Scaling { theta });
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn boolean_fits() {
        let (t, miss) = fit_boolean_table(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!((t, miss), ([0, 1], 0));
        let (t, miss) = fit_boolean_table(&[(0.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!((t, miss), ([0, 0], 1));
        let ps = [pair(0.0, 0.0), pair(0.0, 1.0)];
        let refs: Vec<&Pair> = ps.iter().collect();
        let fit = fit_connection(
            &ConnectionClass::BooleanMaps,
            &refs,
            ResidualNorm::Euclidean,
        )
        .unwrap();
        assert_eq!(fit.objective, 0.5);
        assert!(fit_boolean_table(&[(0.5, 0.0)]).is_err());
    }

    #[test]
    fn polynomial_recovers_line() {
        let v = [0.3, -0.2, 0.1];
        let y0 = [0.1, 0.2, -0.3];
        let pairs: Vec<(f64, Vec<f64>)> = [-0.9, -0.2, 0.4, 0.8]
            .iter()
            .map(|&x| (x, v.iter().zip(&y0).map(|(a, b)| x * a + b).collect()))
            .collect();
        let fit = fit_polynomial_connection(&pairs, 1).unwrap();
        assert!(fit.unique);
        for j in 0..3 {
            assert!((fit.coeffs[0][j] - y0[j]).abs() < 1e-10);
            assert!((fit.coeffs[1][j] - v[j]).abs() < 1e-10);
        }
        let short = fit_polynomial_connection(&pairs[..1], 1).unwrap();
        assert!(!short.unique);
    }

    #[test]
    fn polynomial_output_is_projected() {
        let g = Connection::Polynomial {
            coeffs: vec![vec![3.0, 4.0]],
        };
        let y = g.apply(XView::plain(&[0.5])).unwrap().y;
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unimodal_examples() {
        let data: Vec<Observation> = [0.2, 0.5, 0.9]
            .iter()
            .map(|&x| Observation::new(vec![x], vec![0.0], 0.3 * x).unwrap())
            .collect();
        let fit =
            fit_unimodal(&UnimodalClass::Scaling, &data, &Loss::clipped(), 1000, &[]).unwrap();
        assert_eq!(
            fit.member,
            UnimodalMember::Scaling {
                theta: Theta::Value(0.3)
            }
        );
        let single = UnimodalMember::BooleanMap { table: [1, 0] };
        let fit = fit_unimodal(
            &UnimodalClass::Singleton {
                member: single.clone(),
            },
            &[Observation::unbounded(vec![0.0], vec![0.0], 1.0)],
            &Loss::clipped(),
            1000,
            &[],
        )
        .unwrap();
        assert_eq!(fit.member, single);
    }

    #[test]
    fn grid_search_finds_quadratic_minimum() {
        let s = grid_golden_minimize(|t| Ok((t - 0.123456789).powi(2)), 1000, 4).unwrap();
        assert!((s.argmin - 0.123456789).abs() < 1e-7);
        assert_eq!(s.resolution, 1e-3);
    }

    #[test]
    fn lipschitz_declarations() {
        assert_eq!(
            PredictorClass::SingletonSine.effective_lipschitz(0.5),
            Some(4.0)
        );
        assert_eq!(
            PredictorClass::SmoothedHyperplanes { eps: 0.1 }.effective_lipschitz(0.0),
            Some(10.0)
        );
        assert_eq!(PredictorClass::SingletonSine.effective_lipschitz(0.0), None);
    }

    #[test]
    fn lattice_witness_from_labels() {
        let data: Vec<Observation> = [(1u32, 0.9), (3, -0.4), (7, 0.2)]
            .iter()
            .map(|&(i, z)| {
                Observation::new(vec![1.0], vec![0.5], z)
                    .unwrap()
                    .with_exact(ExactCoords {
                        lattice: Some(i),
                        x_recip: rational::lattice_recip(i),
                        y_turns: None,
                    })
            })
            .collect();
        let theta = lattice_witness_candidate(&data).unwrap();
        let m = UnimodalMember::ComposedSine { theta };
        for o in &data {
            let p = m.eval(o.x_view()).unwrap();
            assert_eq!(Sign::of(p), Sign::of(o.z));
            assert!(p.abs() >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn lad_beats_random_thetas(
            xs in proptest::collection::vec(0.05f64..1.0, 1..12),
            ys in proptest::collection::vec(-1.0f64..1.0, 12),
            probes in proptest::collection::vec(1e-6f64..=1.0, 200),
        ) {
            let pairs: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(x, y)| (*x, *y)).collect();
            let fit = fit_scaling_lad(&pairs).unwrap();
            let obj = |t: f64| pairs.iter().map(|(x, y)| (t * x - y).abs()).sum::<f64>() / pairs.len() as f64;
            for t in probes {
                prop_assert!(fit.objective <= obj(t) + 1e-12);
            }
        }

        #[test]
        fn boolean_fit_is_exhaustive_minimum(bits in proptest::collection::vec((0u8..2, 0u8..2), 1..30)) {
            let pairs: Vec<(f64, f64)> = bits.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
            let (_, miss) = fit_boolean_table(&pairs).unwrap();
            let brute = (0..4u8).map(|code| {
                let t = [code >> 1, code & 1];
                bits.iter().filter(|&&(x, y)| t[x as usize] != y).count()
            }).min().unwrap();
            prop_assert_eq!(miss, brute);
        }

        #[test]
        fn smoothed_hyperplane_is_lipschitz(
            a in proptest::collection::vec(-1.0f64..1.0, 3),
            b in proptest::collection::vec(-1.0f64..1.0, 3),
            eps in 0.01f64..0.5,
        ) {
            let h = Predictor::SmoothedHyperplane { normal: vec![0.6, 0.0, 0.8], offset: 0.1, eps };
            let fa = h.eval(XView::plain(&a[..1]), YView::plain(&a[1..])).unwrap();
            let fb = h.eval(XView::plain(&b[..1]), YView::plain(&b[1..])).unwrap();
            let d = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            prop_assert!((fa - fb).abs() <= d / eps + 1e-12);
            prop_assert!(fa.abs() <= 1.0);
        }
    }
}
