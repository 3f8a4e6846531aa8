//! Observations and multitask samples.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

const BALL_SLACK: f64 = 1e-12;

/// Exact companions of a point on the `16^i` lattice.
///
/// `x_recip` is `1/x` exactly. When the connection that produced `y` has an
/// exact parameter, `y_turns` holds `1/(2π·y)` exactly, so `sin(1/y)` can be
/// evaluated after exact range reduction even where `y` underflows as a float.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactCoords {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<u32>,
    #[serde(with = "rational::serde_str")]
    pub x_recip: Rational,
    #[serde(
        default,
        with = "rational::serde_str::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub y_turns: Option<Rational>,
}

#[derive(Clone, Copy, Debug)]
pub struct XView<'a> {
    pub x: &'a [f64],
    pub recip: Option<&'a Rational>,
    pub lattice: Option<u32>,
}

impl<'a> XView<'a> {
    pub fn plain(x: &'a [f64]) -> Self {
        XView {
            x,
            recip: None,
            lattice: None,
        }
    }

    pub fn scalar(&self) -> Result<f64> {
        match self.x {
            [v] => Ok(*v),
            _ => Err(Error::InvalidInput(format!(
                "expected scalar x, got dimension {}",
                self.x.len()
            ))),
        }
    }

    /// `1/x` as an exact rational, from the lattice value when known.
    pub fn exact_recip(&self) -> Result<Rational> {
        match self.recip {
            Some(r) => Ok(r.clone()),
            None => {
                let x = self.scalar()?;
                if x == 0.0 {
                    return Err(Error::Singularity("x = 0".into()));
                }
                Ok(rational::from_f64(x)?.recip())
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct YView<'a> {
    pub y: &'a [f64],
    pub turns: Option<&'a Rational>,
}

impl<'a> YView<'a> {
    pub fn plain(y: &'a [f64]) -> Self {
        YView { y, turns: None }
    }
}

/// Output of a connection: the float vector plus its exact turn count, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct YValue {
    pub y: Vec<f64>,
    pub turns: Option<Rational>,
}

impl YValue {
    pub fn plain(y: Vec<f64>) -> Self {
        YValue { y, turns: None }
    }

    pub fn view(&self) -> YView<'_> {
        YView {
            y: &self.y,
            turns: self.turns.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCoords>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} has non-finite entries"
        )))
    }
}

impl Observation {
    /// Checked constructor: finite entries, `x` and `y` inside their unit balls.
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: f64) -> Result<Self> {
        check_finite("x", &x)?;
        check_finite("y", &y)?;
        if !z.is_finite() {
            return Err(Error::InvalidInput("z is not finite".into()));
        }
        for (name, v) in [("x", &x), ("y", &y)] {
            if norm(v) > 1.0 + BALL_SLACK {
                return Err(Error::Domain(format!("{name} outside the unit ball")));
            }
        }
        Ok(Observation {
            x,
            y,
            z,
            exact: None,
        })
    }

    /// Constructor without the unit-ball check, for families whose raw
    /// coordinates leave the ball.
    pub fn unbounded(x: Vec<f64>, y: Vec<f64>, z: f64) -> Self {
        Observation {
            x,
            y,
            z,
            exact: None,
        }
    }

    pub fn with_exact(mut self, exact: ExactCoords) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn x_view(&self) -> XView<'_> {
        XView {
            x: &self.x,
            recip: self.exact.as_ref().map(|e| &e.x_recip),
            lattice: self.exact.as_ref().and_then(|e| e.lattice),
        }
    }

    pub fn y_view(&self) -> YView<'_> {
        YView {
            y: &self.y,
            turns: self.exact.as_ref().and_then(|e| e.y_turns.as_ref()),
        }
    }

    pub fn pair(&self) -> Pair {
        Pair {
            x: self.x.clone(),
            y: self.y.clone(),
            exact: self.exact.clone(),
        }
    }
}

/// An unlabeled `(x, y)` observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCoords>,
}

impl Pair {
    pub fn x_view(&self) -> XView<'_> {
        XView {
            x: &self.x,
            recip: self.exact.as_ref().map(|e| &e.x_recip),
            lattice: self.exact.as_ref().and_then(|e| e.lattice),
        }
    }

    pub fn y_view(&self) -> YView<'_> {
        YView {
            y: &self.y,
            turns: self.exact.as_ref().and_then(|e| e.y_turns.as_ref()),
        }
    }
}

fn check_blocks<T>(tasks: &[Vec<T>], what: &str) -> Result<usize> {
    let first = tasks
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("{what}: no task blocks")))?;
    let len = first.len();
    if len == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty task block")));
    }
    if tasks.iter().any(|b| b.len() != len) {
        return Err(Error::InvalidInput(format!(
            "{what}: task blocks differ in length"
        )));
    }
    Ok(len)
}

/// `T` task blocks of `n` labeled observations each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledMultiSample {
    tasks: Vec<Vec<Observation>>,
}

impl LabeledMultiSample {
    pub fn new(tasks: Vec<Vec<Observation>>) -> Result<Self> {
        check_blocks(&tasks, "labeled sample")?;
        Ok(LabeledMultiSample { tasks })
    }

    pub fn tasks(&self) -> &[Vec<Observation>] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &[Observation] {
        &self.tasks[t]
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn per_task(&self) -> usize {
        self.tasks[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.tasks.iter().flatten()
    }

    /// Drops the labels, keeping `(x, y)`.
    pub fn unlabeled(&self) -> UnlabeledMultiSample {
        UnlabeledMultiSample {
            tasks: self
                .tasks
                .iter()
                .map(|b| b.iter().map(Observation::pair).collect())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let q = self.tasks[0][0].x.len();
        let k = self.tasks[0][0].y.len();
        let mut out = csv_header(q, k, true);
        for (t, block) in self.tasks.iter().enumerate() {
            for (i, o) in block.iter().enumerate() {
                csv_row(&mut out, t, i, &o.x, &o.y, Some(o.z), o.exact.as_ref());
            }
        }
        out
    }

    pub fn sha256(&self) -> String {
        hash_hex(self.to_csv().as_bytes())
    }
}

/// `T` task blocks of `m` unlabeled pairs each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledMultiSample {
    tasks: Vec<Vec<Pair>>,
}

impl UnlabeledMultiSample {
    pub fn new(tasks: Vec<Vec<Pair>>) -> Result<Self> {
        check_blocks(&tasks, "unlabeled sample")?;
        Ok(UnlabeledMultiSample { tasks })
    }

    pub fn tasks(&self) -> &[Vec<Pair>] {
        &self.tasks
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn per_task(&self) -> usize {
        self.tasks[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pair> {
        self.tasks.iter().flatten()
    }

    pub fn to_csv(&self) -> String {
        let q = self.tasks[0][0].x.len();
        let k = self.tasks[0][0].y.len();
        let mut out = csv_header(q, k, false);
        for (t, block) in self.tasks.iter().enumerate() {
            for (i, p) in block.iter().enumerate() {
                csv_row(&mut out, t, i, &p.x, &p.y, None, p.exact.as_ref());
            }
        }
        out
    }

    pub fn sha256(&self) -> String {
        hash_hex(self.to_csv().as_bytes())
    }
}

fn csv_header(q: usize, k: usize, labeled: bool) -> String {
    let mut h = String::from("task,index");
    for j in 0..q {
        let _ = write!(h, ",x{j}");
    }
    for j in 0..k {
        let _ = write!(h, ",y{j}");
    }
    if labeled {
        h.push_str(",z");
    }
    h.push_str(",lattice\n");
    h
}

fn csv_row(
    out: &mut String,
    t: usize,
    i: usize,
    x: &[f64],
    y: &[f64],
    z: Option<f64>,
    exact: Option<&ExactCoords>,
) {
    let _ = write!(out, "{t},{i}");
    for v in x.iter().chain(y) {
        let _ = write!(out, ",{v}");
    }
    if let Some(z) = z {
        let _ = write!(out, ",{z}");
    }
    match exact.and_then(|e| e.lattice) {
        Some(l) => {
            let _ = writeln!(out, ",{l}");
        }
        None => out.push_str(",\n"),
    }
}

pub fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
