//! Exact construction of sine parameters that realize any sign pattern on the
//! lattice `x_i = 1/(1 + 16^{-i})`.
//!
//! For target signs `δ` the scale is
//!
//! ```text
//! c = 1/2 + Σ_i (1 + δ_i/4)·16^i,        θ = 1/(2πc)
//! ```
//!
//! and `frac(c·a_i)` (with `a_i = 1/x_i = 1 + 16^{-i}`) lands in
//! `1/2 + δ_i·[1/8, 3/8]`, which puts `2π·frac` inside `[π/4, 3π/4]` or
//! `[5π/4, 7π/4]`. All of `c`, `a_i` and the fractional parts are exact
//! rationals; only the final sine is a float.
//!
//! The interval for `δ_i = +1` is `[5/8, 7/8]`, where the sine is negative.
//! [`SignConvention::SineSign`] flips the signs before applying the formula so
//! that `sign(sin(2π·c·a_i)) = δ_i`; [`SignConvention::Paper`] applies them
//! verbatim. Every entry records the realized sine sign either way.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::theta::Theta;

pub use crate::rational::frac_exact;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Parses a string of `+`/`-` characters.
    pub fn parse_pattern(s: &str) -> Result<Vec<Sign>> {
        s.chars()
            .map(|ch| match ch {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(Error::InvalidInput(format!("bad sign character {other:?}"))),
            })
            .collect()
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be ±1, got {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `c_i = δ_i/4` verbatim.
    Paper,
    /// `c_i = −δ_i/4`, so that the sine at `x_i` has sign `δ_i`.
    #[default]
    SineSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterEntry {
    pub index: u32,
    pub target: Sign,
    /// Sign entering `c_i = applied/4`.
    pub applied: Sign,
    #[serde(with = "rational::serde_str")]
    pub a: Rational,
    #[serde(with = "rational::serde_str")]
    pub frac: Rational,
    #[serde(with = "rational::serde_str")]
    pub interval_lo: Rational,
    #[serde(with = "rational::serde_str")]
    pub interval_hi: Rational,
    pub in_interval: bool,
    pub sine: f64,
    pub realized: Sign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterCertificate {
    pub n: usize,
    pub convention: SignConvention,
    pub signs: Vec<Sign>,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    /// `2πc` as a float (infinite once `c` exceeds the float range).
    pub b: f64,
    pub entries: Vec<ShatterEntry>,
}

fn quarter() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(4))
}

fn eighths(k: i32) -> Rational {
    Rational::new(BigInt::from(k), BigInt::from(8))
}

/// Certified interval for `frac(c·a_i)` given the applied sign.
pub fn certified_interval(applied: Sign) -> (Rational, Rational) {
    match applied {
        Sign::Plus => (eighths(5), eighths(7)),
        Sign::Minus => (eighths(1), eighths(3)),
    }
}

/// `c = 1/2 + Σ (1 + s_j/4)·16^{i_j}` over the given indices.
pub fn scale_for(indices: &[u32], applied: &[Sign]) -> Rational {
    let mut c = Rational::new(BigInt::one(), BigInt::from(2));
    for (&i, &s) in indices.iter().zip(applied) {
        let coeff = match s {
            Sign::Plus => Rational::one() + quarter(),
            Sign::Minus => Rational::one() - quarter(),
        };
        c += coeff * Rational::from_integer(rational::pow16(i));
    }
    c
}

/// Construction on `x_1, …, x_n` for the given signs.
pub fn construct(signs: &[Sign], convention: SignConvention) -> Result<ShatterCertificate> {
    let indices: Vec<u32> = (1..=signs.len() as u32).collect();
    construct_on(&indices, signs, convention)
}

/// Construction on an arbitrary set of distinct lattice indices. Indices not
/// listed contribute nothing to `c`.
pub fn construct_on(
    indices: &[u32],
    signs: &[Sign],
    convention: SignConvention,
) -> Result<ShatterCertificate> {
    if signs.is_empty() {
        return Err(Error::InvalidInput("at least one sign required".into()));
    }
    if indices.len() != signs.len() {
        return Err(Error::InvalidInput(format!(
            "{} indices for {} signs",
            indices.len(),
            signs.len()
        )));
    }
    if indices.contains(&0) {
        return Err(Error::Domain("lattice indices start at 1".into()));
    }
    let distinct: BTreeSet<u32> = indices.iter().copied().collect();
    if distinct.len() != indices.len() {
        return Err(Error::Domain("duplicate lattice index".into()));
    }

    let applied: Vec<Sign> = match convention {
        SignConvention::Paper => signs.to_vec(),
        SignConvention::SineSign => signs.iter().map(|s| s.flip()).collect(),
    };
    let c = scale_for(indices, &applied);
    let entries = indices
        .iter()
        .zip(signs)
        .zip(&applied)
        .map(|((&index, &target), &applied)| {
            let a = rational::lattice_recip(index);
            let frac = frac_exact(&c, &a);
            let (lo, hi) = certified_interval(applied);
            let in_interval = frac >= lo && frac <= hi;
            let sine = (TAU * rational::to_f64(&frac)).sin();
            ShatterEntry {
                index,
                target,
                applied,
                a,
                frac,
                interval_lo: lo,
                interval_hi: hi,
                in_interval,
                sine,
                realized: Sign::of(sine),
            }
        })
        .collect();

    Ok(ShatterCertificate {
        n: signs.len(),
        convention,
        signs: signs.to_vec(),
        b: TAU * rational::to_f64(&c),
        c,
        entries,
    })
}

impl ShatterCertificate {
    /// `θ = 1/(2πc)` as a float; lies in `(0, 1]` because `c ≥ 1`.
    pub fn witness_theta(&self) -> f64 {
        self.theta().value()
    }

    /// The exact parameter `θ = 1/(2πc)`.
    pub fn theta(&self) -> Theta {
        Theta::Witness(self.c.clone())
    }

    /// Re-derives every entry from `c` and checks the certificate's claims:
    /// the closed form of `c`, exact interval membership, and
    /// `|sin| ≥ √2/2 − 1e-12`.
    pub fn verify(&self) -> bool {
        let indices: Vec<u32> = self.entries.iter().map(|e| e.index).collect();
        let applied: Vec<Sign> = self.entries.iter().map(|e| e.applied).collect();
        if scale_for(&indices, &applied) != self.c || self.c < Rational::one() {
            return false;
        }
        if rational::frac(&self.c) != Rational::new(BigInt::one(), BigInt::from(2)) {
            return false;
        }
        self.entries.iter().all(|e| {
            let frac = frac_exact(&self.c, &rational::lattice_recip(e.index));
            let (lo, hi) = certified_interval(e.applied);
            frac == e.frac && frac >= lo && frac <= hi && e.sine.abs() >= FRAC_1_SQRT_2 - 1e-12
        })
    }

    /// Entries whose realized sine sign equals the requested sign.
    pub fn matches_targets(&self) -> bool {
        self.entries.iter().all(|e| e.realized == e.target)
    }

    /// Per-index table.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("index,target,applied,a,frac,frac_value,interval_lo,interval_hi,in_interval,sine,realized\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                e.index,
                i8::from(e.target),
                i8::from(e.applied),
                rational::format(&e.a),
                rational::format(&e.frac),
                rational::to_f64(&e.frac),
                rational::format(&e.interval_lo),
                rational::format(&e.interval_hi),
                e.in_interval,
                e.sine,
                i8::from(e.realized)
            );
        }
        out
    }
}

/// Indices with duplicate-free support, helper for callers holding raw lists.
pub fn is_distinct(indices: &[u32]) -> bool {
    let set: BTreeSet<u32> = indices.iter().copied().collect();
    set.len() == indices.len() && !indices.iter().any(|i| i.is_zero())
}
