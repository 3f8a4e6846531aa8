//! Scale parameter of the sine family.
//!
//! A parameter is either an ordinary float `θ`, or an exact witness `c` with
//! `θ = 1/(2πc)`. For witnesses `1/(θx) = 2π·c·(1/x)`, so the sine is taken
//! after reducing `c/x` modulo one in exact arithmetic. That is the only way
//! to evaluate the family meaningfully once `c` reaches `16^15` and beyond.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::TAU;

use crate::data::{XView, YValue, YView};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta {
    Value(f64),
    /// `θ = 1/(2πc)`.
    Witness(#[serde(with = "rational::serde_str")] Rational),
}

impl Theta {
    pub fn value(&self) -> f64 {
        match self {
            Theta::Value(v) => *v,
            Theta::Witness(c) => 1.0 / (TAU * rational::to_f64(c)),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Theta::Witness(_))
    }

    /// Checks `θ ∈ (0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Theta::Value(v) => v.is_finite() && *v > 0.0 && *v <= 1.0,
            // θ ≤ 1  ⇔  c ≥ 1/(2π); c ≥ 1/6 is sufficient and exact.
            Theta::Witness(c) => *c >= Rational::new(1.into(), 6.into()) || self.value() <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "theta {} outside (0, 1]",
                self.value()
            )))
        }
    }

    /// The scaling connection `x ↦ θx`.
    pub fn apply(&self, x: XView<'_>) -> Result<YValue> {
        match self {
            Theta::Value(t) => Ok(YValue::plain(vec![t * x.scalar()?])),
            Theta::Witness(c) => {
                let turns = c * x.exact_recip()?;
                let y = 1.0 / (TAU * rational::to_f64(&turns));
                Ok(YValue {
                    y: vec![if y.is_finite() { y } else { 0.0 }],
                    turns: Some(turns),
                })
            }
        }
    }

    /// `sin(1/(θx))`, evaluated as the singleton sine predictor on `θx`.
    pub fn compose_sine(&self, x: XView<'_>) -> Result<f64> {
        let y = self.apply(x)?;
        sine_of_y(y.view())
    }

    /// Orders by the value of `θ`, exactly when both sides are witnesses.
    pub fn cmp_value(&self, other: &Theta) -> Ordering {
        match (self, other) {
            (Theta::Witness(a), Theta::Witness(b)) => b.cmp(a),
            _ => self.value().total_cmp(&other.value()),
        }
    }
}

/// `sin(1/y)`, exact range reduction when `y` carries its turn count.
pub fn sine_of_y(y: YView<'_>) -> Result<f64> {
    if let Some(turns) = y.turns {
        return Ok(rational::sine_of_turns(turns));
    }
    let v = match y.y {
        [v] => *v,
        _ => {
            return Err(Error::InvalidInput(format!(
                "sine predictor expects scalar y, got dimension {}",
                y.y.len()
            )))
        }
    };
    if v == 0.0 || !v.is_finite() {
        return Err(Error::Singularity(format!("sin(1/y) at y = {v}")));
    }
    Ok((1.0 / v).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    #[test]
    fn witness_value() {
        let t = Theta::Witness(q(25, 2));
        assert!((t.value() - 1.0 / (25.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(t.validate().is_ok());
        assert!(Theta::Value(0.0).validate().is_err());
        assert!(Theta::Value(1.5).validate().is_err());
        assert!(Theta::Witness(q(1, 100)).validate().is_err());
    }

    #[test]
    fn witness_sine_matches_float_for_small_c() {
        let t = Theta::Witness(q(25, 2));
        let xs = [0.3, 0.77, 16.0 / 17.0];
        for x in xs {
            let exact = t.compose_sine(XView::plain(&[x])).unwrap();
            let float = (1.0 / (t.value() * x)).sin();
            assert!((exact - float).abs() < 1e-12, "{x}: {exact} vs {float}");
        }
    }

    #[test]
    fn lattice_witness_reduces_exactly() {
        // c = 25/2 at x_1 = 16/17: frac(25/2 · 17/16) = 9/32.
        let recip = rational::lattice_recip(1);
        let x = [16.0 / 17.0];
        let view = XView {
            x: &x,
            recip: Some(&recip),
            lattice: Some(1),
        };
        let s = Theta::Witness(q(25, 2)).compose_sine(view).unwrap();
        assert!((s - (TAU * 9.0 / 32.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn singularity_reported() {
        assert!(matches!(
            sine_of_y(YView::plain(&[0.0])),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn ordering() {
        let small = Theta::Witness(q(681, 2));
        let large = Theta::Witness(q(41, 2));
        assert_eq!(small.cmp_value(&large), Ordering::Less);
        assert_eq!(Theta::Value(0.5).cmp_value(&large), Ordering::Greater);
    }
}
