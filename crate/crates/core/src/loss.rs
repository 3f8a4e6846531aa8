use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `min(scale·|p − z|, 1)`, always in `[0, 1]`.
    ClippedAbsolute,
    /// `scale·|p − z|`; the caller keeps predictions and labels within
    /// unit distance.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
    pub scale: f64,
}

impl Default for Loss {
    fn default() -> Self {
        Loss::clipped()
    }
}

impl Loss {
    pub fn clipped() -> Self {
        Loss {
            kind: LossKind::ClippedAbsolute,
            scale: 1.0,
        }
    }

    pub fn absolute() -> Self {
        Loss {
            kind: LossKind::Absolute,
            scale: 1.0,
        }
    }

    pub fn new(kind: LossKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("loss scale {scale}")));
        }
        Ok(Loss { kind, scale })
    }

    pub fn eval(&self, prediction: f64, z: f64) -> Result<f64> {
        if !prediction.is_finite() || !z.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite loss argument ({prediction}, {z})"
            )));
        }
        let d = self.scale * (prediction - z).abs();
        Ok(match self.kind {
            LossKind::ClippedAbsolute => d.min(1.0),
            LossKind::Absolute => d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(Loss::clipped().eval(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(Loss::clipped().eval(1.0, -1.0).unwrap(), 1.0);
        assert_eq!(Loss::absolute().eval(0.25, 0.75).unwrap(), 0.5);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Loss::clipped().eval(f64::NAN, 0.0).is_err());
        assert!(Loss::absolute().eval(0.0, f64::INFINITY).is_err());
        assert!(Loss::new(LossKind::Absolute, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_ordered(p in -5.0f64..5.0, z in -5.0f64..5.0) {
            let c = Loss::clipped();
            let a = Loss::absolute();
            prop_assert_eq!(c.eval(p, z).unwrap(), c.eval(z, p).unwrap());
            prop_assert_eq!(a.eval(p, z).unwrap(), a.eval(z, p).unwrap());
            prop_assert!(c.eval(p, z).unwrap() <= a.eval(p, z).unwrap());
            prop_assert!((0.0..=1.0).contains(&c.eval(p, z).unwrap()));
        }

        #[test]
        fn one_lipschitz_in_prediction(p in -3.0f64..3.0, q in -3.0f64..3.0, z in -3.0f64..3.0) {
            for l in [Loss::clipped(), Loss::absolute()] {
                let d = (l.eval(p, z).unwrap() - l.eval(q, z).unwrap()).abs();
                prop_assert!(d <= (p - q).abs() + 1e-12);
            }
        }
    }
}
