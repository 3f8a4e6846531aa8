//! Experiment summaries `{estimate, stderr, thresholds, pass}` and per-trial
//! CSV tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtLeast,
    AtMost,
    Equal,
    Within { tolerance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_least(name: &str, estimate: f64, threshold: f64) -> Self {
        Check::new(
            name,
            estimate,
            threshold,
            Comparison::AtLeast,
            estimate >= threshold,
        )
    }

    pub fn at_most(name: &str, estimate: f64, threshold: f64) -> Self {
        Check::new(
            name,
            estimate,
            threshold,
            Comparison::AtMost,
            estimate <= threshold,
        )
    }

    pub fn equal(name: &str, estimate: f64, threshold: f64) -> Self {
        Check::new(
            name,
            estimate,
            threshold,
            Comparison::Equal,
            estimate == threshold,
        )
    }

    /// `|estimate − threshold| ≤ tolerance`.
    pub fn within(name: &str, estimate: f64, threshold: f64, tolerance: f64) -> Self {
        Check::new(
            name,
            estimate,
            threshold,
            Comparison::Within { tolerance },
            (estimate - threshold).abs() <= tolerance,
        )
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    fn new(name: &str, estimate: f64, threshold: f64, comparison: Comparison, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            estimate,
            stderr: None,
            threshold,
            comparison,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub result: serde_json::Value,
}

impl Summary {
    pub fn new<T: Serialize>(experiment: &str, result: &T, checks: Vec<Check>) -> Result<Self> {
        Ok(Summary {
            experiment: experiment.to_string(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            result: serde_json::to_value(result)
                .map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries serialize")
    }
}

/// Flat rows as UTF-8 CSV with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        excess: f64,
        ok: bool,
    }

    #[test]
    fn csv_has_header() {
        let csv = to_csv(&[
            Row {
                trial: 0,
                excess: 0.5,
                ok: true,
            },
            Row {
                trial: 1,
                excess: 0.25,
                ok: false,
            },
        ])
        .unwrap();
        assert_eq!(csv, "trial,excess,ok\n0,0.5,true\n1,0.25,false\n");
    }

    #[test]
    fn summary_pass_is_conjunction() {
        let s = Summary::new(
            "x",
            &1.0,
            vec![
                Check::at_least("a", 1.0, 0.5),
                Check::at_most("b", 2.0, 1.0),
            ],
        )
        .unwrap();
        assert!(!s.pass);
        let back: Summary = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
