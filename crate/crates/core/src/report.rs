//! Serializable records of verification runs.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

/// One checked inequality `lhs <= rhs + slack`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Margin {
    pub inequality_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Margin {
    pub fn new(id: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        Margin {
            inequality_id: id.into(),
            lhs,
            rhs,
            slack,
            pass: holds(lhs, rhs, slack),
        }
    }

    /// `rhs + slack - lhs`; nonnegative iff the inequality holds.
    pub fn raw_margin(&self) -> f64 {
        self.rhs + self.slack - self.lhs
    }

    pub fn is_consistent(&self) -> bool {
        self.pass == holds(self.lhs, self.rhs, self.slack)
    }
}

fn holds(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub y: f64,
    pub std_error: f64,
    pub label: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub schema: u32,
    pub op_name: String,
    pub inputs: serde_json::Value,
    pub seed: u64,
    pub measurements: Vec<Measurement>,
    pub margins: Vec<Margin>,
    pub wall_time: f64,
    pub gating: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(op_name: impl Into<String>, inputs: serde_json::Value, seed: u64) -> Self {
        ExperimentReport {
            schema: SCHEMA_VERSION,
            op_name: op_name.into(),
            inputs,
            seed,
            measurements: Vec::new(),
            margins: Vec::new(),
            wall_time: 0.0,
            gating: true,
            series: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn non_gating(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64, std_error: f64) {
        self.measurements.push(Measurement {
            name: name.into(),
            value,
            std_error,
        });
    }

    pub fn check(&mut self, id: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> bool {
        let m = Margin::new(id, lhs, rhs, slack);
        let pass = m.pass;
        self.margins.push(m);
        pass
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn push_series(&mut self, name: &str, point: SeriesPoint) {
        self.series.entry(name.to_string()).or_default().push(point);
    }

    pub fn pass(&self) -> bool {
        self.margins.iter().all(|m| m.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Margin> {
        self.margins.iter().filter(|m| !m.pass)
    }

    /// Smallest `rhs + slack - lhs` over margins whose id starts with `prefix`.
    pub fn worst_margin(&self, prefix: &str) -> Option<f64> {
        self.margins
            .iter()
            .filter(|m| m.inequality_id.starts_with(prefix))
            .map(Margin::raw_margin)
            .min_by(f64::total_cmp)
    }

    pub fn measurement(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }

    /// Multiplies every slack by `factor` and recomputes the pass flags.
    pub fn scale_slack(&mut self, factor: f64) {
        for m in &mut self.margins {
            m.slack *= factor;
            m.pass = holds(m.lhs, m.rhs, m.slack);
        }
    }

    /// Every stored `pass` flag agrees with its recomputation.
    pub fn is_self_consistent(&self) -> bool {
        self.margins.iter().all(Margin::is_consistent)
    }
}

/// Times a closure and stores the elapsed seconds in the returned report.
pub fn timed<F>(f: F) -> crate::Result<ExperimentReport>
where
    F: FnOnce() -> crate::Result<ExperimentReport>,
{
    let start = Instant::now();
    let mut report = f()?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
