//! Tidy `(x, y, std_error, label)` tables extracted from report bundles.

use crate::report::{SeriesPoint, SCHEMA_VERSION};
use crate::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;

/// Named plot kinds and the series they draw from. Any other series name
/// present in a bundle is accepted verbatim.
pub const PLOT_KINDS: [(&str, &str); 6] = [
    ("multiplier-decay", "multiplier-decay"),
    ("lattice-ratio", "lattice-ratio"),
    ("ellipsoid-lower-bound", "ellipsoid-"),
    ("symbol-sum", "symbol-sum"),
    ("weak11-trend", "weak11-trend"),
    ("conjectural-constants", "conjectural-c"),
];

#[derive(Clone, Debug, Serialize)]
pub struct PlotTable {
    pub schema: u32,
    pub kind: String,
    pub rows: Vec<SeriesPoint>,
}

impl PlotTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["x", "y", "std_error", "label"])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn collect_series(node: &Value, out: &mut BTreeMap<String, Vec<SeriesPoint>>) -> Result<()> {
    if let Some(series) = node.get("series").and_then(Value::as_object) {
        for (name, points) in series {
            let points: Vec<SeriesPoint> = serde_json::from_value(points.clone())?;
            out.entry(name.clone()).or_default().extend(points);
        }
    }
    Ok(())
}

/// Every series in a suite bundle, or in a single report.
pub fn bundle_series(bundle: &Value) -> Result<BTreeMap<String, Vec<SeriesPoint>>> {
    let mut out = BTreeMap::new();
    match bundle.get("checks").and_then(Value::as_array) {
        Some(checks) => {
            for c in checks {
                if let Some(r) = c.get("report") {
                    collect_series(r, &mut out)?;
                }
            }
        }
        None => collect_series(bundle, &mut out)?,
    }
    Ok(out)
}

pub fn emit_plot_data(bundle: &Value, kind: &str) -> Result<PlotTable> {
    let series = bundle_series(bundle)?;
    if series.is_empty() {
        return Err(Error::invalid("bundle contains no series"));
    }
    let selected: Vec<(&String, &Vec<SeriesPoint>)> = match PLOT_KINDS.iter().find(|(k, _)| *k == kind) {
        Some((_, prefix)) => series.iter().filter(|(n, _)| n.starts_with(prefix)).collect(),
        None => series.iter().filter(|(n, _)| n.as_str() == kind).collect(),
    };
    if selected.is_empty() {
        return Err(Error::MissingSeries {
            requested: kind.to_string(),
            available: series.keys().cloned().collect(),
        });
    }
    let multi = selected.len() > 1;
    let rows = selected
        .into_iter()
        .flat_map(|(name, points)| {
            points.iter().map(move |p| {
                let mut p = p.clone();
                if multi {
                    p.label = if p.label.is_empty() { name.clone() } else { format!("{name} {}", p.label) };
                }
                p
            })
        })
        .collect();
    Ok(PlotTable {
        schema: SCHEMA_VERSION,
        kind: kind.to_string(),
        rows,
    })
}
