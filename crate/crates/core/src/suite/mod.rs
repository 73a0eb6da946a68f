//! Named verification checks grouped into suites, and the runner that
//! executes them and writes a result bundle.

mod bodies;
mod config;
mod gridops;
mod lattice;
mod multipliers;

pub use config::{
    BodiesConfig, GridopsConfig, LatticeConfig, MultipliersConfig, SuiteConfig, Tolerance, TrendsConfig,
};

use crate::report::{timed, ExperimentReport, SCHEMA_VERSION};
use crate::rng::derive_seed;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const SUITES: [&str; 5] = ["bodies", "multipliers", "gridops", "lattice", "all"];

/// A named check. Gating checks decide the exit status; non-gating ones only
/// record trends and must run to completion.
pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn suite(&self) -> &'static str;
    fn gating(&self) -> bool {
        true
    }
    /// Whether the check's slack is a Monte Carlo allowance of three
    /// standard errors, rescaled by the configured number of sigmas.
    fn monte_carlo(&self) -> bool {
        false
    }
    fn run(&self, cfg: &SuiteConfig) -> Result<ExperimentReport>;
}

type RunFn = fn(&SuiteConfig) -> Result<ExperimentReport>;

/// A check backed by a plain function.
pub struct FnCheck {
    pub name: &'static str,
    pub suite: &'static str,
    pub gating: bool,
    pub monte_carlo: bool,
    pub run: RunFn,
}

impl Check for FnCheck {
    fn name(&self) -> &'static str {
        self.name
    }
    fn suite(&self) -> &'static str {
        self.suite
    }
    fn gating(&self) -> bool {
        self.gating
    }
    fn monte_carlo(&self) -> bool {
        self.monte_carlo
    }
    fn run(&self, cfg: &SuiteConfig) -> Result<ExperimentReport> {
        (self.run)(cfg)
    }
}

pub(crate) const fn exact(name: &'static str, suite: &'static str, run: RunFn) -> FnCheck {
    FnCheck { name, suite, gating: true, monte_carlo: false, run }
}

pub(crate) const fn mc(name: &'static str, suite: &'static str, run: RunFn) -> FnCheck {
    FnCheck { name, suite, gating: true, monte_carlo: true, run }
}

pub(crate) const fn trend(name: &'static str, suite: &'static str, run: RunFn) -> FnCheck {
    FnCheck { name, suite, gating: false, monte_carlo: false, run }
}

pub struct CheckRegistry {
    checks: Vec<Box<dyn Check>>,
}

impl Default for CheckRegistry {
    fn default() -> Self {
        let mut r = CheckRegistry { checks: Vec::new() };
        for c in bodies::checks()
            .into_iter()
            .chain(multipliers::checks())
            .chain(gridops::checks())
            .chain(lattice::checks())
        {
            r.register(Box::new(c));
        }
        r
    }
}

impl CheckRegistry {
    pub fn empty() -> Self {
        CheckRegistry { checks: Vec::new() }
    }

    pub fn register(&mut self, check: Box<dyn Check>) {
        self.checks.push(check);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.checks.iter().map(|c| c.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Check> {
        self.checks.iter().find(|c| c.name() == name).map(|c| c.as_ref())
    }

    /// Checks of one suite in registration order; `all` selects every check.
    pub fn for_suite(&self, suite: &str) -> Result<Vec<&dyn Check>> {
        if !SUITES.contains(&suite) {
            return Err(Error::invalid(format!("unknown suite `{suite}`; expected one of {}", SUITES.join(", "))));
        }
        Ok(self
            .checks
            .iter()
            .filter(|c| suite == "all" || c.suite() == suite)
            .map(|c| c.as_ref())
            .collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub suite: String,
    pub gating: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ExperimentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteBundle {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub config: SuiteConfig,
    pub checks: Vec<CheckOutcome>,
}

/// Per-check seed, so adding a check never shifts the others' streams.
pub fn check_seed(seed: u64, name: &str) -> u64 {
    name.bytes().fold(derive_seed(seed, 0x7375), |s, b| derive_seed(s, b as u64))
}

pub fn run_check(check: &dyn Check, cfg: &SuiteConfig) -> CheckOutcome {
    let result = timed(|| check.run(cfg));
    let (report, error) = match result {
        Ok(mut rep) => {
            if check.monte_carlo() {
                rep.scale_slack(cfg.mc_factor());
            }
            if !check.gating() {
                rep.gating = false;
            }
            (Some(rep), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = error.is_none() && (!check.gating() || report.as_ref().is_some_and(|r| r.pass()));
    CheckOutcome {
        check: check.name().to_string(),
        suite: check.suite().to_string(),
        gating: check.gating(),
        pass,
        report,
        error,
    }
}

pub fn run_suite(registry: &CheckRegistry, suite: &str, cfg: &SuiteConfig) -> Result<SuiteBundle> {
    cfg.validate()?;
    let selected = registry.for_suite(suite)?;
    let mut checks: Vec<CheckOutcome> = selected.into_par_iter().map(|c| run_check(c, cfg)).collect();
    checks.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(SuiteBundle {
        schema: SCHEMA_VERSION,
        suite: suite.to_string(),
        seed: cfg.seed,
        pass: checks.iter().all(|c| c.pass),
        config: cfg.clone(),
        checks,
    })
}

impl SuiteBundle {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// One line per check.
    pub fn summary(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let status = match (&c.error, c.gating, c.pass) {
                    (Some(_), _, _) => "ERROR",
                    (None, false, _) => "TREND",
                    (None, true, true) => "PASS",
                    (None, true, false) => "FAIL",
                };
                let detail = match (&c.error, &c.report) {
                    (Some(e), _) => e.clone(),
                    (None, Some(r)) => {
                        let failed = r.failures().count();
                        format!("{} margins, {failed} failed, {:.2}s", r.margins.len(), r.wall_time)
                    }
                    (None, None) => String::new(),
                };
                format!("{status:5} {}/{}: {detail}", c.suite, c.check)
            })
            .collect()
    }

    /// Writes `suite-<name>.json` and `margins-<name>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("suite-{}.json", self.suite));
        std::fs::write(&json_path, serde_json::to_string_pretty(self)?)?;
        let csv_path = dir.join(format!("margins-{}.csv", self.suite));
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(["check", "inequality_id", "lhs", "rhs", "slack", "margin", "pass"])?;
        for c in &self.checks {
            let Some(r) = &c.report else { continue };
            for m in &r.margins {
                w.write_record([
                    c.check.clone(),
                    m.inequality_id.clone(),
                    m.lhs.to_string(),
                    m.rhs.to_string(),
                    m.slack.to_string(),
                    m.raw_margin().to_string(),
                    m.pass.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok((json_path, csv_path))
    }
}

/// Copies the margins, measurements, series and notes of `child` into
/// `parent`, prefixing ids with `prefix`. Margins of non-gating children are
/// dropped.
pub(crate) fn absorb(parent: &mut ExperimentReport, child: ExperimentReport, prefix: &str) {
    if child.gating {
        for mut m in child.margins {
            m.inequality_id = format!("{prefix}{}", m.inequality_id);
            parent.margins.push(m);
        }
    }
    for mut m in child.measurements {
        m.name = format!("{prefix}{}", m.name);
        parent.measurements.push(m);
    }
    for (name, points) in child.series {
        parent.series.entry(name).or_default().extend(points);
    }
    for n in child.notes {
        parent.notes.push(format!("{prefix}{n}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn failing(_: &SuiteConfig) -> Result<ExperimentReport> {
        let mut r = ExperimentReport::new("f", serde_json::json!({}), 0);
        r.check("x", 1.0, 0.5, 0.6);
        Ok(r)
    }

    fn erroring(_: &SuiteConfig) -> Result<ExperimentReport> {
        Err(Error::invalid("boom"))
    }

    #[test]
    fn registry_lists_every_suite() {
        let r = CheckRegistry::default();
        for s in ["bodies", "multipliers", "gridops", "lattice"] {
            assert!(!r.for_suite(s).unwrap().is_empty(), "{s}");
        }
        assert_eq!(r.for_suite("all").unwrap().len(), r.names().len());
        assert!(r.for_suite("nope").is_err());
        let mut names = r.names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), r.names().len());
    }

    #[test]
    fn mc_scaling_and_errors() {
        let mut reg = CheckRegistry::empty();
        reg.register(Box::new(mc("mc-check", "bodies", failing)));
        reg.register(Box::new(trend("trend-check", "bodies", erroring)));
        let cfg = SuiteConfig::default();
        let b = run_suite(&reg, "bodies", &cfg).unwrap();
        assert!(b.checks[0].pass);
        assert!(!b.checks[1].pass && b.checks[1].error.is_some());
        assert_eq!(b.exit_code(), 1);
        let strict = SuiteConfig::from_toml("[tolerance]\nmc_sigmas = 0.0").unwrap();
        let b = run_suite(&reg, "bodies", &strict).unwrap();
        assert!(!b.checks[0].pass);
        let dir = tempfile::tempdir().unwrap();
        let (j, c) = b.write(dir.path()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(std::fs::read_to_string(c).unwrap().contains("mc-check,x,"));
        assert_eq!(b.summary().len(), 2);
    }
}
