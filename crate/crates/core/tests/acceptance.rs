//! Acceptance criteria 1 to 12, one pass/fail line each.

use hlmax_core::suite::{run_check, CheckOutcome, CheckRegistry, SuiteConfig};
use std::process::ExitCode;
use std::time::Instant;

struct Criterion {
    id: u32,
    title: &'static str,
    checks: &'static [&'static str],
    time_limit: Option<f64>,
    series: &'static [&'static str],
}

const CRITERIA: [Criterion; 12] = [
    Criterion {
        id: 1,
        title: "cube multiplier matches the sinc product within 3 std errors",
        checks: &["multiplier-oracle"],
        time_limit: Some(120.0),
        series: &[],
    },
    Criterion {
        id: 2,
        title: "multiplier decay, smallness and radial bounds with constant 150",
        checks: &["multiplier-bounds"],
        time_limit: Some(600.0),
        series: &["multiplier-decay"],
    },
    Criterion {
        id: 3,
        title: "section envelope, L bracket and profile shape",
        checks: &["section-bounds"],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 4,
        title: "dyadic symbol sum has supremum 3 and is dilation invariant",
        checks: &["symbol-sum"],
        time_limit: None,
        series: &["symbol-sum"],
    },
    Criterion {
        id: 5,
        title: "Rademacher-Menshov bound holds exactly",
        checks: &["rademacher-menshov"],
        time_limit: Some(60.0),
        series: &[],
    },
    Criterion {
        id: 6,
        title: "lattice count bounds and the 13/25 cross-check",
        checks: &["lattice-count"],
        time_limit: None,
        series: &["lattice-ratio"],
    },
    Criterion {
        id: 7,
        title: "cube tail bound, exact 2-D case and Monte Carlo cases",
        checks: &["cube-tail"],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 8,
        title: "minimal J and the volume bound in the large-N regime",
        checks: &["lattice-volume"],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 9,
        title: "comparison chain on random sparse inputs",
        checks: &["comparison-chain"],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 10,
        title: "operator axioms and pointwise dominations",
        checks: &[
            "grid-operator-axioms",
            "lattice-axioms",
            "poisson-domination",
            "spherical-domination",
            "block-decomposition",
        ],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 11,
        title: "isotropic normalization of ball and cube, cube Q-invariant",
        checks: &["isotropic-ball", "isotropic-cube", "q-invariant-cube"],
        time_limit: None,
        series: &[],
    },
    Criterion {
        id: 12,
        title: "trend experiments complete and emit series",
        checks: &["ellipsoid-trend", "weak11-trend", "conjectural-constants"],
        time_limit: None,
        series: &["ellipsoid-lower-bound", "weak11-trend", "conjectural-c1"],
    },
];

fn has_series(outcomes: &[CheckOutcome], name: &str) -> bool {
    outcomes
        .iter()
        .filter_map(|o| o.report.as_ref())
        .any(|r| r.series.get(name).is_some_and(|s| !s.is_empty()))
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let registry = CheckRegistry::default();
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcomes: Vec<CheckOutcome> = c
            .checks
            .iter()
            .map(|name| run_check(registry.get(name).expect("registered check"), &cfg))
            .collect();
        let secs = start.elapsed().as_secs_f64();
        let mut problems: Vec<String> = Vec::new();
        for o in &outcomes {
            if let Some(e) = &o.error {
                problems.push(format!("{}: {e}", o.check));
            } else if !o.pass {
                let r = o.report.as_ref().expect("report");
                let first = r.failures().next().map(|m| m.inequality_id.clone()).unwrap_or_default();
                problems.push(format!("{}: {} failed margins, first {first}", o.check, r.failures().count()));
            }
        }
        for s in c.series {
            if !has_series(&outcomes, s) {
                problems.push(format!("missing series {s}"));
            }
        }
        if let Some(limit) = c.time_limit {
            if secs > limit {
                problems.push(format!("took {secs:.1}s, limit {limit}s"));
            }
        }
        let margins: usize = outcomes.iter().filter_map(|o| o.report.as_ref()).map(|r| r.margins.len()).sum();
        if problems.is_empty() {
            println!("criterion {:2}: PASS  {} ({margins} margins, {secs:.1}s)", c.id, c.title);
        } else {
            failed += 1;
            println!("criterion {:2}: FAIL  {} ({secs:.1}s): {}", c.id, c.title, problems.join("; "));
        }
    }
    println!("acceptance: {} of {} criteria pass", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
