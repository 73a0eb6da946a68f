use clap::{Args, Parser, Subcommand, ValueEnum};
use hlmax_core::bodies::{isotropic_auto, isotropic_constant_bounds_check, volume, BodyRegistry};
use hlmax_core::gridops::{maximal, parse_t_grid, Boundary, GridFunction};
use hlmax_core::lattice::{
    comparison_chain_check, enumerate_ball_with_cap, lemma61_check, lemma62_check, lemma63_check, lemma63_constants,
    random_sparse_input, ChainRegime, LatticeFunction, DEFAULT_CAP,
};
use hlmax_core::multipliers::{check_multiplier_bounds, discrete_multiplier_with_cap, random_xi};
use hlmax_core::plot::emit_plot_data;
use hlmax_core::report::SCHEMA_VERSION;
use hlmax_core::search::{
    estimate_lp_lower_bound, estimate_weak11_lower_bound, DiscreteMaximalOp, GridMaximalOp, SearchOperator,
    SearchOptions,
};
use hlmax_core::suite::{run_suite, CheckRegistry, SuiteConfig};
use hlmax_core::{Error, ExperimentReport};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 20210601;

#[derive(Parser)]
#[command(name = "hlmax", version, about = "Averaging and maximal operators over convex symmetric bodies")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Random seed; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for `suite`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the JSON record on stdout instead of a summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Volume and isotropic constant of a body.
    Body {
        #[arg(long)]
        body: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Multiplier decay, smallness and radial-derivative bounds.
    MultiplierCheck {
        #[arg(long)]
        body: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        xi_count: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 100.0])]
        xi_range: Vec<f64>,
    },
    /// Multiplier of the lattice average over `B_N ∩ Z^d` at one frequency.
    DiscreteMultiplier {
        #[arg(long)]
        body: String,
        #[arg(long)]
        dim: usize,
        #[arg(long = "N")]
        n: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Vec<f64>,
    },
    /// Grid maximal function of a sampled function.
    GridMaximal {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        body: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tgrid: String,
        #[arg(long)]
        boundary: Option<Boundary>,
    },
    /// Exact count of `B^q_N ∩ Z^d`.
    LatticeCount {
        #[arg(long)]
        dim: usize,
        #[arg(long = "N")]
        n: f64,
        #[arg(long, default_value = "2")]
        q: String,
    },
    /// One of the lattice counting checks.
    LemmaCheck {
        #[arg(long, value_enum)]
        which: Lemma,
        #[arg(long)]
        dim: usize,
        #[arg(long = "N")]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 50_000)]
        samples: usize,
        /// Lattice function for `chain`; a random sparse input otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Lower bound for an operator norm by adversarial input search.
    NormSearch {
        #[arg(long, value_enum, default_value = "discrete")]
        operator: OperatorKind,
        #[arg(long)]
        body: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
        t: Vec<f64>,
        /// Exponent in (1, inf], or `weak11`.
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0.25)]
        spacing: f64,
        #[arg(long = "box", default_value_t = 8.0)]
        box_half_width: f64,
    },
    /// Run a verification suite: bodies, multipliers, gridops, lattice or all.
    Suite { name: String },
    /// Extract a plot series from a suite bundle.
    PlotData {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    #[value(name = "61")]
    Count,
    #[value(name = "62")]
    Shell,
    #[value(name = "63")]
    Volume,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorKind {
    Discrete,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Outcome {
    Pass,
    Fail,
}

type CliResult = Result<Outcome, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(g: &Global) -> Result<SuiteConfig, Error> {
    let mut cfg = match &g.config {
        Some(p) => SuiteConfig::load(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn seed(g: &Global) -> Result<u64, Error> {
    match (g.seed, &g.config) {
        (Some(s), _) => Ok(s),
        (None, Some(_)) => Ok(load_config(g)?.seed),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

/// Writes `value` to `--out` when given, and prints it or `summary`.
fn emit(g: &Global, value: &Value, summary: &str) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(p) = &g.out {
        std::fs::write(p, &text)?;
    }
    if g.json {
        println!("{text}");
    } else {
        println!("{summary}");
    }
    Ok(())
}

fn report_summary(r: &ExperimentReport) -> String {
    let mut lines = vec![format!(
        "{}: {} ({} margins, {} failed)",
        r.op_name,
        if !r.gating {
            "non-gating"
        } else if r.pass() {
            "pass"
        } else {
            "FAIL"
        },
        r.margins.len(),
        r.failures().count()
    )];
    for m in r.failures() {
        lines.push(format!("  {}: {} > {} + {}", m.inequality_id, m.lhs, m.rhs, m.slack));
    }
    for n in &r.notes {
        lines.push(format!("  note: {n}"));
    }
    lines.join("\n")
}

fn emit_report(g: &Global, r: &ExperimentReport) -> CliResult {
    let mut v = serde_json::to_value(r)?;
    v["pass"] = json!(r.pass());
    emit(g, &v, &report_summary(r))?;
    Ok(if !r.gating || r.pass() { Outcome::Pass } else { Outcome::Fail })
}

fn parse_q(s: &str) -> Result<f64, Error> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}"))),
    }
}

fn run(cli: &Cli) -> CliResult {
    let g = &cli.global;
    let reg = BodyRegistry::default();
    match &cli.command {
        Command::Body { body, dim, samples } => {
            let s = seed(g)?;
            let b = reg.parse(body, *dim)?;
            let vol = volume(&b, s, *samples)?;
            let iso = isotropic_auto(&b, s, *samples)?;
            let mut r = isotropic_constant_bounds_check(&iso, 1.0);
            r.seed = s;
            let cert = &iso.certificate;
            if cert.samples > 0 {
                r.check("covariance-residual", cert.covariance_residual, cert.residual_tolerance, 0.0);
            }
            let v = json!({
                "schema": SCHEMA_VERSION,
                "op": "body",
                "inputs": {"body": body, "dim": dim, "samples": samples, "describe": b.describe()},
                "seed": s,
                "estimate": vol.estimate,
                "std_error": vol.std_error,
                "volume_exact": vol.exact,
                "isotropic_constant": iso.l,
                "isotropic_constant_std_error": iso.l_std_error,
                "transform": iso.transform.row_iter().map(|row| row.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
                "margins": r.margins,
                "pass": r.pass(),
            });
            let summary = format!(
                "{}: volume {:.6} ± {:.2e}, L = {:.6} ± {:.2e}, {}",
                b.describe(),
                vol.estimate,
                vol.std_error,
                iso.l,
                iso.l_std_error,
                if r.pass() { "pass" } else { "FAIL" }
            );
            emit(g, &v, &summary)?;
            Ok(if r.pass() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::MultiplierCheck { body, dim, samples, xi_count, xi_range } => {
            let s = seed(g)?;
            if xi_range.len() != 2 {
                return Err(Error::InvalidParameter("--xi-range takes lo,hi".into()));
            }
            let iso = isotropic_auto(&reg.parse(body, *dim)?, s, *samples)?;
            let xis = random_xi(*dim, *xi_count, xi_range[0], xi_range[1], s);
            let r = check_multiplier_bounds(&iso, &xis, s, *samples)?;
            emit_report(g, &r)
        }
        Command::DiscreteMultiplier { body, dim, n, xi } => {
            if xi.len() != *dim {
                return Err(Error::InvalidParameter(format!("--xi has {} entries, expected {dim}", xi.len())));
            }
            let b = reg.parse(body, *dim)?;
            let m = discrete_multiplier_with_cap(&b, *n, xi, DEFAULT_CAP)?;
            let v = json!({
                "schema": SCHEMA_VERSION,
                "op": "discrete_multiplier",
                "inputs": {"body": body, "dim": dim, "N": n, "xi": xi},
                "value": [m.re, m.im],
            });
            emit(g, &v, &format!("m_N(xi) = {} + {}i", m.re, m.im))?;
            Ok(Outcome::Pass)
        }
        Command::GridMaximal { dim, body, input, tgrid, boundary } => {
            let is_csv = input.extension().is_some_and(|e| e == "csv");
            let mut f = if is_csv {
                GridFunction::read_csv(input, boundary.unwrap_or(Boundary::Zero))?
            } else {
                GridFunction::read_json(input)?
            };
            if let Some(b) = boundary {
                f = f.with_boundary(*b);
            }
            if f.dim != *dim {
                return Err(Error::InvalidParameter(format!("input has dimension {}, expected {dim}", f.dim)));
            }
            let ts = parse_t_grid(tgrid)?;
            let m = maximal(&f, &reg.parse(body, *dim)?, &ts)?;
            let mut v = serde_json::to_value(&m)?;
            v["schema"] = json!(SCHEMA_VERSION);
            let summary = format!("max |Mf| = {:.6} over {} radii, {} nodes", m.max_abs(), ts.len(), m.len());
            emit(g, &v, &summary)?;
            Ok(Outcome::Pass)
        }
        Command::LatticeCount { dim, n, q } => {
            let c = enumerate_ball_with_cap(*dim, *n, parse_q(q)?, DEFAULT_CAP)?;
            let mut v = serde_json::to_value(&c)?;
            v["schema"] = json!(SCHEMA_VERSION);
            let summary = format!("count = {}, volume = {:.6}, ratio = {:.6}", c.count, c.volume, c.ratio);
            emit(g, &v, &summary)?;
            Ok(Outcome::Pass)
        }
        Command::LemmaCheck { which, dim, n, t, c, samples, input } => {
            let s = seed(g)?;
            let r = match which {
                Lemma::Count => lemma61_check(*dim, *n, *c)?,
                Lemma::Shell => lemma62_check(*dim, *n, *t, *c, s, *samples)?,
                Lemma::Volume => lemma63_check(*dim, *n)?,
                Lemma::Chain => {
                    let f = match input {
                        Some(p) => LatticeFunction::read_json(p)?,
                        None => random_sparse_input(*dim, 6, 40, s),
                    };
                    let regime = if *n >= lemma63_constants().c1 * *dim as f64 {
                        ChainRegime::LargeN
                    } else {
                        ChainRegime::Empirical
                    };
                    comparison_chain_check(&f, *dim, *n, regime, s)?
                }
            };
            emit_report(g, &r)
        }
        Command::NormSearch { operator, body, dim, t, p, budget, spacing, box_half_width } => {
            let s = seed(g)?;
            let b = reg.parse(body, *dim)?;
            let op: Box<dyn SearchOperator> = match operator {
                OperatorKind::Discrete => Box::new(DiscreteMaximalOp::new(b, t)?),
                OperatorKind::Grid => Box::new(GridMaximalOp::new(b, t, *spacing, *box_half_width)?),
            };
            let opts = SearchOptions::default();
            let est = if p == "weak11" {
                estimate_weak11_lower_bound(op.as_ref(), *budget, s, &opts)?
            } else {
                estimate_lp_lower_bound(op.as_ref(), parse_q(p)?, *budget, s, &opts)?
            };
            let v = serde_json::to_value(&est)?;
            let summary = format!(
                "{} ({}): lower bound {:.6} after {} evaluations",
                est.operator_id, est.objective, est.lower_bound, est.search_budget
            );
            emit(g, &v, &summary)?;
            Ok(Outcome::Pass)
        }
        Command::Suite { name } => {
            let cfg = load_config(g)?;
            let bundle = run_suite(&CheckRegistry::default(), name, &cfg)?;
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let (json_path, csv_path) = bundle.write(&dir)?;
            if g.json {
                println!("{}", serde_json::to_string_pretty(&bundle)?);
            } else {
                for line in bundle.summary() {
                    println!("{line}");
                }
                println!(
                    "suite {}: {} ({}, {})",
                    bundle.suite,
                    if bundle.pass { "pass" } else { "FAIL" },
                    json_path.display(),
                    csv_path.display()
                );
            }
            Ok(if bundle.pass { Outcome::Pass } else { Outcome::Fail })
        }
        Command::PlotData { bundle, kind, format } => {
            let v = read_json(bundle)?;
            let table = emit_plot_data(&v, kind)?;
            match format {
                Format::Json => {
                    let text = serde_json::to_string_pretty(&table)?;
                    match &g.out {
                        Some(p) => std::fs::write(p, text)?,
                        None => println!("{text}"),
                    }
                }
                Format::Csv => match &g.out {
                    Some(p) => table.write_csv(std::fs::File::create(p)?)?,
                    None => table.write_csv(std::io::stdout().lock())?,
                },
            }
            Ok(Outcome::Pass)
        }
    }
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
