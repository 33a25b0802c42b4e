//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a JSON object whose keys mirror
//! the long flag names. Flags given on the command line override it.
//! Exit codes: 0 success, 1 usage or input error, 2 verification violation,
//! 3 audit found no applicable bound.

pub mod audit;
mod render;
mod simulate;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{
    coverage_bound, coverage_bound_weak, fu_baseline_bound, plc_bound_with_joint, plc_simplified_bound,
    wei_applicability, wei_plc_bound_with_joint, BoundReport, PlcGate, TheoremId, DEFAULT_DELTA_PARAM,
};
use crate::error::{Error, Result};
use crate::expansion::{load_id_list, load_oracle_pairs, SetPair};
use crate::graph::{load_edges, ExampleGraph};
use crate::population::{LabelAssignment, Population};
use crate::testbeds::{run_suite, SuiteConfig, VerificationReport, VerifyConfig};

use audit::{audit_measurements, audit_population, AuditSettings, EmpiricalSettings, Measurements};
pub use render::Kind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_NOT_APPLICABLE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "w2s", version, about = "Expansion measurement and weak-to-strong error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure per-class expansions and evaluate every bound.
    Audit {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        args: AuditArgs,
    },
    /// Evaluate bounds on scalar inputs.
    Bounds {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        args: BoundsArgs,
    },
    /// Generate a testbed population and summarize it.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Run the brute-force soundness suite, or check scalar inputs.
    Verify {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        args: VerifyArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(clap::Args, Debug, Clone)]
struct Io {
    /// JSON file with option values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_theorem(s: &str) -> std::result::Result<TheoremId, String> {
    s.parse::<TheoremId>().map_err(|_| {
        let names: Vec<_> = TheoremId::ALL.iter().map(|t| t.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_gate(s: &str) -> std::result::Result<PlcGate, String> {
    match s {
        "main" => Ok(PlcGate::Main),
        "headline" => Ok(PlcGate::Headline),
        _ => Err("expected main or headline".into()),
    }
}

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct AuditArgs {
    /// Population JSONL file.
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Edge list, one pair of ids per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Classifier predictions; repeat the flag for several files.
    #[arg(long)]
    pub predictions: Vec<PathBuf>,
    /// Precomputed per-class measurements instead of a population.
    #[arg(long, conflicts_with_all = ["population", "edges", "predictions"])]
    pub measurements: Option<PathBuf>,
    /// Number of classes; inferred from the data when omitted.
    #[arg(long)]
    pub num_classes: Option<usize>,
    /// Robustness threshold in [0, 1).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Smallest conditional mass a set needs to count toward expansion.
    #[arg(long)]
    pub q: Option<f64>,
    /// Free parameter in (0, 1] of the simplified covered-set bound.
    #[arg(long)]
    pub delta_param: Option<f64>,
    /// Audit only this class.
    #[arg(long)]
    pub class: Option<usize>,
    /// Use measured nonrobust masses instead of assuming zero.
    #[arg(long)]
    pub strict_robustness: bool,
    /// Oracle pairs file (source id, neighbor id per line).
    #[arg(long)]
    pub oracle_pairs: Option<PathBuf>,
    /// Ids sampled from the first set, one per line.
    #[arg(long)]
    pub sample_a: Option<PathBuf>,
    /// Ids sampled from the second set, one per line.
    #[arg(long)]
    pub sample_b: Option<PathBuf>,
    /// Set pair the empirical estimate targets.
    #[arg(long, value_enum)]
    pub oracle_sets: Option<SetPair>,
    /// Estimator threshold; derived from the sample sizes when omitted.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Failure probability for the estimation margin.
    #[arg(long)]
    pub delta: Option<f64>,
    /// VC dimension of the hypothesis class, for the estimation margin.
    #[arg(long)]
    pub vc: Option<u32>,
    /// Mass floor used by the estimation margin.
    #[arg(long)]
    pub q_bar: Option<f64>,
}

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BoundsArgs {
    /// Theorem to evaluate; repeat for several.
    #[arg(long, value_parser = parse_theorem)]
    pub theorem: Vec<TheoremId>,
    /// Expansion coefficient.
    #[arg(long)]
    pub c: Option<f64>,
    /// Expansion of the good covered set into T.
    #[arg(long)]
    pub c1: Option<f64>,
    /// Expansion of the bad covered set into T.
    #[arg(long)]
    pub c2: Option<f64>,
    /// Mass threshold the expansion was measured at.
    #[arg(long)]
    pub q: Option<f64>,
    /// Fraction of the covered class the teacher labels wrong.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// err(f, ỹ | S_i).
    #[arg(long)]
    pub err: Option<f64>,
    /// Nonrobust mass; zero when omitted.
    #[arg(long)]
    pub nonrobust: Option<f64>,
    /// Exact P(f ≠ ỹ or f not robust | S_i) for the gates.
    #[arg(long)]
    pub joint: Option<f64>,
    /// Free parameter in (0, 1] of the simplified covered-set bound.
    #[arg(long)]
    pub delta_param: Option<f64>,
    /// P(S).
    #[arg(long)]
    pub ps: Option<f64>,
    /// Coverage P(S) for the applicability check; falls back to --ps.
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Precondition style for the covered-set bound: main or headline.
    #[arg(long, value_parser = parse_gate)]
    pub gate: Option<PlcGate>,
    /// Robustness threshold, echoed in the report.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Testbed {
    #[default]
    Cotraining,
    Planted,
}

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Which generator to run.
    #[arg(long, value_enum)]
    pub testbed: Option<Testbed>,
    /// Random seed; equal seeds give identical files.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the generated files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Co-training spec JSON; a random spec is drawn when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Co-training: number of first-view values.
    #[arg(long)]
    pub view1_size: Option<usize>,
    /// Co-training: number of second-view values.
    #[arg(long)]
    pub view2_size: Option<usize>,
    /// Planted: number of points.
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Planted: target teacher error on covered points.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Planted: target fraction of covered points.
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Planted: probability of an edge per pair.
    #[arg(long)]
    pub edge_density: Option<f64>,
    /// Planted: also draw edges between classes.
    #[arg(long)]
    pub cross_class: bool,
    /// Planted: draw nonuniform point masses.
    #[arg(long)]
    pub jitter_mass: bool,
    /// Robustness threshold for the summary.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Mass threshold for the summary expansions.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyArgs {
    /// Theorems to check; defaults to every verifiable one.
    #[arg(long, value_parser = parse_theorem)]
    pub theorem: Vec<TheoremId>,
    /// Random seed for the instance generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random populations per theorem.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Largest population size; at most 16.
    #[arg(long)]
    pub max_points: Option<usize>,
    /// Robustness threshold.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Mass threshold for expansion.
    #[arg(long)]
    pub q: Option<f64>,
    /// Subtract this offset from every bound; a self-test that should fail.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.05")]
    pub mutate_bounds: Option<f64>,
    /// Precondition style for the covered-set bound: main or headline.
    #[arg(long, value_parser = parse_gate)]
    pub gate: Option<PlcGate>,
    /// Scalar mode: evaluate the theorems on these inputs instead.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub err: Option<f64>,
    #[arg(long)]
    pub nonrobust: Option<f64>,
    #[arg(long)]
    pub joint: Option<f64>,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null | Value::Bool(false) => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Overlays the flags that were set on the config file's values.
fn merge_config<T: Serialize + DeserializeOwned + Clone>(flags: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(flags.clone());
    };
    let mut base: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let Value::Object(map) = &mut base else {
        return Err(Error::Unsupported(format!("config `{}` is not a JSON object", path.display())));
    };
    if let Value::Object(set) = serde_json::to_value(flags)? {
        for (k, v) in set {
            if !is_unset(&v) {
                map.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(base)?)
}

fn missing(flag: &str) -> Error {
    Error::Unsupported(format!("missing required input --{flag}"))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Unsupported(format!("{}: {e}", path.display())))
}

fn emit(io: &Io, kind: Kind, report: &Value) -> Result<()> {
    let text = match io.format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Table => render::render(kind, report),
    };
    match &io.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Audit { io, args } => {
            let args = merge_config(&args, io.config.as_deref())?;
            let report = run_audit(&args)?;
            emit(&io, Kind::Audit, &serde_json::to_value(&report)?)?;
            Ok(if report.any_applicable {
                EXIT_OK
            } else {
                EXIT_NOT_APPLICABLE
            })
        }
        Command::Bounds { io, args } => {
            let args = merge_config(&args, io.config.as_deref())?;
            let report = run_bounds(&args)?;
            emit(&io, Kind::Bounds, &serde_json::to_value(&report)?)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { io, args } => {
            let args = merge_config(&args, io.config.as_deref())?;
            let summary = simulate::run(&args)?;
            emit(&io, Kind::Simulate, &summary)?;
            Ok(EXIT_OK)
        }
        Command::Verify { io, args } => {
            let args = merge_config(&args, io.config.as_deref())?;
            if args.alpha.is_some() {
                let report = run_bounds(&args.scalar_bounds()?)?;
                emit(&io, Kind::Bounds, &serde_json::to_value(&report)?)?;
                return Ok(EXIT_OK);
            }
            let report = run_verify(&args)?;
            emit(&io, Kind::Verify, &serde_json::to_value(&report)?)?;
            Ok(if report.total_violations > 0 {
                EXIT_VIOLATION
            } else {
                EXIT_OK
            })
        }
    }
}

pub fn run_audit(args: &AuditArgs) -> Result<audit::AuditReport> {
    let settings = AuditSettings {
        eta: args.eta.unwrap_or(0.0),
        q: args.q.unwrap_or(0.0),
        delta_param: args.delta_param.unwrap_or(DEFAULT_DELTA_PARAM),
        strict_robustness: args.strict_robustness,
        class_filter: args.class,
    };
    if let Some(path) = &args.measurements {
        let m: Measurements = serde_json::from_reader(open(path)?)?;
        return audit_measurements(&m, &settings);
    }
    let pop = Population::load_with_classes(open(args.population.as_deref().ok_or_else(|| missing("population"))?)?, args.num_classes)?;
    let edges = load_edges(open(args.edges.as_deref().ok_or_else(|| missing("edges"))?)?)?;
    let g = ExampleGraph::build(&pop, &edges)?;
    if args.predictions.is_empty() {
        return Err(missing("predictions"));
    }
    let classifiers = args
        .predictions
        .iter()
        .map(|p| LabelAssignment::load(open(p)?, &pop))
        .collect::<Result<Vec<_>>>()?;
    let empirical = match &args.oracle_pairs {
        None => None,
        Some(pairs) => Some(EmpiricalSettings {
            pair: args.oracle_sets.unwrap_or(SetPair::GoodT),
            sample_a: load_id_list(open(args.sample_a.as_deref().ok_or_else(|| missing("sample-a"))?)?)?,
            sample_b: load_id_list(open(args.sample_b.as_deref().ok_or_else(|| missing("sample-b"))?)?)?,
            oracle_pairs: load_oracle_pairs(open(pairs)?)?,
            epsilon: args.epsilon,
            delta: args.delta.unwrap_or(0.05),
            vc: args.vc,
            q_bar: args.q_bar,
        }),
    };
    audit_population(&pop, &g, &classifiers, &settings, empirical.as_ref())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub reports: Vec<BoundReport>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| missing(flag))
}

pub fn evaluate_scalar(theorem: TheoremId, a: &BoundsArgs) -> Result<BoundReport> {
    let q = a.q.unwrap_or(0.0);
    let nonrobust = a.nonrobust.unwrap_or(0.0);
    let gate = a.gate.unwrap_or_default();
    let mut r = match theorem {
        TheoremId::FuBaseline => return fu_baseline_bound(need(a.ps, "ps")?, need(a.alpha, "alpha")?),
        TheoremId::WeiApplicability => {
            return wei_applicability(need(a.coverage.or(a.ps), "coverage")?);
        }
        TheoremId::PlcMain => plc_bound_with_joint(
            need(a.c, "c")?,
            q,
            need(a.alpha, "alpha")?,
            need(a.err, "err")?,
            nonrobust,
            a.joint,
            gate,
        )?,
        TheoremId::PlcSimplified => plc_simplified_bound(
            need(a.c, "c")?,
            need(a.alpha, "alpha")?,
            need(a.err, "err")?,
            nonrobust,
            a.delta_param.unwrap_or(DEFAULT_DELTA_PARAM),
        )?,
        TheoremId::CoverageMain => coverage_bound(
            need(a.c1.or(a.c), "c1")?,
            need(a.c2.or(a.c), "c2")?,
            q,
            need(a.alpha, "alpha")?,
            need(a.err, "err")?,
            nonrobust,
        )?,
        TheoremId::CoverageWeak => coverage_bound_weak(
            need(a.c.or(a.c1), "c")?,
            q,
            need(a.alpha, "alpha")?,
            need(a.err, "err")?,
            nonrobust,
        )?,
        TheoremId::WeiPlc => wei_plc_bound_with_joint(
            need(a.c, "c")?,
            q,
            need(a.alpha, "alpha")?,
            need(a.err, "err")?,
            nonrobust,
            a.joint,
        )?,
    };
    if a.nonrobust.is_none() {
        r = r.assume_zero_robustness();
    }
    if let Some(eta) = a.eta {
        r = r.with_eta(eta);
    }
    Ok(r)
}

pub fn run_bounds(args: &BoundsArgs) -> Result<BoundsReport> {
    if args.theorem.is_empty() {
        return Err(missing("theorem"));
    }
    let reports = args
        .theorem
        .iter()
        .map(|&t| evaluate_scalar(t, args))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport { reports })
}

impl VerifyArgs {
    fn scalar_bounds(&self) -> Result<BoundsArgs> {
        if self.theorem.is_empty() {
            return Err(missing("theorem"));
        }
        Ok(BoundsArgs {
            theorem: self.theorem.clone(),
            c: self.c,
            c1: self.c1,
            c2: self.c2,
            q: self.q,
            alpha: self.alpha,
            err: self.err,
            nonrobust: self.nonrobust,
            joint: self.joint,
            gate: self.gate,
            eta: self.eta,
            ..BoundsArgs::default()
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub instances: usize,
    pub max_points: usize,
    pub eta: f64,
    pub q: f64,
    pub mutate: f64,
    pub reports: Vec<VerificationReport>,
    pub total_violations: usize,
}

pub fn run_verify(args: &VerifyArgs) -> Result<SuiteReport> {
    let seed = args.seed.ok_or_else(|| missing("seed"))?;
    let theorems = if args.theorem.is_empty() {
        TheoremId::VERIFIABLE.to_vec()
    } else {
        args.theorem.clone()
    };
    let suite = SuiteConfig {
        instances: args.instances.unwrap_or(200),
        seed,
        max_points: args.max_points.unwrap_or(8),
    };
    let cfg = VerifyConfig {
        eta: args.eta.unwrap_or(0.0),
        q: args.q.unwrap_or(0.0),
        mutate: args.mutate_bounds.unwrap_or(0.0),
        gate: args.gate.unwrap_or_default(),
    };
    let reports = theorems
        .iter()
        .map(|&t| run_suite(t, &suite, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let total_violations = reports.iter().map(|r| r.violations.len()).sum();
    Ok(SuiteReport {
        seed,
        instances: suite.instances,
        max_points: suite.max_points,
        eta: cfg.eta,
        q: cfg.q,
        mutate: cfg.mutate,
        reports,
        total_violations,
    })
}
