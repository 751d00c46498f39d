//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::DEFAULT_M;
use crate::harness::{
    run_experiment, run_lemma_suite, ExperimentConfig, ExperimentResult, HarnessError, Load,
    DEFAULT_ORACLE_LIMIT,
};
use crate::output::{
    bound_report, bound_table, emit_csv, emit_json, experiment_tables, lemma_table, Format,
    OutputError,
};
use crate::rng::derive_seeds;
use crate::structure::NeighborCounting;
use crate::table::BothFreePolicy;

/// Seed used when none is given on the command line.
pub const DEFAULT_SEED: u64 = 0x5EED_0F2C_401C_E5A1;

#[derive(Debug, Parser)]
#[command(
    name = "rwi",
    version,
    about = "Random-walk insertion experiments for two-choice bins"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full experiment: insertions, census, invariant checks, probe study.
    Run(RunArgs),
    /// Deterministic invariant checks only; stops a seed at a walk-cap error.
    Verify(RunArgs),
    /// Component census of G_S per seed.
    Census(RunArgs),
    /// Probe-walk study bucketed by component size.
    Probe(RunArgs),
    /// Evaluate the closed-form bounds.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    FollowD,
    PreferFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountingArg {
    Distinct,
    Multiplicity,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// JSON file, or directory for CSV tables. Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("load").required(true).args(["epsilon", "m"])))]
pub struct RunArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub d: u64,
    /// Slack: insert floor((1 - epsilon) d n) items.
    #[arg(long, value_parser = parse_open_unit)]
    pub epsilon: Option<f64>,
    /// Explicit item count.
    #[arg(long)]
    pub m: Option<u64>,
    /// Seed; repeat for several runs.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Number of runs, with seeds derived from the (single) base seed.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Probe walks per run.
    #[arg(long, default_value_t = 1000)]
    pub probes: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_walk_steps: Option<u64>,
    #[arg(long, value_enum, default_value = "follow-d")]
    pub policy: PolicyArg,
    /// How T-layer vertices count neighbors inside the set.
    #[arg(long, value_enum, default_value = "distinct")]
    pub counting: CountingArg,
    /// Absolute constant of the bounds.
    #[arg(long = "m-const", default_value_t = DEFAULT_M, value_parser = parse_positive)]
    pub m_const: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub d: u64,
    /// Bin count, for k0.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: Option<u64>,
    /// Slack values to tabulate; defaults to 0.05, 0.10, ..., 1.00.
    #[arg(long, value_parser = parse_unit)]
    pub epsilon: Vec<f64>,
    #[arg(long = "m-const", default_value_t = DEFAULT_M, value_parser = parse_positive)]
    pub m_const: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

fn parse_open_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

/// Parses `argv` (program name first) without exiting the process.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

impl RunArgs {
    /// Seeds to run: the explicit list, or `--trials` seeds derived from
    /// the single base seed.
    pub fn seed_list(&self) -> Result<Vec<u64>, String> {
        match (self.trials, self.seeds.as_slice()) {
            (None, []) => Ok(vec![DEFAULT_SEED]),
            (None, seeds) => Ok(seeds.to_vec()),
            (Some(t), []) => Ok(derive_seeds(DEFAULT_SEED, t as usize)),
            (Some(t), [base]) => Ok(derive_seeds(*base, t as usize)),
            (Some(_), _) => Err("--trials takes at most one --seed as its base".into()),
        }
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, String> {
        let load = match (self.epsilon, self.m) {
            (Some(eps), None) => Load::Epsilon(eps),
            (None, Some(m)) => Load::Items(m as usize),
            _ => return Err("exactly one of --epsilon and --m is required".into()),
        };
        let mut cfg =
            ExperimentConfig::new(self.n as usize, self.d as usize, load, self.seed_list()?)
                .with_probes(self.probes as usize);
        cfg.max_walk_steps = self.max_walk_steps;
        cfg.m_const = self.m_const;
        cfg.policy = match self.policy {
            PolicyArg::FollowD => BothFreePolicy::FollowD,
            PolicyArg::PreferFirst => BothFreePolicy::PreferFirst,
        };
        cfg.counting = match self.counting {
            CountingArg::Distinct => NeighborCounting::Distinct,
            CountingArg::Multiplicity => NeighborCounting::Multiplicity,
        };
        cfg.oracle_limit = DEFAULT_ORACLE_LIMIT;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

const DEFAULT_EPSILONS: [f64; 20] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80,
    0.85, 0.90, 0.95, 1.00,
];

#[derive(Serialize)]
struct FailureSummary<'a> {
    status: &'static str,
    failures: &'a [String],
}

#[derive(Serialize)]
struct CensusOutput<'a> {
    manifest: &'a crate::harness::Manifest,
    per_seed: Vec<CensusEntry<'a>>,
}

#[derive(Serialize)]
struct CensusEntry<'a> {
    seed: u64,
    census: &'a crate::harness::CensusSummary,
    components: &'a [crate::structure::Component],
}

#[derive(Serialize)]
struct ProbeOutput<'a> {
    manifest: &'a crate::harness::Manifest,
    aggregate_buckets: &'a std::collections::BTreeMap<usize, crate::harness::ProbeBucket>,
    per_seed: Vec<ProbeEntry<'a>>,
}

#[derive(Serialize)]
struct ProbeEntry<'a> {
    seed: u64,
    probes: &'a crate::harness::ProbeStudy,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

/// Runs the CLI and returns the process exit code: 0 when every
/// deterministic check passed, 1 on a check failure or runtime error, 2 on
/// a usage error.
pub fn run<I, T, O, E>(argv: I, stdout: &mut O, stderr: &mut E) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                let _ = write!(stdout, "{}", e.render());
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(&cli.command, stdout, stderr) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            let summary = FailureSummary {
                status: "fail",
                failures: &failures,
            };
            if let Ok(bytes) = crate::output::to_json_bytes(&summary) {
                let _ = stderr.write_all(&bytes);
            }
            ExitCode::from(1)
        }
        Err(RunError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            ExitCode::from(1)
        }
    }
}

fn experiment<E: Write>(args: &RunArgs, stderr: &mut E) -> Result<ExperimentResult, RunError> {
    let cfg = args.experiment_config().map_err(RunError::Usage)?;
    let result = run_experiment(&cfg)?;
    for w in &result.warnings {
        let _ = writeln!(stderr, "WARN: {w}");
    }
    Ok(result)
}

fn dispatch<O: Write, E: Write>(
    command: &Command,
    stdout: &mut O,
    stderr: &mut E,
) -> Result<Vec<String>, RunError> {
    match command {
        Command::Run(args) => {
            let result = experiment(args, stderr)?;
            let out = &args.out;
            match out.format {
                Format::Json => emit_json(&result, out.output.as_deref(), stdout)?,
                Format::Csv => {
                    emit_csv(&experiment_tables(&result), out.output.as_deref(), stdout)?
                }
            }
            Ok(result.failures)
        }
        Command::Census(args) => {
            let mut args = args.clone();
            args.probes = 0;
            let result = experiment(&args, stderr)?;
            let out = &args.out;
            match out.format {
                Format::Json => {
                    let view = CensusOutput {
                        manifest: &result.manifest,
                        per_seed: result
                            .per_seed
                            .iter()
                            .map(|r| CensusEntry {
                                seed: r.seed,
                                census: &r.census,
                                components: &r.components,
                            })
                            .collect(),
                    };
                    emit_json(&view, out.output.as_deref(), stdout)?
                }
                Format::Csv => {
                    let tables: Vec<_> = experiment_tables(&result)
                        .into_iter()
                        .filter(|t| t.name == "census" || t.name == "component_bounds")
                        .collect();
                    emit_csv(&tables, out.output.as_deref(), stdout)?
                }
            }
            Ok(result.failures)
        }
        Command::Probe(args) => {
            let result = experiment(args, stderr)?;
            let out = &args.out;
            match out.format {
                Format::Json => {
                    let view = ProbeOutput {
                        manifest: &result.manifest,
                        aggregate_buckets: &result.aggregate.probe_buckets,
                        per_seed: result
                            .per_seed
                            .iter()
                            .map(|r| ProbeEntry {
                                seed: r.seed,
                                probes: &r.probes,
                            })
                            .collect(),
                    };
                    emit_json(&view, out.output.as_deref(), stdout)?
                }
                Format::Csv => {
                    let tables: Vec<_> = experiment_tables(&result)
                        .into_iter()
                        .filter(|t| t.name == "probes")
                        .collect();
                    emit_csv(&tables, out.output.as_deref(), stdout)?
                }
            }
            Ok(result.failures)
        }
        Command::Verify(args) => {
            let cfg = args.experiment_config().map_err(RunError::Usage)?;
            let reports = run_lemma_suite(&cfg)?;
            let failures: Vec<String> = reports
                .iter()
                .flat_map(|r| {
                    r.verdicts
                        .failures()
                        .into_iter()
                        .map(move |f| format!("seed {}: {f}", r.seed))
                })
                .collect();
            for r in reports.iter().filter(|r| r.stopped_by_cap) {
                let _ = writeln!(
                    stderr,
                    "WARN: seed {}: stopped at the walk cap after {} of {} items",
                    r.seed, r.inserted, r.requested
                );
            }
            let out = &args.out;
            match out.format {
                Format::Json => emit_json(&reports, out.output.as_deref(), stdout)?,
                Format::Csv => emit_csv(&[lemma_table(&reports)], out.output.as_deref(), stdout)?,
            }
            Ok(failures)
        }
        Command::Bounds(args) => {
            let eps: &[f64] = if args.epsilon.is_empty() {
                &DEFAULT_EPSILONS
            } else {
                &args.epsilon
            };
            let report = bound_report(
                args.d as usize,
                args.n.map(|n| n as usize),
                args.m_const,
                eps,
            );
            let out = &args.out;
            match out.format {
                Format::Json => emit_json(&report, out.output.as_deref(), stdout)?,
                Format::Csv => emit_csv(&[bound_table(&report)], out.output.as_deref(), stdout)?,
            }
            Ok(Vec::new())
        }
    }
}
