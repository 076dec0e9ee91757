use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use detfilter::bounds::{format_sig, write_constants_csv, write_constants_json, BoundTable};
use detfilter::error_model::ThresholdRow;
use detfilter::montecarlo::{
    dominance_report, estimate_cdf, estimate_failure_rate, load_config, run_suite, suite,
    write_rows_csv, write_rows_json, EstimateRow, ExperimentConfig, SampleDomain,
};
use detfilter::predicates::PredicateKind;
use detfilter::{MagnitudeRule, PrecisionConfig};

/// Directory for result files when `--output` is not given.
const OUT_DIR_VAR: &str = "DETFILTER_OUT_DIR";

#[derive(Parser)]
#[command(name = "detfilter", version, about = "Determinant filter thresholds, bounds and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of per-dimension constants, thresholds and failure bounds.
    Constants {
        #[arg(long, default_value_t = 6)]
        delta_max: usize,
        #[arg(long, default_value_t = 53)]
        bits: u32,
        #[arg(long, value_enum, default_value_t = Rule::Ceil)]
        rule: Rule,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Error threshold of one filter.
    Epsilon {
        #[arg(long)]
        delta: usize,
        #[arg(long)]
        bits: u32,
        #[arg(long, value_enum, default_value_t = Predicate::Whichside)]
        predicate: Predicate,
        #[arg(long, value_enum, default_value_t = Rule::Ceil)]
        rule: Rule,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Estimate CDF rows for an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate the filter failure rate on a grid experiment.
    Failure {
        #[arg(long)]
        config: PathBuf,
        /// Filter precision; defaults to `bits` in the config, then `eta_bits`.
        #[arg(long)]
        bits: Option<u32>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a canned dominance suite.
    Verify {
        suite: String,
        /// 10^5 trials per case instead of 10^6.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Ceil,
    Nearest,
}

impl From<Rule> for MagnitudeRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Ceil => MagnitudeRule::Ceil,
            Rule::Nearest => MagnitudeRule::Nearest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Predicate {
    Whichside,
    Insphere,
}

impl From<Predicate> for PredicateKind {
    fn from(p: Predicate) -> Self {
        match p {
            Predicate::Whichside => PredicateKind::WhichSide,
            Predicate::Insphere => PredicateKind::Insphere,
        }
    }
}

/// A run that completed but found a bound violation.
struct Violations;

type Outcome = Result<Result<(), Violations>, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Violations)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Constants {
            delta_max,
            bits,
            rule,
            format,
            output,
        } => constants(delta_max, bits, rule, format, output),
        Command::Epsilon {
            delta,
            bits,
            predicate,
            rule,
            format,
        } => epsilon(delta, bits, predicate.into(), rule, format),
        Command::Simulate { config, run } => {
            let cfg = prepare(&config, &run)?;
            let rows = estimate_cdf(&cfg)?;
            emit_rows(&rows, &run, &stem(&config, "simulate"))
        }
        Command::Failure { config, bits, run } => {
            let cfg = prepare(&config, &run)?;
            let bits = match (bits.or(cfg.bits), cfg.domain) {
                (Some(b), _) => b,
                (None, SampleDomain::Grid { eta_bits, .. }) => eta_bits,
                (None, _) => return Err("failure runs need a grid domain".into()),
            };
            let row = estimate_failure_rate(&cfg, &PrecisionConfig::new(bits)?)?;
            emit_rows(&[row], &run, &stem(&config, "failure"))
        }
        Command::Verify {
            suite: name,
            quick,
            workers,
            format,
            output,
        } => {
            let n = if quick {
                detfilter::montecarlo::suites::QUICK_TRIALS
            } else {
                detfilter::montecarlo::suites::FULL_TRIALS
            };
            let rows = run_suite(&suite(&name, n)?, workers)?;
            let args = RunArgs {
                workers: Some(workers),
                seed: None,
                format,
                output,
            };
            emit_rows(&rows, &args, &format!("verify-{name}"))
        }
    }
}

fn prepare(path: &Path, run: &RunArgs) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut cfg = load_config(path)?;
    if let Some(w) = run.workers {
        cfg = cfg.with_workers(w);
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stem(path: &Path, fallback: &str) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(fallback)
        .to_string()
}

/// `--output`, else a file named after `stem` in the output directory, else
/// standard output.
fn sink(output: &Option<PathBuf>, stem: &str, ext: &str) -> io::Result<Box<dyn Write>> {
    let path = match (output, std::env::var_os(OUT_DIR_VAR)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            std::fs::create_dir_all(&dir)?;
            Some(Path::new(&dir).join(format!("{stem}.{ext}")))
        }
        (None, None) => None,
    };
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_rows(rows: &[EstimateRow], run: &RunArgs, stem: &str) -> Outcome {
    let report = dominance_report(rows)?;
    let ext = if run.format == Format::Json { "json" } else { "csv" };
    let mut out = sink(&run.output, stem, ext)?;
    match run.format {
        Format::Json => write_rows_json(rows, &mut out)?,
        _ => write_rows_csv(rows, &mut out)?,
    }
    out.flush()?;
    eprint!("{report}");
    Ok(if report.passed() { Ok(()) } else { Err(Violations) })
}

fn constants(delta_max: usize, bits: u32, rule: Rule, format: Format, output: Option<PathBuf>) -> Outcome {
    if delta_max == 0 {
        return Err("--delta-max must be at least 1".into());
    }
    let cfg = PrecisionConfig::with_rule(bits, rule.into())?;
    let rows: Vec<BoundTable> = (1..=delta_max).map(|d| BoundTable::new(d, &cfg)).collect();
    if delta_max > 8 {
        eprintln!("note: epsilon and rho columns are omitted above dimension 8");
    }
    let ext = if format == Format::Json { "json" } else { "csv" };
    let mut out = sink(&output, "constants", ext)?;
    match format {
        Format::Json => {
            write_constants_json(&rows, &mut out)?;
            writeln!(out)?;
        }
        _ => write_constants_csv(&rows, &mut out)?,
    }
    out.flush()?;
    Ok(Ok(()))
}

#[derive(Serialize)]
struct EpsilonReport {
    predicate: &'static str,
    delta: usize,
    bits: u32,
    rule: &'static str,
    /// Bound on the magnitude of the computed value.
    g: String,
    /// Threshold as an integer multiple of `2^-bits`.
    epsilon_coefficient: String,
    epsilon: f64,
    ops: u64,
    note: Option<&'static str>,
}

fn epsilon(delta: usize, bits: u32, kind: PredicateKind, rule: Rule, format: Format) -> Outcome {
    let cfg = PrecisionConfig::with_rule(bits, rule.into())?;
    let scheme = kind.scheme(delta)?;
    let row = ThresholdRow::from_scheme(delta, &scheme, &cfg);
    let report = EpsilonReport {
        predicate: kind.name(),
        delta,
        bits,
        rule: match rule {
            Rule::Ceil => "ceil",
            Rule::Nearest => "nearest",
        },
        g: row.g.to_string(),
        epsilon_coefficient: row.epsilon_coefficient.to_string(),
        epsilon: row.epsilon.to_f64(),
        ops: row.ops,
        note: (kind == PredicateKind::Insphere)
            .then_some("insphere thresholds come from the same calculus but have no published reference values"),
    };
    let mut out = io::stdout().lock();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        _ => {
            writeln!(out, "predicate: {}", report.predicate)?;
            writeln!(out, "delta: {}", report.delta)?;
            writeln!(out, "bits: {}", report.bits)?;
            writeln!(out, "rule: {}", report.rule)?;
            writeln!(out, "G: {}", report.g)?;
            writeln!(out, "epsilon_coefficient: {} * 2^-{}", report.epsilon_coefficient, bits)?;
            writeln!(out, "epsilon: {}", format_sig(report.epsilon, 3))?;
            writeln!(out, "ops: {}", report.ops)?;
            if let Some(n) = report.note {
                writeln!(out, "note: {n}")?;
            }
        }
    }
    Ok(Ok(()))
}
