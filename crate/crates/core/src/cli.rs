//! The `collide-count` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on input or output errors.
//! `COLLIDE_COUNT_THREADS` caps the worker pool used by `experiment`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimators::{blocks_for_cv, estimate_from_sample, EstimateReport, Variant};
use crate::harness::{
    self, diff_tables, run_table, theory_table, ExperimentConfig, DEFAULT_REPETITIONS,
    FULL_REPETITIONS, TABLE2_N, TABLE3_N,
};
use crate::report::{write_csv, write_json, JsonReport, ReportRow, TableReport};
use crate::scalar::KFactor;
use crate::segmenter::Segmenter;
use crate::sources::{make_source, SourceKind, SourceSpec, Tokenization};
use crate::theory::{self, ClipModel, Kind, TheoryResult, Truncation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub const THREADS_ENV: &str = "COLLIDE_COUNT_THREADS";

/// Base seed for experiments when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 2017;

#[derive(Debug, Parser)]
#[command(
    name = "collide-count",
    version,
    about = "Estimate alphabet size from birthday-collision block sizes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate N from a token stream (file, stdin or synthetic).
    Estimate(EstimateArgs),
    /// Evaluate an analytical quantity.
    Theory(TheoryArgs),
    /// Reproduce one of the bias/CV tables.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("size").required(true).args(["l", "cv"])))]
pub struct EstimateArgs {
    /// Input file; omit or pass `-` for stdin.
    pub input: Option<PathBuf>,
    /// Number of blocks.
    #[arg(long)]
    pub l: Option<u64>,
    /// Target coefficient of variation; sets l = ceil(1.09 / cv^2).
    #[arg(long)]
    pub cv: Option<f64>,
    /// Memory limit: store at most this many symbols per block.
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long, default_value = "debiased")]
    pub variant: Variant,
    #[arg(long, default_value = "whitespace")]
    pub tokenization: Tokenization,
    /// Use a synthetic uniform source over this many symbols instead of input.
    #[arg(long, conflicts_with = "input")]
    pub synthetic: Option<u64>,
    /// Make the synthetic source power-law with this exponent.
    #[arg(long, requires = "synthetic")]
    pub skew: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed_for_synthetic: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Mean,
    Var,
    Tail,
    Pmf,
    CondMoment,
    Alpha,
    Eps1,
    Eps2,
    Cv,
    BlocksForCv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Form {
    #[default]
    Exact,
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub quantity: Quantity,
    #[arg(long)]
    pub n: Option<u64>,
    /// Threshold c (block size k for `pmf`).
    #[arg(long, conflicts_with = "k")]
    pub c: Option<u64>,
    /// Multiplier K; sets c = ceil(K sqrt(n)).
    #[arg(long)]
    pub k: Option<KFactor>,
    #[arg(long)]
    pub l: Option<u64>,
    /// Moment order for `cond-moment`.
    #[arg(long, default_value_t = 1)]
    pub j: u32,
    #[arg(long)]
    pub cv: Option<f64>,
    #[arg(long, value_enum, default_value_t = Form::Exact)]
    pub form: Form,
    /// Expansion terms for the asymptotic mean (2 or 5).
    #[arg(long, default_value_t = 2)]
    pub terms: u32,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub table: u8,
    /// Replications per cell (default 2000).
    #[arg(long, conflicts_with = "full")]
    pub reps: Option<u64>,
    /// Full-scale run: 20000 replications per cell.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Override the table's alphabet sizes (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<u64>>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Some(t),
            _ => {
                let _ = writeln!(
                    err,
                    "error: {THREADS_ENV} must be a positive integer, got {v:?}"
                );
                return EXIT_USAGE;
            }
        },
        Err(_) => None,
    };
    match dispatch(&cli, threads, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(
    cli: &Cli,
    threads: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    match &cli.command {
        Command::Estimate(args) => cmd_estimate(args, out, err),
        Command::Theory(args) => cmd_theory(args, out),
        Command::Experiment(args) => cmd_experiment(args, threads, out),
    }
}

#[derive(Debug, Serialize)]
struct EstimateOutput<'a> {
    #[serde(flatten)]
    report: &'a EstimateReport<f64>,
    warning: Option<String>,
}

pub fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let blocks = match (args.l, args.cv) {
        (Some(l), None) => l,
        (None, Some(cv)) => blocks_for_cv(cv)?,
        _ => return Err(invalid("exactly one of --l or --cv is required")),
    };
    let spec = match args.synthetic {
        Some(n) => SourceSpec {
            kind: match args.skew {
                Some(skew) => SourceKind::PowerLaw { skew },
                None => SourceKind::Uniform,
            },
            n,
            seed: args.seed_for_synthetic,
            tokenization: args.tokenization,
        },
        None => SourceSpec {
            kind: match &args.input {
                Some(p) if p.as_os_str() != "-" => SourceKind::File(p.clone()),
                _ => SourceKind::Stdin,
            },
            n: 0,
            seed: 0,
            tokenization: args.tokenization,
        },
    };
    let mut source = make_source(&spec)?;
    let sample = Segmenter::new().collect_sample(&mut *source, blocks, args.c)?;
    let report = estimate_from_sample::<f64>(&sample, args.variant, args.c)?;

    let warning = (report.clip_count > 0).then(|| {
        format!(
            "memory limit c={} was hit in {} of {} blocks; the estimate is biased low",
            args.c.unwrap_or_default(),
            report.clip_count,
            report.blocks
        )
    });

    if args.json {
        let payload = EstimateOutput {
            report: &report,
            warning,
        };
        serde_json::to_writer_pretty(&mut *out, &payload)?;
        writeln!(out)?;
    } else {
        writeln!(out, "N_hat    {}", report.n_hat)?;
        writeln!(out, "mean_w   {}", report.mean_w)?;
        writeln!(out, "l        {}", report.blocks)?;
        match report.limit {
            Some(c) => writeln!(out, "c        {c}")?,
            None => writeln!(out, "c        none")?,
        }
        writeln!(out, "Y        {}", report.clip_count)?;
        writeln!(out, "variant  {}", report.variant)?;
        if let Some(w) = &warning {
            writeln!(err, "warning: {w}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TheoryOutput {
    pub quantity: String,
    pub value: f64,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<u64>,
    /// `-100 * epsilon_2`, for `eps2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_percent: Option<f64>,
    /// Square root of the value, for `cv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, q: Quantity) -> Result<T> {
    v.ok_or_else(|| {
        let name = q
            .to_possible_value()
            .map(|p| p.get_name().to_string())
            .unwrap_or_default();
        invalid(format!("--quantity {name} requires --{flag}"))
    })
}

/// Evaluates the requested quantity in double precision.
pub fn evaluate(args: &TheoryArgs) -> Result<TheoryOutput> {
    let q = args.quantity;
    let n = || need(args.n, "n", q);
    let l = || need(args.l, "l", q);
    let threshold = || -> Result<u64> {
        match (args.c, args.k) {
            (Some(c), _) => Ok(c),
            (None, Some(k)) => Ok(k.limit_for(n()?)),
            (None, None) => Err(invalid(format!(
                "--quantity {} requires --c or --k",
                q.to_possible_value()
                    .map(|p| p.get_name().to_string())
                    .unwrap_or_default()
            ))),
        }
    };
    let uses_threshold = matches!(
        q,
        Quantity::Tail | Quantity::CondMoment | Quantity::Eps1 | Quantity::Eps2
    );
    let asymptotic = args.form == Form::Asymptotic;

    let result: TheoryResult<f64> = match q {
        Quantity::Mean if asymptotic => TheoryResult::asymptotic(theory::mean_w_asymptotic(
            n()?,
            Truncation::try_from(args.terms)?,
        )?),
        Quantity::Mean => TheoryResult::exact(theory::mean_w_exact(n()?)?),
        Quantity::Var if asymptotic => TheoryResult::asymptotic(theory::var_w_large_n(n()?)?),
        Quantity::Var => TheoryResult::exact(theory::var_w_exact(n()?)?),
        Quantity::Tail if asymptotic && args.n.is_none() => {
            let k = need(args.k, "k", q)?;
            TheoryResult::approximation(theory::tail_prob_approx_k(k.as_f64()))
        }
        Quantity::Tail if asymptotic => {
            TheoryResult::approximation(theory::tail_prob_approx(n()?, threshold()?)?)
        }
        Quantity::Tail => TheoryResult::exact(theory::tail_prob(n()?, threshold()?)),
        Quantity::Pmf => TheoryResult::exact(theory::pmf(n()?, need(args.c, "c", q)?)),
        Quantity::CondMoment => {
            TheoryResult::exact(theory::conditional_moment(n()?, args.j, threshold()?)?)
        }
        Quantity::Alpha if asymptotic => {
            TheoryResult::asymptotic(theory::bias_alpha_large_n(l()?)?)
        }
        Quantity::Alpha => TheoryResult::approximation(theory::bias_alpha(n()?, l()?)?),
        Quantity::Eps1 => TheoryResult::exact(ClipModel::new(n()?)?.epsilon1(threshold()?)?),
        Quantity::Eps2 => {
            TheoryResult::approximation(ClipModel::new(n()?)?.epsilon2(threshold()?)?)
        }
        Quantity::Cv if asymptotic => TheoryResult::asymptotic(theory::cv_squared_large_n(l()?)?),
        Quantity::Cv => TheoryResult::approximation(theory::cv_squared(n()?, l()?)?),
        Quantity::BlocksForCv => {
            TheoryResult::asymptotic(blocks_for_cv(need(args.cv, "cv", q)?)? as f64)
        }
    };

    let c = if uses_threshold && !(q == Quantity::Tail && asymptotic && args.n.is_none()) {
        Some(threshold()?)
    } else {
        None
    };
    Ok(TheoryOutput {
        quantity: q
            .to_possible_value()
            .map(|p| p.get_name().to_string())
            .unwrap_or_default(),
        value: result.value,
        kind: result.kind,
        c,
        bias_percent: (q == Quantity::Eps2).then(|| -100.0 * result.value),
        cv: (q == Quantity::Cv).then(|| result.value.sqrt()),
    })
}

pub fn cmd_theory(args: &TheoryArgs, out: &mut dyn Write) -> Result<()> {
    let res = evaluate(args)?;
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &res)?;
        writeln!(out)?;
        return Ok(());
    }
    let kind = match res.kind {
        Kind::Exact => "exact",
        Kind::Asymptotic => "asymptotic",
        Kind::Approximation => "approximation",
    };
    writeln!(out, "{} = {} ({kind})", res.quantity, res.value)?;
    if let Some(c) = res.c {
        writeln!(out, "c = {c}")?;
    }
    if let Some(b) = res.bias_percent {
        writeln!(out, "bias = {b:.2}%")?;
    }
    if let Some(cv) = res.cv {
        writeln!(out, "cv = {cv}")?;
    }
    Ok(())
}

/// Builds the requested table(s). Table 4 returns tables 2, 3 and 4.
pub fn build_tables(args: &ExperimentArgs) -> Result<Vec<TableReport>> {
    let reps = match (args.full, args.reps) {
        (true, _) => FULL_REPETITIONS,
        (false, Some(r)) => r,
        (false, None) => DEFAULT_REPETITIONS,
    };
    let rows_of =
        |cells: &[harness::CellResult]| cells.iter().map(ReportRow::from).collect::<Vec<_>>();
    let k_values = harness::table_k_values();

    Ok(match args.table {
        1 => {
            let mut cfg = ExperimentConfig::table1(reps, args.seed);
            if let Some(ns) = &args.n_values {
                cfg.n_values = ns.clone();
            }
            vec![TableReport {
                table: 1,
                rows: rows_of(&run_table(&cfg)?),
            }]
        }
        2 => {
            let mut cfg = ExperimentConfig::table2(reps, args.seed);
            if let Some(ns) = &args.n_values {
                cfg.n_values = ns.clone();
            }
            vec![TableReport {
                table: 2,
                rows: rows_of(&run_table(&cfg)?),
            }]
        }
        3 => {
            let ns = args.n_values.clone().unwrap_or_else(|| TABLE3_N.to_vec());
            let cells = theory_table(&ns, &k_values)?;
            vec![TableReport {
                table: 3,
                rows: cells.iter().map(ReportRow::from).collect(),
            }]
        }
        4 => {
            let ns = args.n_values.clone().unwrap_or_else(|| TABLE2_N.to_vec());
            let mut cfg = ExperimentConfig::table2(reps, args.seed);
            cfg.n_values = ns.clone();
            let empirical = run_table(&cfg)?;
            let theoretical = theory_table(&ns, &k_values)?;
            let diff = diff_tables(&empirical, &theoretical)?;
            vec![
                TableReport {
                    table: 2,
                    rows: rows_of(&empirical),
                },
                TableReport {
                    table: 3,
                    rows: theoretical.iter().map(ReportRow::from).collect(),
                },
                TableReport {
                    table: 4,
                    rows: diff.iter().map(ReportRow::from).collect(),
                },
            ]
        }
        t => return Err(invalid(format!("unknown table {t}"))),
    })
}

/// Runs the experiment on a pool of `threads` workers (rayon's default when `None`).
pub fn cmd_experiment(
    args: &ExperimentArgs,
    threads: Option<usize>,
    out: &mut dyn Write,
) -> Result<()> {
    let tables = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| invalid(e.to_string()))?
            .install(|| build_tables(args))?,
        None => build_tables(args)?,
    };
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?)),
        None => Box::new(&mut *out),
    };
    match args.format {
        Format::Csv => {
            let last = tables.last().map(|t| t.rows.as_slice()).unwrap_or_default();
            write_csv(&mut sink, last)?;
        }
        Format::Json => write_json(&mut sink, &JsonReport::new(tables))?,
    }
    sink.flush()?;
    Ok(())
}
