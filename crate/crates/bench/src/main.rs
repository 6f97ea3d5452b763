use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitfeas::problems::read_matrix;
use splitfeas_bench::experiment::{
    parse_algorithms, parse_list, run_experiment_with, ExperimentSpec, Family, RankSpec,
};
use splitfeas_bench::oracles::projection_suite;
use splitfeas_bench::report::{format_table, write_csv_file, AggregateRow};
use splitfeas_bench::verify::{verify_suite, VerifyOptions};
use splitfeas_bench::{BenchError, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;

/// Split feasibility experiments: completely positive and sparse factorization, outlier
/// detection, projection oracles and the verification suite.
#[derive(Parser)]
#[command(name = "splitfeas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Completely positive factorization of random (or given) matrices, or of G_lambda
    /// when --lambda is given.
    Cpfact(CpArgs),
    /// Orthogonal factor with column-sparse B Q for planted instances.
    Sparsefact(RunArgs),
    /// Sparse recovery with planted outliers.
    Outlier(RunArgs),
    /// Projections against brute-force and sampling oracles.
    Projtest(ProjArgs),
    /// Full property suite; exit code 2 on any failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated values of n.
    #[arg(long)]
    n: Option<String>,
    /// Rows of the measurement matrix (outlier).
    #[arg(long)]
    m: Option<usize>,
    /// Factor order, sparsity fraction or outlier count; forms 15, 1.5n, 3n+1, 0.7.
    /// Comma lists allowed.
    #[arg(long)]
    r: Option<String>,
    /// Sparsity.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated subset of dcls,dc,altproj,cq.
    #[arg(long)]
    algs: Option<String>,
    /// Write the aggregate rows to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration cap for every algorithm.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Only print errors.
    #[arg(short, long)]
    quiet: bool,
    /// Report zero CPU times so that output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CpArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated lambda values; switches to the G_lambda family.
    #[arg(long)]
    lambda: Option<String>,
    /// Initial point: identity or random.
    #[arg(long, default_value = "identity")]
    init: String,
    /// Random restarts per instance (default 100 for n <= 50, else 10).
    #[arg(long)]
    max_inits: Option<usize>,
    /// Factorize the matrix in this file ("rows cols" header, row-major entries).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Let alternating projections drift off the iterates' symmetry.
    #[arg(long)]
    no_symmetry_lock: bool,
}

#[derive(Args)]
struct ProjArgs {
    /// Largest ambient dimension.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Random inputs per projection.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    quiet: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    quiet: bool,
    /// Skip the stationarity runs on the experiment configurations.
    #[arg(long)]
    skip_stationarity: bool,
    /// Inflate c in the equivalence check by this factor (negative control).
    #[arg(long, default_value_t = 0.0, hide = true)]
    inject_c_excess: f64,
}

fn apply_run_args(spec: &mut ExperimentSpec, args: &RunArgs) -> Result<()> {
    if let Some(n) = &args.n {
        spec.sizes = parse_list(n, "n")?;
    }
    if let Some(m) = args.m {
        spec.m = Some(m);
    }
    if let Some(r) = &args.r {
        spec.ranks = r.split(',').map(str::parse::<RankSpec>).collect::<Result<_>>()?;
    }
    if let Some(s) = args.s {
        spec.sparsity = Some(s);
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(algs) = &args.algs {
        spec.algorithms = parse_algorithms(algs)?;
    }
    spec.seed = args.seed;
    spec.max_iter = args.max_iter;
    spec.timing = !args.no_timing;
    Ok(())
}

fn run_and_report(spec: &ExperimentSpec, args: &RunArgs) -> Result<()> {
    spec.validate()?;
    let quiet = args.quiet;
    let rows = run_experiment_with(spec, |row: &AggregateRow| {
        if !quiet {
            eprintln!(
                "{} {} n={} r={}{}: success {:.0}%",
                row.family,
                row.algorithm,
                row.n,
                row.r,
                row.lambda.map_or(String::new(), |l| format!(" lambda={l}")),
                row.success_pct
            );
        }
    })?
    .rows;
    if let Some(path) = &args.out {
        write_csv_file(path, &rows)?;
    }
    if !quiet {
        print!("{}", format_table(&rows));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Cpfact(args) => {
            let family = match (&args.lambda, args.init.as_str()) {
                (Some(_), _) => Family::CpGLambda,
                (None, "identity") => Family::CpIdentity,
                (None, "random") => Family::CpRandomInit,
                (None, other) => {
                    return Err(BenchError::Usage(format!("--init must be identity or random, got '{other}'")))
                }
            };
            let mut spec = ExperimentSpec::new(family);
            apply_run_args(&mut spec, &args.run)?;
            if let Some(l) = &args.lambda {
                spec.lambdas = parse_list(l, "lambda")?;
            }
            spec.max_inits = args.max_inits;
            spec.symmetry_lock = !args.no_symmetry_lock;
            if let Some(path) = &args.matrix {
                if family == Family::CpGLambda {
                    return Err(BenchError::Usage("--matrix and --lambda are exclusive".into()));
                }
                spec.matrix = Some(read_matrix(path)?);
            }
            run_and_report(&spec, &args.run)?;
            Ok(0)
        }
        Command::Sparsefact(args) => {
            let mut spec = ExperimentSpec::new(Family::SparseFact);
            apply_run_args(&mut spec, &args)?;
            run_and_report(&spec, &args)?;
            Ok(0)
        }
        Command::Outlier(args) => {
            let mut spec = ExperimentSpec::new(Family::Outlier);
            apply_run_args(&mut spec, &args)?;
            run_and_report(&spec, &args)?;
            Ok(0)
        }
        Command::Projtest(args) => {
            if args.n == 0 || args.trials == 0 {
                return Err(BenchError::Usage("--n and --trials must be positive".into()));
            }
            let reports = projection_suite(args.seed, args.trials, args.n);
            let mut ok = true;
            for r in &reports {
                ok &= r.passed();
                if !args.quiet || !r.passed() {
                    println!(
                        "{} {}: {} inputs, {} failures{}",
                        if r.passed() { "PASS" } else { "FAIL" },
                        r.kind,
                        r.inputs,
                        r.failures.len(),
                        r.failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
                    );
                }
            }
            Ok(if ok { 0 } else { EXIT_VERIFY })
        }
        Command::Verify(args) => {
            let report = verify_suite(&VerifyOptions {
                seed: args.seed,
                inject_c_excess: args.inject_c_excess,
                stationarity: !args.skip_stationarity,
            });
            for (line, check) in report.summary_lines().iter().zip(&report.checks) {
                if !args.quiet || !check.passed {
                    println!("{line}");
                }
            }
            if !args.quiet {
                eprintln!("verify finished in {:.1} s", report.elapsed);
            }
            Ok(if report.passed() { 0 } else { EXIT_VERIFY })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
