use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lccmsa_bench::config::{BenchConfig, ProblemConfig, TargetSpec};
use lccmsa_bench::records::parse_runs_csv;
use lccmsa_bench::report::{emit_report, summarize};
use lccmsa_bench::runner::run_suite;
use lccmsa_bench::BenchError;

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Benchmark runner for the linear-constraint evolution strategy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured problem grid and write reports.
    Run(RunArgs),
    /// Regenerate reports from an existing runs.csv.
    Report(ReportArgs),
    /// Single runs on the Klee-Minty cube over a dimension range.
    Kleeminty(KleemintyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for runs.csv, ecdf.csv, art.csv, summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Master seed (the LCCMSA_SEED environment variable wins over this).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker pool size; default uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing a runs.csv.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct KleemintyArgs {
    #[arg(long, default_value_t = 1)]
    min_dim: usize,
    #[arg(long, default_value_t = 15)]
    max_dim: usize,
    /// Output directory for the report files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write per-generation dynamics (`trace_kleeminty_n<dim>.csv`)
    /// into the output directory.
    #[arg(long, default_value_t = false)]
    trace: bool,
}

fn master_seed(cli_seed: u64) -> u64 {
    match std::env::var("LCCMSA_SEED") {
        Ok(text) => match text.parse() {
            Ok(seed) => seed,
            Err(_) => {
                eprintln!("warning: ignoring non-numeric LCCMSA_SEED value {text:?}");
                cli_seed
            }
        },
        Err(_) => cli_seed,
    }
}

fn print_summary(records: &[lccmsa_bench::RunRecord]) {
    println!(
        "{:<24} {:>4} {:>14} {:>14} {:>12} {:>8} {:>10}",
        "problem", "dim", "f_opt", "best_f", "error", "gens", "evals"
    );
    for entry in summarize(records) {
        let marker = if entry.error_is_relative {
            "rel"
        } else {
            "abs"
        };
        println!(
            "{:<24} {:>4} {:>14.6e} {:>14.6e} {:>9.3e} {marker} {:>8} {:>10}",
            entry.problem,
            entry.dim,
            entry.f_opt,
            entry.best_f,
            entry.error,
            entry.generations,
            entry.evals
        );
    }
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| BenchError::io(args.config.display().to_string(), e))?;
    let config = BenchConfig::parse(&text)?;
    let seed = master_seed(args.seed);
    let records = run_suite(&config, seed, args.jobs)?;
    emit_report(&records, &config.targets, &args.out)?;
    println!(
        "{} runs (master seed {seed}) -> {}",
        records.len(),
        args.out.display()
    );
    print_summary(&records);
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), BenchError> {
    let path = args.input.join("runs.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| BenchError::io(path.display().to_string(), e))?;
    let records = parse_runs_csv(&text)?;
    emit_report(&records, &TargetSpec::default(), &args.input)?;
    println!(
        "rebuilt reports for {} runs in {}",
        records.len(),
        args.input.display()
    );
    print_summary(&records);
    Ok(())
}

fn kleeminty(args: KleemintyArgs) -> Result<(), BenchError> {
    if args.min_dim < 1 || args.max_dim > 15 || args.min_dim > args.max_dim {
        return Err(BenchError::Config(
            "Klee-Minty dimensions must satisfy 1 <= min-dim <= max-dim <= 15".into(),
        ));
    }
    let config = BenchConfig {
        problems: vec![ProblemConfig {
            name: "kleeminty".into(),
            dims: (args.min_dim..=args.max_dim).collect(),
            instances: 1,
            constraints: vec![],
        }],
        budget_multiplier: None,
        params: Default::default(),
        targets: TargetSpec::default(),
    };
    let seed = master_seed(args.seed);
    let records = run_suite(&config, seed, args.jobs)?;
    emit_report(&records, &config.targets, &args.out)?;
    if args.trace {
        write_traces(args.min_dim, args.max_dim, seed, &args.out)?;
    }
    print_summary(&records);
    Ok(())
}

/// Dedicated traced runs for the dynamics plots: one CSV per dimension.
fn write_traces(
    min_dim: usize,
    max_dim: usize,
    seed: u64,
    out: &std::path::Path,
) -> Result<(), BenchError> {
    use lccmsa::es_core::{optimize_with_trace, GenerationTrace, ParamOverrides};
    use lccmsa::problems::klee_minty;
    use lccmsa_bench::report::trace_csv;
    use rand::SeedableRng;

    for dim in min_dim..=max_dim {
        let instance = klee_minty(dim)?;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ dim as u64);
        let (problem, _) = instance.to_standard_form(&mut rng)?;
        let mut rows: Vec<GenerationTrace> = Vec::new();
        let mut sink = |row: &GenerationTrace| rows.push(*row);
        optimize_with_trace(
            &problem,
            &ParamOverrides::default(),
            &mut rng,
            Some(&mut sink),
        )?;
        let path = out.join(format!("trace_kleeminty_n{dim}.csv"));
        std::fs::write(&path, trace_csv(&rows))
            .map_err(|e| BenchError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
        Command::Kleeminty(args) => kleeminty(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
