//! Command implementations behind the `sortbench` binary.
//!
//! Each `cmd_*` function prints its own diagnostics and returns a
//! process exit code: 0 on verified success, 1 on runtime or
//! verification failure, 2 on usage errors.

pub mod plan_file;
pub mod report;

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use sortbench::bench::{
    emit_csv, parse_csv, run_cell, run_plan, BenchRecord, CellSpec, SortId, SubsortId,
};
use sortbench::sort::CutoffThreshold;
use sortbench::transport::Backend;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "sortbench",
    version,
    about = "Compare merge-sort parallelization strategies and benchmark them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate an input, run one sort, verify it, and print the time
    Run(RunArgs),
    /// Execute a benchmark plan file and write a CSV summary
    Bench(BenchArgs),
    /// Cross-check every algorithm against the native sort
    Verify(VerifyArgs),
    /// Derive plot-data files from a benchmark CSV
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Algorithm: seq, cutoff, sorted, mp, or mpi
    #[arg(long)]
    pub algo: String,
    /// Input size (mpi runs round it up to a multiple of the ranks)
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for mp, or per-rank subsort workers for mpi
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// World size for mpi; must be a power of two
    #[arg(long, default_value_t = 1)]
    pub ranks: usize,
    /// Subsort for mpi: sorted or mp
    #[arg(long, default_value = "sorted")]
    pub subsort: String,
    /// Cutoff threshold for the cutoff algorithm
    #[arg(long, default_value_t = 32)]
    pub cutoff: usize,
    #[command(flatten)]
    pub world: WorldArgs,
}

#[derive(Args, Debug)]
pub struct WorldArgs {
    /// Transport backend: in-process or socket
    #[arg(long, default_value = "in-process")]
    pub backend: String,
    /// World deadline in seconds
    #[arg(long, env = "SORTBENCH_TIMEOUT", default_value_t = 30)]
    pub timeout: u64,
    /// Rendezvous port for the socket backend (0 = ephemeral)
    #[arg(long, env = "SORTBENCH_PORT")]
    pub port: Option<u16>,
}

impl WorldArgs {
    fn backend(&self) -> Result<Backend, String> {
        self.backend.parse()
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout)
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Plan file (key=value grid; see the README)
    #[arg(long)]
    pub plan: PathBuf,
    /// Destination CSV
    #[arg(long, default_value = "sortbench.csv")]
    pub output: PathBuf,
    #[command(flatten)]
    pub world: WorldArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Cap sizes at 10^3 for a fast smoke check
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub world: WorldArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Benchmark CSV produced by `sortbench bench`
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the derived plot-data files
    #[arg(long, default_value = "report")]
    pub out_dir: PathBuf,
}

fn usage_error(message: &str) -> i32 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

/// Rounds `size` up to the next multiple of `ranks`.
pub fn round_up_to_multiple(size: usize, ranks: usize) -> usize {
    if ranks <= 1 || size.is_multiple_of(ranks) {
        size
    } else {
        size.div_ceil(ranks) * ranks
    }
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let algo: SortId = match args.algo.parse() {
        Ok(algo) => algo,
        Err(e) => return usage_error(&e),
    };
    let subsort: SubsortId = match args.subsort.parse() {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let backend = match args.world.backend() {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    if args.workers == 0 {
        return usage_error("--workers must be at least 1");
    }
    let cutoff = match CutoffThreshold::new(args.cutoff) {
        Some(c) => c,
        None => return usage_error("--cutoff must be at least 1"),
    };

    let mut size = args.size;
    if algo == SortId::Mpi {
        if !args.ranks.is_power_of_two() {
            return usage_error("--ranks must be a power of two for mpi");
        }
        let adjusted = round_up_to_multiple(size, args.ranks);
        if adjusted != size {
            println!("size {size} rounded up to {adjusted} (multiple of {} ranks)", args.ranks);
            size = adjusted;
        }
    }

    let spec = CellSpec {
        algo,
        subsort: if algo == SortId::Mpi { subsort } else { SubsortId::None },
        size,
        workers: args.workers,
        ranks: args.ranks,
        seed: args.seed,
        cutoff,
        backend,
        timeout: args.world.timeout(),
        port: args.world.port,
    };
    match run_cell(&spec) {
        Ok(seconds) => {
            println!("{} time={seconds:.3}s verified=yes", spec.describe());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> i32 {
    let backend = match args.world.backend() {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    let text = match fs::read_to_string(&args.plan) {
        Ok(text) => text,
        Err(e) => return usage_error(&format!("cannot read plan {}: {e}", args.plan.display())),
    };
    let parsed = match plan_file::parse_plan(&text, backend, args.world.timeout(), args.world.port) {
        Ok(parsed) => parsed,
        Err(e) => return usage_error(&format!("malformed plan: {e}")),
    };
    for note in &parsed.notes {
        println!("{note}");
    }

    let mut records: Vec<BenchRecord> = Vec::new();
    for plan in &parsed.plans {
        match run_plan(plan) {
            Ok(mut batch) => records.append(&mut batch),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
        }
    }

    let mut bytes = Vec::new();
    if let Err(e) = emit_csv(&records, &mut bytes) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    if let Err(e) = fs::write(&args.output, &bytes) {
        eprintln!("error: cannot write {}: {e}", args.output.display());
        return EXIT_FAILURE;
    }

    print_summary_table(&records);
    println!("wrote {} records to {}", records.len(), args.output.display());
    EXIT_OK
}

fn print_summary_table(records: &[BenchRecord]) {
    println!(
        "{:>4} {:>4} {:>10} {:>7} {:>8} {:>10} {:>9} {:>11}",
        "p", "c", "size", "sort", "subsort", "time", "speedup", "efficiency"
    );
    for r in records {
        println!(
            "{:>4} {:>4} {:>10} {:>7} {:>8} {:>10.3} {:>9} {:>11}",
            r.p,
            r.c,
            r.size,
            r.sort.as_str(),
            r.subsort.as_str(),
            r.time,
            r.speedup.map(|v| format!("{v:.3}")).unwrap_or_else(|| "---".into()),
            r.efficiency.map(|v| format!("{v:.3}")).unwrap_or_else(|| "---".into()),
        );
    }
}

/// One verification configuration: an algorithm plus its fixed worker
/// and rank shape.
struct VerifyConfig {
    label: String,
    algo: SortId,
    subsort: SubsortId,
    workers: usize,
    ranks: usize,
}

fn verify_matrix() -> Vec<VerifyConfig> {
    let mut configs = vec![
        VerifyConfig {
            label: "seq".into(),
            algo: SortId::Seq,
            subsort: SubsortId::None,
            workers: 1,
            ranks: 1,
        },
        VerifyConfig {
            label: "cutoff".into(),
            algo: SortId::Cutoff,
            subsort: SubsortId::None,
            workers: 1,
            ranks: 1,
        },
        VerifyConfig {
            label: "sorted".into(),
            algo: SortId::Sorted,
            subsort: SubsortId::None,
            workers: 1,
            ranks: 1,
        },
    ];
    for workers in [1, 2, 4, 8] {
        configs.push(VerifyConfig {
            label: format!("mp workers={workers}"),
            algo: SortId::Mp,
            subsort: SubsortId::None,
            workers,
            ranks: 1,
        });
    }
    for ranks in [1, 2, 4, 8] {
        configs.push(VerifyConfig {
            label: format!("mpi ranks={ranks} subsort=sorted"),
            algo: SortId::Mpi,
            subsort: SubsortId::Sorted,
            workers: 1,
            ranks,
        });
        configs.push(VerifyConfig {
            label: format!("mpi ranks={ranks} subsort=mp"),
            algo: SortId::Mpi,
            subsort: SubsortId::Mp,
            workers: 2,
            ranks,
        });
    }
    configs
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let backend = match args.world.backend() {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    let sizes: &[usize] = if args.quick {
        &[0, 1, 2, 10, 1_000]
    } else {
        &[0, 1, 2, 10, 1_000, 10_000]
    };
    let seeds: Vec<u64> = (42..52).collect();
    let started = Instant::now();
    let mut cases = 0usize;

    for config in verify_matrix() {
        for &size in sizes {
            for &seed in &seeds {
                let spec = CellSpec {
                    algo: config.algo,
                    subsort: config.subsort,
                    size: round_up_to_multiple(size, config.ranks),
                    workers: config.workers,
                    ranks: config.ranks,
                    seed,
                    cutoff: CutoffThreshold::default(),
                    backend,
                    timeout: args.world.timeout(),
                    port: args.world.port,
                };
                if let Err(e) = run_cell(&spec) {
                    eprintln!("FAIL {} size={size} seed={seed}: {e}", config.label);
                    return EXIT_FAILURE;
                }
                cases += 1;
            }
        }
        println!("ok   {}", config.label);
    }
    println!(
        "verified {cases} cases against the native sort in {:.1}s",
        started.elapsed().as_secs_f64()
    );
    EXIT_OK
}

pub fn cmd_report(args: &ReportArgs) -> i32 {
    let file = match fs::File::open(&args.input) {
        Ok(file) => file,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", args.input.display())),
    };
    let records = match parse_csv(file) {
        Ok(records) => records,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match report::generate_report(&records, &args.out_dir) {
        Ok(outcome) => {
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            for path in &outcome.files {
                println!("wrote {}", path.display());
            }
            println!("{} series files", outcome.files.len());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    }
}
