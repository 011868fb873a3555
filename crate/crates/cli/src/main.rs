use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Parser)]
#[command(name = "multdim", version, about = "Dimension bounds for multiplicatively invariant symbolic sets")]
struct Cli {
    /// Worker thread cap.
    #[arg(long, global = true, env = "MULTDIM_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Include wall time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    /// Triangle row DP when the constraint family supports it, depth-first otherwise.
    Auto,
    Dfs,
    Triangle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Uniform,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lower,
    Upper,
}

#[derive(Args)]
pub struct SpecArg {
    /// Constraint spec JSON file.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// List the semigroup elements l_k.
    Semigroup {
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<u64>,
        #[arg(long, conflicts_with = "bound", required_unless_present = "bound")]
        count: Option<usize>,
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Prefix counts A_1..A_K.
    Count {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = CountMethod::Dfs)]
        method: CountMethod,
    },
    /// Minkowski dimension interval from the first K counts.
    Minkowski {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        depth: usize,
        /// Series terms; defaults to depth - 1.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        ratio_lo: Option<f64>,
        #[arg(long)]
        ratio_hi: Option<f64>,
        #[arg(long, value_enum, default_value_t = CountMethod::Auto)]
        method: CountMethod,
    },
    /// Hausdorff dimension bracket from the depth-N t-system.
    Hausdorff {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        depth: usize,
        /// Materialize the tree instead of streaming.
        #[arg(long)]
        table: bool,
        /// Node budget for table mode.
        #[arg(long, default_value_t = multdim::hausdorff::TABLE_NODE_CAP)]
        node_cap: usize,
    },
    /// Entropy series of a tree measure.
    Variational {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = MeasureArg::Uniform)]
        measure: MeasureArg,
        /// Boundary closure for the optimal measure.
        #[arg(long, value_enum, default_value_t = ModeArg::Lower)]
        mode: ModeArg,
    },
    /// Draw a prefix x_1..x_n.
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        length: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Depth of the tree measure.
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = MeasureArg::Optimal)]
        measure: MeasureArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Lower)]
        mode: ModeArg,
        /// Check the emitted word against the constraints.
        #[arg(long)]
        verify: bool,
    },
    /// Check a word against the constraints.
    Verify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, conflicts_with = "word_file", required_unless_present = "word_file")]
        word: Option<String>,
        #[arg(long)]
        word_file: Option<PathBuf>,
    },
    /// Determinism type of a ternary digit function.
    Classify {
        /// Eight 0/1 characters for (x,y,z) = 000..111; 1 marks an allowed triple.
        #[arg(long)]
        truth_table: String,
        #[arg(long, requires = "q")]
        p: Option<u64>,
        #[arg(long, requires = "p")]
        q: Option<u64>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let budget =
        err.chain().any(|e| matches!(e.downcast_ref::<multdim::Error>(), Some(multdim::Error::ResourceBudget(_))));
    if budget {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let start = Instant::now();
    let outcome = commands::run(cli.command, argv);
    match outcome {
        Ok(mut out) => {
            if cli.timing {
                out.report.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            for w in &out.report.warnings {
                eprintln!("warning: {w}");
            }
            let text = match cli.format {
                Format::Json => out.report.to_json() + "\n",
                Format::Csv => out.csv,
            };
            // a closed pipe downstream is not an error of ours
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if let Some(msg) = out.failure {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
