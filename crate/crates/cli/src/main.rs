//! `entperc`: runs one experiment and writes its data as CSV or JSON.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 a `verify`
//! suite exceeded its tolerance.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use commands::*;
use output::{write_csv, write_json, Metadata, Table};

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Check(String),
}

impl From<entperc::Error> for Failure {
    fn from(e: entperc::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "entperc", version, about = "Singlet generation in mixed-state quantum networks")]
pub struct Cli {
    /// Read the experiment from a TOML file instead of flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output file; `-` writes to stdout.
    #[arg(long, short, global = true, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads for trial parallelism.
    #[arg(long, global = true, env = "ENTPERC_THREADS")]
    pub threads: Option<usize>,
    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check closed forms against the density-matrix oracle.
    Verify(VerifyArgs),
    /// Singlet conversion probability of multi-copy distillation.
    Distill(DistillArgs),
    /// Spanning frequency and largest-cluster fraction over a p grid.
    Percolate(PercolateArgs),
    /// Finite-size bond percolation threshold.
    Threshold(ThresholdArgs),
    /// Route a singlet between two nodes of a singlet graph.
    Route(RouteArgs),
    /// Compare classical, direct and hybrid swapping over two bonds.
    Strategy(StrategyArgs),
    /// Hybrid square protocol against classical percolation.
    Square(SquareArgs),
    /// Diamond and tree hierarchies: classical recursion against hybrid.
    Hierarchy(HierarchyArgs),
}

fn run(cli: Cli, command_line: String) -> Result<(), Failure> {
    let Some(command) = cli.command else {
        return Err(Failure::Invalid("no subcommand given; see --help".into()));
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Invalid("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Invalid(format!("cannot size the worker pool: {e}")))?;
    }
    // open the sink before computing so a bad path fails fast
    let mut sink: Box<dyn Write> = if cli.output.as_os_str() == "-" {
        Box::new(io::stdout().lock())
    } else {
        let f = File::create(&cli.output)
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", cli.output.display())))?;
        Box::new(BufWriter::new(f))
    };
    let seed = cli.seed;
    let mut verdict = Ok(());
    let table: Table = match &command {
        Command::Verify(a) => {
            let (t, ok) = verify(a, seed)?;
            if !ok {
                verdict = Err(Failure::Check("an oracle suite exceeded its tolerance".into()));
            }
            t
        }
        Command::Distill(a) => distill(a, seed)?,
        Command::Percolate(a) => percolate(a, seed)?,
        Command::Threshold(a) => threshold(a, seed)?,
        Command::Route(a) => route(a, seed)?,
        Command::Strategy(a) => strategy(a)?,
        Command::Square(a) => square(a)?,
        Command::Hierarchy(a) => hierarchy(a, seed)?,
    };
    let meta = Metadata {
        seed,
        command_line,
        timestamp: (!cli.deterministic)
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
    };
    match cli.format {
        Format::Csv => write_csv(&mut sink, &table, &meta),
        Format::Json => write_json(&mut sink, &table, &meta),
    }
    .and_then(|()| sink.flush())
    .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", cli.output.display())))?;
    verdict
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let command_line = std::iter::once("entperc")
        .chain(raw.iter().skip(1).map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    let result = config::expand(raw).and_then(|argv| match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli, command_line),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(()),
                // clap has already explained the problem
                _ => Err(Failure::Invalid(String::new())),
            }
        }
    });
    match result {
        Err(Failure::Invalid(msg)) if msg.is_empty() => ExitCode::from(1),
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
