use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use masa_cli::cex::{self, CandidateSource, PropagateArgs};
use masa_cli::document::{read_bytes, to_pretty, CliError};
use masa_cli::masa::{self, GenOptions, Outcome, VerifyMode};
use masa_core::numerics::TolerancePolicy;

#[derive(Parser)]
#[command(
    name = "invmasa",
    version,
    about = "Invariant masas on finite measure spaces and the rotation counterexample"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embedding, generation, verification and factorization of instances.
    #[command(subcommand)]
    Masa(MasaCommand),
    /// Sign automaton, rotation dynamics and the projection-field harness.
    #[command(subcommand)]
    Cex(CexCommand),
}

#[derive(Args)]
struct Tolerances {
    /// Equality tolerance.
    #[arg(long = "tol", default_value_t = 1e-9)]
    eps_eq: f64,
    /// Relative rank cutoff.
    #[arg(long = "rank-tol", default_value_t = 1e-8)]
    eps_rank: f64,
}

impl Tolerances {
    fn policy(&self) -> Result<TolerancePolicy, CliError> {
        TolerancePolicy::new(self.eps_eq, self.eps_rank)
            .ok_or_else(|| CliError::Schema("tolerances must be positive and finite".into()))
    }
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    input: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MasaCommand {
    /// Embed the instance's algebra into a U-invariant masa.
    Embed {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Emit a random instance with U* A U = A.
    Gen {
        /// Total dimension; with no --blocks, an upper bound for a random layout.
        #[arg(long = "dim")]
        dimension: Option<usize>,
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
        /// Block permutation: block j is carried onto block perm[j].
        #[arg(long, value_delimiter = ',')]
        perm: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Take V = I, so U is a pure composition operator.
        #[arg(long)]
        trivial_v: bool,
        /// Unit point masses.
        #[arg(long)]
        counting: bool,
        /// Scatter block points instead of laying blocks out contiguously.
        #[arg(long)]
        shuffle: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Check an algebra for the masa property and/or invariance.
    Verify {
        #[command(flatten)]
        io: Io,
        /// Document with a top-level "basis"; defaults to the instance's algebra.
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long, default_value = "both")]
        mode: VerifyMode,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Split U = V W.
    Factor {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        tol: Tolerances,
    },
}

#[derive(Subcommand)]
enum CexCommand {
    /// Dump the sign automaton's tables and partitions.
    Combinatorics {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare iterated first returns to J1 with the closed form.
    ReturnMap {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Orbit of the rotation and per-interval visit frequencies.
    Orbit {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// Omit the orbit points.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Invariance defect of a projection-field candidate along an orbit.
    Defect {
        #[arg(long)]
        a: f64,
        /// Candidate JSON {"breakpoints": [...], "projections": [...]}.
        #[arg(long, conflicts_with = "seed")]
        candidate: Option<PathBuf>,
        /// Draw a random piecewise candidate instead.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Use V = I instead of the standard field.
        #[arg(long)]
        control: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Propagate S(t + a) = ±V*(t) S(t) V(t) along an orbit.
    Propagate {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        e: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta_arg: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Omit the full trajectory.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Schema(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(outcome: Outcome, output: Option<&PathBuf>) -> Result<i32, CliError> {
    emit(&to_pretty(&outcome.document), output)?;
    Ok(outcome.exit_code)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Masa(cmd) => match cmd {
            MasaCommand::Embed { io, tol } => {
                finish(masa::embed(&read_bytes(&io.input)?, &tol.policy()?)?, io.output.as_ref())
            }
            MasaCommand::Gen { dimension, blocks, perm, seed, trivial_v, counting, shuffle, output, tol } => {
                let opts = GenOptions { dimension, blocks, perm, seed, trivial_v, counting, shuffle };
                emit(&to_pretty(&masa::gen(&opts, &tol.policy()?)?), output.as_ref())?;
                Ok(0)
            }
            MasaCommand::Verify { io, algebra, mode, tol } => {
                let algebra = algebra.map(|p| read_bytes(&p)).transpose()?;
                let out = masa::verify(&read_bytes(&io.input)?, algebra.as_deref(), mode, &tol.policy()?)?;
                finish(out, io.output.as_ref())
            }
            MasaCommand::Factor { io, tol } => {
                finish(masa::factor(&read_bytes(&io.input)?, &tol.policy()?)?, io.output.as_ref())
            }
        },
        Command::Cex(cmd) => match cmd {
            CexCommand::Combinatorics { output } => finish(cex::combinatorics(), output.as_ref()),
            CexCommand::ReturnMap { a, samples, seed, output } => {
                finish(cex::return_map(a, samples, seed)?, output.as_ref())
            }
            CexCommand::Orbit { a, t0, steps, stats, output } => {
                finish(cex::orbit_stats(a, t0, steps, stats)?, output.as_ref())
            }
            CexCommand::Defect { a, candidate, seed, t0, steps, control, output } => {
                let bytes = candidate.map(|p| read_bytes(&p)).transpose()?;
                let source = match (&bytes, seed) {
                    (Some(b), _) => CandidateSource::File(b),
                    (None, Some(s)) => CandidateSource::Seed(s),
                    (None, None) => return Err(CliError::Schema("one of --candidate or --seed is required".into())),
                };
                finish(cex::defect(a, source, t0, steps, control)?, output.as_ref())
            }
            CexCommand::Propagate { a, d, e, theta_arg, t0, steps, stats, output } => {
                let args = PropagateArgs { a, d, e, theta_arg, t0, steps, stats_only: stats };
                finish(cex::propagate(&args)?, output.as_ref())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("invmasa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
