use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ewens_tree_cli::commands::{self, ConsistencyArgs, Format, Outcome, Status, UsageError};
use ewens_tree_cli::verify::{inverted_repeat_increment, Hooks, Level};
use ewens_tree_core::field::{FieldPlacement, FieldTable, InverseTemperature, DEFAULT_BUDGET};
use ewens_tree_core::tree::{Spin, TreeAddress};
use ewens_tree_core::MutationRate;

#[derive(Parser)]
#[command(
    name = "ewens-tree",
    version,
    about = "Ewens distribution on regular trees"
)]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Ewens sampling formula over all partitions of n.
    Esf {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Positive rational, e.g. 2, 5/2 or 0.5.
        #[arg(long)]
        theta: MutationRate,
    },
    /// Chinese restaurant process draws against the exact law.
    Sample {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        theta: MutationRate,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for a sup-norm term of the Ewens potential above a bound.
    Summability {
        #[arg(long)]
        theta: MutationRate,
        #[arg(long)]
        bound: f64,
        #[arg(long, default_value_t = 10_000)]
        n_max: u64,
    },
    /// Marginal consistency of one growth step.
    Consistency {
        /// `ball:k,r` or a JSON region file.
        #[arg(long)]
        region: String,
        /// Added vertex: `root` or comma-separated child indices.
        #[arg(long)]
        vertex: TreeAddress,
        #[arg(long)]
        theta: MutationRate,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        q: u32,
        /// JSON field table; defaults to the zero field.
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Solve for the fields at the added vertex first.
        #[arg(long)]
        solve: bool,
        #[arg(long, value_enum, default_value = "growth-pair")]
        placement: Placement,
        /// Largest number of configurations to enumerate.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Run the invariant suites.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: Level,
        #[arg(long, value_enum, hide = true)]
        mutate: Option<Mutation>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    GrowthPair,
    InnerBoundary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mutation {
    InvertRepeatFactor,
}

fn run(cli: Cli) -> Result<Outcome, UsageError> {
    let format = cli.format;
    match cli.command {
        Command::Esf { n, theta } => commands::esf(n as usize, &theta, format),
        Command::Sample {
            n,
            theta,
            count,
            seed,
        } => commands::sample(n as usize, &theta, count as usize, seed, format),
        Command::Summability {
            theta,
            bound,
            n_max,
        } => commands::summability(&theta, bound, n_max, format),
        Command::Consistency {
            region,
            vertex,
            theta,
            beta,
            q,
            fields,
            solve,
            placement,
            budget,
        } => {
            let args = ConsistencyArgs {
                region: commands::parse_region(&region)?,
                vertex,
                theta,
                beta: InverseTemperature::new(beta)?,
                q: q as Spin,
                fields: match fields {
                    Some(path) => commands::read_fields(&path)?,
                    None => FieldTable::uniform(),
                },
                placement: match placement {
                    Placement::GrowthPair => FieldPlacement::GrowthPair,
                    Placement::InnerBoundary => FieldPlacement::InnerBoundary,
                },
                solve,
                budget,
            };
            commands::consistency(args, format)
        }
        Command::Verify { level, mutate } => {
            let hooks = match mutate {
                None => Hooks::default(),
                Some(Mutation::InvertRepeatFactor) => Hooks {
                    increment: inverted_repeat_increment,
                },
            };
            commands::verify(level, hooks, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.clone();
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &outcome.body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{}", outcome.body),
    }
    if let Some(note) = &outcome.note {
        eprintln!("{note}");
    }
    match outcome.status {
        Status::Success => ExitCode::SUCCESS,
        Status::Failure => ExitCode::from(1),
    }
}
