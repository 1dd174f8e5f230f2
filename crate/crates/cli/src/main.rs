//! `chr`: run Constraint Handling Rules programs and analyse them.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "chr", version, about = "Constraint Handling Rules interpreter and analyser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a goal against a program.
    Run(RunArgs),
    /// Static analyses.
    #[command(subcommand)]
    Analyze(Analysis),
    /// The bundled example programs.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

/// Options shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for randomized choices; the CHR_SEED environment variable wins.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of rule applications (rounds for --parallel).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Maximum number of states per exhaustive search.
    #[arg(long)]
    pub bound: Option<usize>,
    /// Guard residues are instantiated over -grid..=grid.
    #[arg(long)]
    pub grid: Option<i64>,
}

#[derive(Args, Debug)]
#[group(id = "mode", multiple = false)]
pub struct Mode {
    /// Deterministic refined execution (the default).
    #[arg(long)]
    pub refined: bool,
    /// Seeded random choice among applicable rule instances.
    #[arg(long = "abstract")]
    pub abstract_: bool,
    /// All normal forms reachable under the abstract semantics.
    #[arg(long)]
    pub exhaustive: bool,
    /// Parallel rounds of up to W compatible instances.
    #[arg(long, value_name = "W")]
    pub parallel: Option<usize>,
    /// Any registered strategy by name.
    #[arg(long)]
    pub strategy: Option<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Program file, or corpus:<name> for a bundled program.
    pub program: String,
    /// Goal, or @<file> to read it from a file. Defaults to the fixture goal
    /// for corpus programs.
    pub goal: Option<String>,
    #[command(flatten)]
    pub mode: Mode,
    /// Print every rule application.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Debug)]
pub enum Analysis {
    /// Critical pairs and the confluence verdict.
    Confluence {
        program: String,
        #[command(flatten)]
        common: Common,
    },
    /// Add rules for non-joinable critical pairs.
    Complete {
        program: String,
        /// Ranking file that orients the new rules.
        #[arg(long)]
        ranking: String,
        /// Maximum number of completion rounds.
        #[arg(long)]
        iterations: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Operational equivalence of two programs.
    Equiv {
        first: String,
        second: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rules whose removal leaves an equivalent program.
    Redundant {
        program: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a ranking decreases on every rule.
    Ranking {
        program: String,
        #[arg(long)]
        ranking: String,
        /// Random instances per rule when linear reasoning does not apply.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// The O(D^h) derivation-length bound.
    Complexity {
        program: String,
        /// Goal whose refined derivation length is measured.
        #[arg(long)]
        measure: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusCommand {
    /// List the bundled programs.
    List,
    /// Run every fixture and compare with its expected result.
    RunAll {
        #[command(flatten)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Analyze(a) => commands::analyze(a),
        Command::Corpus(c) => commands::corpus(c),
    };
    ExitCode::from(code)
}
