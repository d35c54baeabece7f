mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Personality inventories, induction prompts and vignette studies for
/// text-generation models.
#[derive(Parser, Debug)]
#[command(name = "mpi", version, about)]
pub struct Cli {
    /// Model profiles file (JSON list). Defaults to $MPI_PROFILES, then
    /// ./profiles.json when present.
    #[arg(long, global = true)]
    pub profiles: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Administer an inventory to a model and write an OCEAN report.
    Evaluate(EvaluateArgs),
    /// Build a personality-inducing prompt.
    Induce(InduceArgs),
    /// Rank candidate trait words by the score they induce.
    SearchWords(SearchWordsArgs),
    /// Run the vignette rating study.
    #[command(subcommand)]
    Vignette(VignetteCommand),
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Profile name, `scripted:levels=O,C,E,A,N[;echo=TEXT]` or `replay:PATH`.
    #[arg(long)]
    pub model: String,
    /// Inventory file (.json or .csv), or `builtin:mpi120` / `builtin:short15`.
    #[arg(long)]
    pub inventory: String,
    /// Inventory file format; guessed from the extension when absent.
    #[arg(long, value_parser = ["json", "csv"])]
    pub format: Option<String>,
    /// Built-in template id or template file.
    #[arg(long)]
    pub template: Option<String>,
    /// Personality prompt file (JSON) or a plain-text prefix.
    #[arg(long)]
    pub persona_prompt: Option<PathBuf>,
    /// Ask the model to justify each answer and keep the reasons.
    #[arg(long)]
    pub explain: bool,
    /// Add a comparison against the human reference.
    #[arg(long)]
    pub compare_human: bool,
    /// Abort when more than this fraction of answers is unparseable.
    #[arg(long, default_value_t = 0.2)]
    pub max_invalid: f64,
    /// Also write every raw answer as JSON lines.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InduceArgs {
    #[arg(long, value_parser = ["p2", "naive", "words"])]
    pub method: String,
    #[arg(long = "trait")]
    pub trait_: String,
    #[arg(long, allow_hyphen_values = true)]
    pub polarity: String,
    /// Model that writes the portrait (p2) or is evaluated (words).
    #[arg(long)]
    pub model: Option<String>,
    /// Lexicon file layered over the built-in adjectives.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Where negative keywords come from.
    #[arg(long, value_parser = ["lexicon", "model"], default_value = "lexicon")]
    pub antonyms: String,
    /// Inventory for the words method.
    #[arg(long, default_value = "builtin:short15")]
    pub inventory: String,
    /// Number of words kept by the words method.
    #[arg(short, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchWordsArgs {
    #[arg(long)]
    pub eval_model: String,
    #[arg(long = "trait")]
    pub trait_: String,
    #[arg(long, allow_hyphen_values = true, default_value = "+")]
    pub polarity: String,
    /// Candidate words: a JSON list or one word per line.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub inventory: String,
    #[arg(short, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum VignetteCommand {
    /// Write essays into the session and build the questionnaire once all
    /// fifteen cells exist.
    Generate(GenerateArgs),
    /// Serve the rating API for a session.
    Serve(ServeArgs),
    /// Compute success rates from the ratings log.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long)]
    pub model: String,
    /// Personality prompt files; neutral essays are written when none is given.
    #[arg(long)]
    pub prompt: Vec<PathBuf>,
    /// Also write neutral essays when prompts are given.
    #[arg(long)]
    pub neutral: bool,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub session: PathBuf,
    /// Extra copy of the report; it is always written to the session.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
