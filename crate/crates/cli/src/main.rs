//! `mathcorpus`: extract, corpus, mlm-train, sr and report.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

mod cmd;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Mathematical expression corpora and language-model-guided symbolic regression.
#[derive(Debug, Parser)]
#[command(name = "mathcorpus", version)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract <math> expressions from a pages-articles XML dump into JSONL.
    Extract(cmd::extract::Args),
    /// Parse extracted LaTeX into a token corpus.
    Corpus(cmd::corpus::Args),
    /// Train the language model on a corpus.
    MlmTrain(cmd::mlm_train::Args),
    /// Run symbolic-regression benchmarks.
    Sr(cmd::sr::Args),
    /// Summarize metrics CSVs into a comparison table.
    Report(cmd::report::Args),
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

pub type Outcome = Result<(), Failure>;

/// Classifies an error as an input error.
pub fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

/// Classifies an error as an internal error.
pub fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let deterministic = matches!(&cli.command, Command::Extract(a) if a.deterministic);
    let jobs = if deterministic { Some(1) } else { cli.jobs };
    if let Some(n) = jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Extract(a) => cmd::extract::run(a),
        Command::Corpus(a) => cmd::corpus::run(a),
        Command::MlmTrain(a) => cmd::mlm_train::run(a),
        Command::Sr(a) => cmd::sr::run(a),
        Command::Report(a) => cmd::report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(e) | Failure::Internal(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
