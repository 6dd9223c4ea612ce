use std::process::ExitCode;

use clap::{Parser, Subcommand};
use docembed_cli::commands::{bench, embed, eval, retrieve, train};
use docembed_cli::CliError;

/// Unsupervised document embeddings with a gated convolutional encoder.
#[derive(Debug, Parser)]
#[command(name = "docembed", version)]
struct Cli {
    /// Worker threads; 1 makes every command bit-for-bit reproducible.
    #[arg(long, global = true, env = "DOCEMBED_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the vocabulary and train an encoder from a run config.
    Train(train::TrainArgs),
    /// Embed one document per input line.
    Embed(embed::EmbedArgs),
    /// Print the corpus documents most similar to a query.
    Retrieve(retrieve::RetrieveArgs),
    /// Train a shallow classifier on frozen embeddings and report accuracy.
    Eval(eval::EvalArgs),
    /// Measure inference throughput in tokens per second.
    Bench(bench::BenchArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Train(a) => {
            let history = train::run(&a)?;
            if let Some(last) = history.last() {
                println!("{}", last.log_line());
            }
        }
        Command::Embed(a) => {
            let n = embed::run(&a)?;
            log::info!("wrote {n} embeddings to {}", a.output.display());
        }
        Command::Retrieve(a) => {
            for hit in retrieve::run(&a)? {
                println!("{}", hit.line());
            }
        }
        Command::Eval(a) => print!("{}", eval::run(&a)?),
        Command::Bench(a) => {
            println!("{}", bench::HEADER);
            for row in bench::run(&a)? {
                println!("{row}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("docembed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
