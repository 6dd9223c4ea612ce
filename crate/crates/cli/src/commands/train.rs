use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use docembed::model::EncoderModel;
use docembed::text::{build_vocab, encode, load_word_vectors, read_corpus, tokenize, WordTable};
use docembed::train::{fit, EpochStats, TrainError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::Bundle;
use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Debug, Args)]
pub struct TrainArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set train.epochs=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Word vectors get their own stream so that changing the model shape does
/// not change them.
const WORD_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn run(args: &TrainArgs) -> Result<Vec<EpochStats>, CliError> {
    let config = RunConfig::load(&args.config, &args.overrides)?;
    let resolved = config.to_toml();
    log::info!("resolved config:\n{resolved}");

    let raw = read_corpus(&config.data.corpus, false)
        .map_err(|e| CliError::Data(format!("{}: {e}", config.data.corpus.display())))?;
    let tokens: Vec<Vec<String>> = raw.par_iter().map(|d| tokenize(&d.text, &config.tokenizer)).collect();
    let vocab = build_vocab(&tokens, config.data.min_count)?;
    let docs: Vec<Vec<u32>> = raw
        .iter()
        .zip(&tokens)
        .filter_map(|(d, t)| encode(t, &vocab, d.id, d.label).ok().map(|doc| doc.word_ids))
        .collect();
    if docs.len() < raw.len() {
        log::warn!("{} empty lines ignored", raw.len() - docs.len());
    }
    log::info!("{} documents, vocabulary of {} ids", docs.len(), vocab.len());

    let seed = config.train.seed;
    let mut word_rng = ChaCha8Rng::seed_from_u64(seed ^ WORD_SEED_SALT);
    let words = match &config.data.vectors {
        Some(path) => {
            let (table, report) = load_word_vectors(
                path,
                &vocab,
                config.model.dim,
                config.data.vector_format.as_deref(),
                &mut word_rng,
            )
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            log::info!(
                "loaded {} vectors ({} format), coverage {:.3}",
                report.file_records,
                report.format,
                report.coverage
            );
            table
        }
        None => match config.data.init_scale {
            Some(bound) => WordTable::uniform(vocab.len(), config.model.dim, bound, &mut word_rng),
            None => WordTable::random(vocab.len(), config.model.dim, &mut word_rng),
        },
    };
    let mut model = EncoderModel::build(&config.model, words, seed)?;
    log::info!("encoder parameters: {}", model.parameter_count());

    let out = &config.output.dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), &resolved)?;
    let mut vocab_file = File::create(out.join("vocab.txt"))?;
    vocab.write_to(&mut vocab_file)?;
    let mut log_file = File::create(out.join("train.log"))?;

    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let every = config.train.checkpoint_every;
    let mut bundle = Bundle {
        model: model.clone(),
        vocab,
        tokenizer: config.tokenizer.clone(),
    };
    let history = fit(&mut model, &refs, &config.train, |stats, m| {
        writeln!(log_file, "{}", stats.log_line()).map_err(|e| TrainError::Observer(e.to_string()))?;
        if every > 0 && stats.epoch % every == 0 {
            bundle.model = m.clone();
            bundle
                .save(&out.join(format!("checkpoint-{}.cne", stats.epoch)))
                .map_err(|e| TrainError::Observer(e.to_string()))?;
        }
        Ok(())
    })?;
    bundle.model = model;
    bundle.save(&out.join("model.cne"))?;
    Ok(history)
}
