use std::path::{Path, PathBuf};

use clap::Args;
use docembed::eval::{
    evaluate_accuracy, export_embeddings, label_mapping, label_mapping_names, train_classifier,
    AccuracyReport, ClassifierConfig, EmbeddingRow,
};
use docembed::text::read_corpus;

use crate::bundle::Bundle;
use crate::CliError;

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labeled training split, `label<TAB>text` per line.
    #[arg(long)]
    pub train: PathBuf,
    /// Labeled test split.
    #[arg(long)]
    pub test: PathBuf,
    /// Name printed in the report.
    #[arg(long, default_value = "sentiment")]
    pub task: String,
    /// Label mapping: `identity`, `amazon_binary` or `amazon_five`.
    #[arg(long, default_value = "identity")]
    pub labels: String,
    #[arg(long, default_value_t = ClassifierConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = ClassifierConfig::default().seed)]
    pub seed: u64,
    /// Also write the test embeddings with their labels as TSV.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

struct Split {
    ids: Vec<usize>,
    raw_labels: Vec<i64>,
    classes: Vec<usize>,
    vectors: Vec<Vec<f32>>,
}

fn load_split(bundle: &Bundle, path: &Path, mapping: &str, batch: usize) -> Result<Split, CliError> {
    let map = label_mapping(mapping).ok_or_else(|| {
        CliError::Config(format!(
            "unknown label mapping `{mapping}` (known: {})",
            label_mapping_names().join(", ")
        ))
    })?;
    let raw = read_corpus(path, true).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut split = Split {
        ids: Vec::new(),
        raw_labels: Vec::new(),
        classes: Vec::new(),
        vectors: Vec::new(),
    };
    let mut docs = Vec::new();
    for d in &raw {
        let label = d.label.expect("labels required");
        let class = map
            .map(label)
            .map_err(|m| CliError::Data(format!("{}: line {}: {m}", path.display(), d.id + 1)))?;
        if let Some(c) = class {
            split.ids.push(d.id);
            split.raw_labels.push(label);
            split.classes.push(c);
            docs.push(bundle.encode_text(&d.text));
        }
    }
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    if !refs.is_empty() {
        split.vectors = bundle.model.embed_many(&refs, batch)?;
    }
    Ok(split)
}

pub fn run(args: &EvalArgs) -> Result<AccuracyReport, CliError> {
    let bundle = Bundle::load(&args.checkpoint)?;
    let train = load_split(&bundle, &args.train, &args.labels, args.batch_size)?;
    let test = load_split(&bundle, &args.test, &args.labels, args.batch_size)?;
    let config = ClassifierConfig {
        epochs: args.epochs,
        seed: args.seed,
        ..Default::default()
    };
    let (clf, curve) = train_classifier(&train.vectors, &train.classes, &config)?;
    if let Some(last) = curve.last() {
        log::info!("classifier training accuracy {last:.4}");
    }
    let accuracy = evaluate_accuracy(&clf, &test.vectors, &test.classes)?;
    if let Some(path) = &args.export {
        let rows: Vec<EmbeddingRow> = test
            .ids
            .iter()
            .zip(&test.raw_labels)
            .zip(&test.vectors)
            .map(|((&id, &label), v)| EmbeddingRow {
                id,
                label: Some(label),
                vector: v.clone(),
            })
            .collect();
        export_embeddings(path, &rows)?;
    }
    Ok(AccuracyReport {
        task: args.task.clone(),
        train_size: train.ids.len(),
        test_size: test.ids.len(),
        accuracy,
    })
}
