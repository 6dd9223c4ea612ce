//! A trained model together with the vocabulary and tokenizer settings it
//! was trained with, stored in one checkpoint file.

use std::path::Path;

use docembed::model::EncoderModel;
use docembed::tensor::{Container, TensorError};
use docembed::text::{tokenize, TokenizerConfig, Vocabulary, UNK_ID};

use crate::CliError;

pub struct Bundle {
    pub model: EncoderModel<f32>,
    pub vocab: Vocabulary,
    pub tokenizer: TokenizerConfig,
}

impl Bundle {
    pub fn to_container(&self) -> Container {
        let mut c = self.model.to_container();
        let mut vocab = Vec::new();
        self.vocab.write_to(&mut vocab).expect("writing to memory");
        c.insert_text("vocab", String::from_utf8(vocab).expect("vocabulary is UTF-8"));
        c.insert_text("tokenizer", toml::to_string(&self.tokenizer).expect("tokenizer serializes"));
        c
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        self.to_container()
            .save(path)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let c = Container::load(path).map_err(|e| match e {
            TensorError::Io(io) => CliError::Data(format!("cannot read {}: {io}", path.display())),
            other => CliError::Config(format!("{}: {other}", path.display())),
        })?;
        let text = |name: &str| {
            c.text(name)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        };
        let vocab = Vocabulary::read_from(text("vocab")?.as_bytes())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let tokenizer = toml::from_str(text("tokenizer")?)
            .map_err(|e| CliError::Config(format!("{}: tokenizer: {e}", path.display())))?;
        let model = EncoderModel::from_container(&c)?;
        if model.words.len() != vocab.len() {
            return Err(CliError::Config(format!(
                "vocabulary has {} ids but the word table has {} rows",
                vocab.len(),
                model.words.len()
            )));
        }
        Ok(Self {
            model,
            vocab,
            tokenizer,
        })
    }

    /// Word ids of `text`; text without any token becomes a single unknown
    /// word so that every input line gets an embedding.
    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        let ids: Vec<u32> = tokenize(text, &self.tokenizer)
            .iter()
            .map(|t| self.vocab.id(t))
            .collect();
        if ids.is_empty() {
            vec![UNK_ID]
        } else {
            ids
        }
    }
}
