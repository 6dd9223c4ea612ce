use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Every character that is neither alphanumeric nor whitespace becomes
    /// its own token.
    pub split_punctuation: bool,
    /// Drop short `<...>` markup such as `<br />` before splitting.
    pub strip_markup: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_punctuation: true,
            strip_markup: true,
        }
    }
}

const MAX_TAG_LEN: usize = 32;

fn strip_markup(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        let close = tail
            .char_indices()
            .skip(1)
            .take(MAX_TAG_LEN)
            .find(|&(_, c)| c == '>' || c == '<');
        match close {
            Some((end, '>')) => {
                out.push(' ');
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('<');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn tokenize(text: &str, rules: &TokenizerConfig) -> Vec<String> {
    let cleaned;
    let mut text = text;
    if rules.strip_markup {
        cleaned = strip_markup(text);
        text = &cleaned;
    }
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if rules.split_punctuation && !ch.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        } else if rules.lowercase {
            current.extend(ch.to_lowercase());
        } else {
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
