//! Tweet normalization and tokenization.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::FeatureError;

static ENTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?P<url>(?:https?://|www\.)\S+)|(?P<user>@[\p{L}\p{N}_]+)").unwrap()
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub lowercase: bool,
    pub url_token: String,
    pub user_token: String,
    pub strip_control: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            lowercase: true,
            url_token: "<url>".into(),
            user_token: "<user>".into(),
            strip_control: true,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        for token in [&self.url_token, &self.user_token] {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(FeatureError::InvalidConfig(format!(
                    "replacement token `{token}` must be non-empty and contain no whitespace"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    Word,
    Symbol,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() || c == '_' {
        CharClass::Word
    } else {
        CharClass::Symbol
    }
}

enum Piece<'a> {
    Plain(&'a str),
    Url,
    User,
}

/// Splits text into plain stretches and URL / mention entities.
fn pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut last = 0;
    for caps in ENTITY.captures_iter(text) {
        let m = caps.get(0).unwrap();
        let is_user = caps.name("user").is_some();
        // `a@b` is not a mention
        if is_user
            && text[..m.start()]
                .chars()
                .next_back()
                .is_some_and(|c| classify(c) == CharClass::Word)
        {
            continue;
        }
        if m.start() > last {
            out.push(Piece::Plain(&text[last..m.start()]));
        }
        out.push(if is_user { Piece::User } else { Piece::Url });
        last = m.end();
    }
    if last < text.len() {
        out.push(Piece::Plain(&text[last..]));
    }
    out
}

fn strip_controls(text: &str, config: &NormalizationConfig) -> String {
    if config.strip_control {
        text.chars()
            .filter(|c| !c.is_control() || c.is_whitespace())
            .collect()
    } else {
        text.to_string()
    }
}

fn case(s: &str, config: &NormalizationConfig) -> String {
    if config.lowercase {
        s.to_lowercase()
    } else {
        s.to_string()
    }
}

/// Tokenizes a tweet: URLs and @-mentions become the configured
/// placeholder tokens, the rest splits on whitespace and on word/symbol
/// boundaries. Runs of punctuation or symbols (including emoji) are kept
/// as single tokens.
pub fn tokenize(text: &str, config: &NormalizationConfig) -> Vec<String> {
    let cleaned = strip_controls(text, config);
    let mut tokens = Vec::new();
    for piece in pieces(&cleaned) {
        match piece {
            Piece::Url => tokens.push(config.url_token.clone()),
            Piece::User => tokens.push(config.user_token.clone()),
            Piece::Plain(s) => {
                let mut start = None;
                let mut current = CharClass::Space;
                for (pos, c) in s.char_indices() {
                    let class = classify(c);
                    if class != current {
                        if let Some(st) = start.take() {
                            tokens.push(case(&s[st..pos], config));
                        }
                        if class != CharClass::Space {
                            start = Some(pos);
                        }
                        current = class;
                    }
                }
                if let Some(st) = start {
                    tokens.push(case(&s[st..], config));
                }
            }
        }
    }
    tokens
}

/// Normalized surface string for character n-grams: placeholders
/// substituted, case folded, whitespace runs collapsed to one space.
pub fn normalize_text(text: &str, config: &NormalizationConfig) -> String {
    let cleaned = strip_controls(text, config);
    let mut joined = String::with_capacity(cleaned.len());
    for piece in pieces(&cleaned) {
        match piece {
            Piece::Url => joined.push_str(&config.url_token),
            Piece::User => joined.push_str(&config.user_token),
            Piece::Plain(s) => joined.push_str(&case(s, config)),
        }
    }
    joined.split_whitespace().collect::<Vec<_>>().join(" ")
}
