//! Text analysis shared by index build and query time.
//!
//! Four analyzer modes, each a strict extension of the previous pipeline:
//!
//! | mode        | pipeline                                           |
//! |-------------|----------------------------------------------------|
//! | `Minimal`   | lowercase, split on non-alphanumeric, drop empties |
//! | `Stopword`  | `Minimal` + built-in English stopword removal      |
//! | `Full`      | `Stopword` + light suffix stripping (see below)    |
//! | `PorterFull`| `Minimal` + stopwords + Porter stemming            |
//!
//! Light suffix stripping (`Full`) applies the first matching rule:
//!
//! * `-ing` removed when at least 3 characters remain
//! * `-ed` removed when at least 3 characters remain
//! * `-es` removed when at least 3 characters remain
//! * `-s` removed when at least 3 characters remain and the token does not
//!   end in `-ss`

mod porter;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use porter::stem as porter_stem;

/// Environment variable overriding the configured analyzer mode.
pub const MODE_ENV: &str = "HYBRID_TOK_MODE";

const STOPWORDS_RAW: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    Minimal,
    Stopword,
    Full,
    #[default]
    #[serde(alias = "nltk", alias = "porter")]
    PorterFull,
}

impl TokenizerMode {
    pub const ALL: [TokenizerMode; 4] = [
        TokenizerMode::Minimal,
        TokenizerMode::Stopword,
        TokenizerMode::Full,
        TokenizerMode::PorterFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenizerMode::Minimal => "minimal",
            TokenizerMode::Stopword => "stopword",
            TokenizerMode::Full => "full",
            TokenizerMode::PorterFull => "porter_full",
        }
    }

    /// Stable one-byte code used in persisted index headers.
    pub fn code(self) -> u8 {
        match self {
            TokenizerMode::Minimal => 0,
            TokenizerMode::Stopword => 1,
            TokenizerMode::Full => 2,
            TokenizerMode::PorterFull => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Applies the `HYBRID_TOK_MODE` override, if set, on top of `configured`.
    pub fn with_env_override(configured: TokenizerMode) -> Result<TokenizerMode, Error> {
        match std::env::var(MODE_ENV) {
            Ok(v) if !v.trim().is_empty() => v.parse(),
            _ => Ok(configured),
        }
    }
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minimal" => Ok(TokenizerMode::Minimal),
            "stopword" | "stopwords" => Ok(TokenizerMode::Stopword),
            "full" => Ok(TokenizerMode::Full),
            "porter_full" | "porter" | "nltk" => Ok(TokenizerMode::PorterFull),
            other => Err(Error::Config(format!("unknown tokenizer mode `{other}`"))),
        }
    }
}

/// The built-in stopword list, in file order.
pub fn stopword_list() -> Vec<&'static str> {
    STOPWORDS_RAW
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| stopword_list().into_iter().collect())
}

pub fn is_stopword(term: &str) -> bool {
    stopwords().contains(term)
}

fn split_minimal(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase().filter(|c| c.is_alphanumeric()));
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Light suffix stripping used by [`TokenizerMode::Full`].
pub fn strip_suffix_light(term: &str) -> String {
    let n = term.chars().count();
    for suffix in ["ing", "ed", "es"] {
        if term.ends_with(suffix) && n >= suffix.len() + 3 {
            return term[..term.len() - suffix.len()].to_string();
        }
    }
    if term.ends_with('s') && !term.ends_with("ss") && n >= 4 {
        return term[..term.len() - 1].to_string();
    }
    term.to_string()
}

/// Tokenizes `text` under `mode`. Total and deterministic; every emitted
/// term is lowercase and non-empty.
pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<String> {
    let raw = split_minimal(text);
    match mode {
        TokenizerMode::Minimal => raw,
        TokenizerMode::Stopword => raw.into_iter().filter(|t| !is_stopword(t)).collect(),
        TokenizerMode::Full => raw
            .into_iter()
            .filter(|t| !is_stopword(t))
            .map(|t| strip_suffix_light(&t))
            .filter(|t| !t.is_empty())
            .collect(),
        TokenizerMode::PorterFull => raw
            .into_iter()
            .filter(|t| !is_stopword(t))
            .map(|t| porter::stem(&t))
            .filter(|t| !t.is_empty())
            .collect(),
    }
}
