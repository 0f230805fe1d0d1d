//! Tokenization, stop-word filtering, optional stemming, and grouping of
//! utterances into spans of roughly `w` tokens.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::corpus::Utterance;
use crate::error::{Error, Result};

const BUILTIN_STOPLIST: &str = include_str!("stopwords_en.txt");

/// Version tag of the built-in stop list; bump whenever its contents change.
pub const STOPLIST_VERSION: &str = "en-v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
    version: String,
}

impl Default for StopList {
    fn default() -> Self {
        Self::parse(BUILTIN_STOPLIST, STOPLIST_VERSION)
    }
}

impl StopList {
    fn parse(content: &str, version: &str) -> Self {
        let words = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopList {
            words,
            version: version.to_string(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&content, &format!("file:{}", path.display())))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub stemming: bool,
    /// Replacement stop list; the built-in list is used when absent.
    pub stoplist: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedUtterance {
    pub utterance_index: usize,
    pub speaker: String,
    pub tokens: Vec<String>,
    pub content_tokens: Vec<String>,
    pub ends_with_question: bool,
}

/// Lowercased alphanumeric word tokens in order. Any non-alphanumeric
/// character separates tokens, so "don't" yields `["don", "t"]`.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Whether the text, once trailing quotes and closing brackets are trimmed,
/// ends with a question mark.
pub fn ends_with_question(text: &str) -> bool {
    text.trim_end_matches(|c: char| {
        c.is_whitespace() || matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201D}' | '\u{2019}')
    })
    .ends_with('?')
}

#[derive(Default)]
pub struct Preprocessor {
    stoplist: StopList,
    stemmer: Option<Stemmer>,
}

impl std::fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stoplist", &self.stoplist.version)
            .field("stemming", &self.stemmer.is_some())
            .finish()
    }
}


impl Preprocessor {
    pub fn new(options: &PreprocessOptions) -> Result<Self> {
        let stoplist = match &options.stoplist {
            Some(path) => StopList::from_file(path)?,
            None => StopList::default(),
        };
        Ok(Self::with_stoplist(stoplist, options.stemming))
    }

    pub fn with_stoplist(stoplist: StopList, stemming: bool) -> Self {
        Preprocessor {
            stoplist,
            stemmer: stemming.then(|| Stemmer::create(Algorithm::English)),
        }
    }

    pub fn stoplist(&self) -> &StopList {
        &self.stoplist
    }

    /// The scoring form of a token, or `None` for a stop word.
    pub fn content_form(&self, token: &str) -> Option<String> {
        if self.stoplist.contains(token) {
            return None;
        }
        Some(match &self.stemmer {
            Some(stemmer) => stemmer.stem(token).into_owned(),
            None => token.to_string(),
        })
    }

    pub fn tokenize(&self, utterance: &Utterance) -> TokenizedUtterance {
        let tokens = word_tokens(&utterance.text);
        let content_tokens = tokens.iter().filter_map(|t| self.content_form(t)).collect();
        TokenizedUtterance {
            utterance_index: utterance.index,
            speaker: utterance.speaker.clone(),
            tokens,
            content_tokens,
            ends_with_question: ends_with_question(&utterance.text),
        }
    }

    pub fn tokenize_all(&self, utterances: &[Utterance]) -> Vec<TokenizedUtterance> {
        utterances.iter().map(|u| self.tokenize(u)).collect()
    }
}

pub fn tokenize(utterance: &Utterance, options: &PreprocessOptions) -> Result<TokenizedUtterance> {
    Ok(Preprocessor::new(options)?.tokenize(utterance))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub span_index: usize,
    /// First utterance index (inclusive).
    pub first: usize,
    /// Last utterance index (inclusive).
    pub last: usize,
    pub token_count: usize,
    /// Turns per speaker; narration is not counted.
    pub speaker_counts: BTreeMap<String, usize>,
}

impl Span {
    pub fn utterance_range(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn turns(&self) -> usize {
        self.speaker_counts.values().sum()
    }
}

/// Greedy left-to-right grouping: the open span is closed before utterance
/// `u` whenever adding `u` would not bring its token count strictly closer to
/// `w`. Spans never split an utterance. Sizing uses all tokens, stop words
/// included; an utterance with no word token counts as one token.
pub fn build_spans(utterances: &[TokenizedUtterance], w: usize) -> Vec<Span> {
    assert!(w >= 1, "span size must be positive");
    let target = w as i64;
    let mut spans = Vec::new();
    let mut open: Option<(usize, i64)> = None;

    for (i, u) in utterances.iter().enumerate() {
        let size = u.tokens.len().max(1) as i64;
        open = match open {
            Some((start, count)) if (count - target).abs() > (count + size - target).abs() => {
                Some((start, count + size))
            }
            Some((start, _)) => {
                spans.push(make_span(utterances, spans.len(), start, i - 1));
                Some((i, size))
            }
            None => Some((i, size)),
        };
    }
    if let Some((start, _)) = open {
        spans.push(make_span(utterances, spans.len(), start, utterances.len() - 1));
    }
    spans
}

fn make_span(utterances: &[TokenizedUtterance], span_index: usize, first: usize, last: usize) -> Span {
    let members = &utterances[first..=last];
    let mut speaker_counts = BTreeMap::new();
    for u in members.iter().filter(|u| !u.speaker.is_empty()) {
        *speaker_counts.entry(u.speaker.clone()).or_insert(0) += 1;
    }
    Span {
        span_index,
        first,
        last,
        token_count: members.iter().map(|u| u.tokens.len()).sum(),
        speaker_counts,
    }
}
