//! Coreference chains over utterances: a light capitalized-mention heuristic
//! and a JSONL sidecar loader for externally produced chains.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Transcript, Utterance};
use crate::error::{Error, Result};
use crate::preprocess::StopList;

/// Maximum utterance distance between a mention and the antecedent it links to.
pub const ANTECEDENT_WINDOW: usize = 5;

/// Utterance indices mentioning one entity, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefChain {
    pub chain_id: String,
    pub mentions: Vec<usize>,
}

const PRONOUNS: &[&str] = &[
    "he", "him", "his", "himself", "she", "her", "hers", "herself", "they", "them", "their", "theirs",
    "themselves",
];

const INTERJECTIONS: &[&str] = &[
    "ah", "aw", "bye", "god", "gosh", "hello", "hey", "hi", "hmm", "huh", "oh", "okay", "ok", "oops",
    "please", "sorry", "thanks", "uh", "uhm", "um", "well", "whoa", "wow", "yeah", "yep", "yes",
];

enum Token {
    Mention(String),
    Pronoun,
}

fn classify(word: &str, stoplist: &StopList) -> Option<Token> {
    let lower = word.to_lowercase();
    if PRONOUNS.contains(&lower.as_str()) {
        return Some(Token::Pronoun);
    }
    let mut chars = word.chars();
    let capitalized = chars.next().is_some_and(char::is_uppercase);
    let shouted = word.chars().all(|c| !c.is_lowercase());
    if !capitalized
        || shouted
        || word.chars().count() < 2
        || stoplist.contains(&lower)
        || INTERJECTIONS.contains(&lower.as_str())
    {
        return None;
    }
    Some(Token::Mention(lower))
}

/// Chains built from capitalized mentions. A third-person pronoun links to the
/// most recent preceding capitalized mention within [`ANTECEDENT_WINDOW`]
/// utterances; a repeated name extends its chain under the same distance
/// limit and starts a new one otherwise. Only chains spanning at least two
/// utterances are returned, ordered by first mention.
pub fn heuristic_chains(utterances: &[Utterance]) -> Vec<CorefChain> {
    let stoplist = StopList::default();
    let mut chains: Vec<BTreeSet<usize>> = Vec::new();
    let mut open: BTreeMap<String, usize> = BTreeMap::new();
    let mut last_mention: Option<(usize, usize)> = None;

    let within = |from: usize, to: usize| to - from <= ANTECEDENT_WINDOW;

    for (u, utt) in utterances.iter().enumerate() {
        for word in utt.text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            match classify(word, &stoplist) {
                Some(Token::Mention(entity)) => {
                    let chain = match open.get(&entity) {
                        Some(&c) if within(*chains[c].last().expect("chains are never empty"), u) => c,
                        _ => {
                            chains.push(BTreeSet::new());
                            open.insert(entity, chains.len() - 1);
                            chains.len() - 1
                        }
                    };
                    chains[chain].insert(u);
                    last_mention = Some((chain, u));
                }
                Some(Token::Pronoun) => {
                    if let Some((chain, at)) = last_mention {
                        if within(at, u) {
                            chains[chain].insert(u);
                        }
                    }
                }
                None => {}
            }
        }
    }

    chains
        .into_iter()
        .filter(|c| c.len() >= 2)
        .enumerate()
        .map(|(i, mentions)| CorefChain {
            chain_id: format!("h{i}"),
            mentions: mentions.into_iter().collect(),
        })
        .collect()
}

pub trait ChainProvider: Send + Sync {
    fn chains(&self, transcript: &Transcript) -> Vec<CorefChain>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicChains;

impl ChainProvider for HeuristicChains {
    fn chains(&self, transcript: &Transcript) -> Vec<CorefChain> {
        heuristic_chains(&transcript.utterances)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChainId {
    Text(String),
    Number(i64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainRecord {
    doc_id: String,
    chain_id: ChainId,
    mentions: Vec<usize>,
}

/// Chains read from a sidecar file, keyed by document.
#[derive(Debug, Clone, Default)]
pub struct AnnotatedChains {
    pub by_doc: BTreeMap<String, Vec<CorefChain>>,
}

impl ChainProvider for AnnotatedChains {
    fn chains(&self, transcript: &Transcript) -> Vec<CorefChain> {
        self.by_doc.get(&transcript.doc_id).cloned().unwrap_or_default()
    }
}

/// Reads a JSONL file of `{doc_id, chain_id, mentions}` records. Mentions are
/// sorted and deduplicated.
pub fn load_chain_file(path: &Path) -> Result<AnnotatedChains> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_chain_jsonl(&content, path)
}

pub(crate) fn parse_chain_jsonl(content: &str, path: &Path) -> Result<AnnotatedChains> {
    let mut out = AnnotatedChains::default();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: PathBuf::from(path),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut mentions = record.mentions;
        mentions.sort_unstable();
        mentions.dedup();
        out.by_doc.entry(record.doc_id).or_default().push(CorefChain {
            chain_id: match record.chain_id {
                ChainId::Text(s) => s,
                ChainId::Number(n) => n.to_string(),
            },
            mentions,
        });
    }
    Ok(out)
}
