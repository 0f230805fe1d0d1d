//! Dialogue data model and corpus loading.
//!
//! A [`Transcript`] is the segmentable sequence of speech turns of one
//! document. Stage directions ("notes") are not part of that sequence; they
//! are kept aside as markers and, together with scene changes, define the
//! gold topic boundaries.
//!
//! Boundary indexing is shared by every module of the crate: boundary `g`
//! separates utterance `g - 1` from utterance `g`, so valid boundaries lie in
//! `1..=n-1`.

mod character_mining;
mod native;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use character_mining::{parse_character_mining, AttachedNotes, CharacterMiningOptions};
pub use native::{parse_native_jsonl, write_native_jsonl, NativeRecord};

/// One speech turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    /// Position in the document, notes excluded.
    pub index: usize,
    /// Empty for speakerless narration.
    pub speaker: String,
    pub text: String,
}

/// A stage direction, kept out of the utterance sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    /// Index of the utterance this note precedes (`n` when it trails the document).
    pub before: usize,
    pub scene_id: String,
    pub text: String,
}

/// A maximal run of entries sharing one scene id. `start..end` is the
/// utterance range; it may be empty for a scene made only of notes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub start: usize,
    pub end: usize,
}

/// Entry of a source document before notes are split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEntry {
    pub speaker: String,
    pub text: String,
    pub is_note: bool,
    pub scene_id: String,
}

impl RawEntry {
    pub fn turn(scene_id: &str, speaker: &str, text: &str) -> Self {
        RawEntry {
            speaker: speaker.to_string(),
            text: text.to_string(),
            is_note: false,
            scene_id: scene_id.to_string(),
        }
    }

    pub fn note(scene_id: &str, text: &str) -> Self {
        RawEntry {
            speaker: String::new(),
            text: text.to_string(),
            is_note: true,
            scene_id: scene_id.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub doc_id: String,
    pub utterances: Vec<Utterance>,
    pub notes: Vec<Note>,
    pub scenes: Vec<Scene>,
    pub gold_boundaries: BTreeSet<usize>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Scene `(start, end)` utterance ranges, end exclusive.
    pub fn scene_spans(&self) -> Vec<(usize, usize)> {
        self.scenes.iter().map(|s| (s.start, s.end)).collect()
    }

    pub fn gold_segmentation(&self) -> Result<crate::eval::Segmentation> {
        crate::eval::Segmentation::new(self.len(), self.gold_boundaries.iter().copied())
    }

    /// Rebuilds the raw entry sequence, notes interleaved at their positions.
    pub fn raw_entries(&self) -> Vec<RawEntry> {
        let mut scene_of = vec![""; self.len()];
        for scene in &self.scenes {
            for slot in &mut scene_of[scene.start..scene.end] {
                *slot = &scene.id;
            }
        }
        let mut out = Vec::with_capacity(self.len() + self.notes.len());
        let mut notes = self.notes.iter().peekable();
        for u in &self.utterances {
            while let Some(note) = notes.next_if(|n| n.before <= u.index) {
                out.push(RawEntry::note(&note.scene_id, &note.text));
            }
            out.push(RawEntry::turn(scene_of[u.index], &u.speaker, &u.text));
        }
        out.extend(notes.map(|n| RawEntry::note(&n.scene_id, &n.text)));
        out
    }
}

/// Distinct speakers of one transcript, in order of first appearance.
/// Narration (empty speaker) is not a speaker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpeakerTable {
    pub speakers: Vec<String>,
    pub first_appearance: BTreeMap<String, usize>,
}

impl SpeakerTable {
    pub fn from_utterances(utterances: &[Utterance]) -> Self {
        let mut table = SpeakerTable::default();
        for u in utterances.iter().filter(|u| !u.speaker.is_empty()) {
            if !table.first_appearance.contains_key(&u.speaker) {
                table.first_appearance.insert(u.speaker.clone(), u.index);
                table.speakers.push(u.speaker.clone());
            }
        }
        table
    }

    pub fn from_transcript(transcript: &Transcript) -> Self {
        Self::from_utterances(&transcript.utterances)
    }
}

/// Splits notes off a raw entry sequence and derives gold boundaries.
///
/// A note yields a boundary at the gap preceding the first utterance after
/// it; a scene change yields a boundary at the first utterance of the new
/// scene. Boundaries that would fall at or outside the document edges are
/// dropped, and coinciding boundaries collapse (set semantics).
pub fn derive_gold_boundaries(doc_id: &str, raw_entries: &[RawEntry]) -> Result<Transcript> {
    let mut utterances = Vec::new();
    let mut notes = Vec::new();
    let mut scenes: Vec<Scene> = Vec::new();
    let mut gold = BTreeSet::new();

    for entry in raw_entries {
        let position = utterances.len();
        if scenes.last().is_none_or(|s| s.id != entry.scene_id) {
            scenes.push(Scene {
                id: entry.scene_id.clone(),
                start: position,
                end: position,
            });
            gold.insert(position);
        }
        if entry.is_note {
            notes.push(Note {
                before: position,
                scene_id: entry.scene_id.clone(),
                text: entry.text.trim().to_string(),
            });
            gold.insert(position);
            continue;
        }
        let text = entry.text.trim();
        if text.is_empty() {
            return Err(Error::InvalidDocument(format!(
                "`{doc_id}`: speech turn {position} has empty text"
            )));
        }
        utterances.push(Utterance {
            index: position,
            speaker: entry.speaker.trim().to_string(),
            text: text.to_string(),
        });
        if let Some(scene) = scenes.last_mut() {
            scene.end = utterances.len();
        }
    }

    if utterances.is_empty() {
        return Err(Error::EmptyDocument {
            doc_id: doc_id.to_string(),
        });
    }
    let n = utterances.len();
    gold.retain(|&g| g >= 1 && g < n);

    Ok(Transcript {
        doc_id: doc_id.to_string(),
        utterances,
        notes,
        scenes,
        gold_boundaries: gold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    NativeJsonl,
    CharacterMiningJson,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native-jsonl" | "native" | "jsonl" => Ok(CorpusFormat::NativeJsonl),
            "character-mining-json" | "character-mining" | "cm" => {
                Ok(CorpusFormat::CharacterMiningJson)
            }
            other => Err(Error::Config(format!(
                "unknown corpus format `{other}` (expected native-jsonl or character-mining-json)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::NativeJsonl => "native-jsonl",
            CorpusFormat::CharacterMiningJson => "character-mining-json",
        })
    }
}

impl CorpusFormat {
    fn extension(self) -> &'static str {
        match self {
            CorpusFormat::NativeJsonl => "jsonl",
            CorpusFormat::CharacterMiningJson => "json",
        }
    }
}

/// Files a corpus path expands to: the file itself, or every file with the
/// format's extension directly inside the directory, sorted by name.
pub fn corpus_files(path: &Path, format: CorpusFormat) -> Result<Vec<PathBuf>> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|ext| ext == format.extension()) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Transcript>> {
    load_corpus_with(path, format, &CharacterMiningOptions::default())
}

pub fn load_corpus_with(
    path: &Path,
    format: CorpusFormat,
    cm_options: &CharacterMiningOptions,
) -> Result<Vec<Transcript>> {
    let files = corpus_files(path, format)?;
    let per_file: Vec<Result<Vec<Transcript>>> = files
        .par_iter()
        .map(|file| load_file(file, format, cm_options))
        .collect();
    let mut out = Vec::new();
    for docs in per_file {
        out.extend(docs?);
    }
    Ok(out)
}

pub fn load_file(
    path: &Path,
    format: CorpusFormat,
    cm_options: &CharacterMiningOptions,
) -> Result<Vec<Transcript>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::NativeJsonl => parse_native_jsonl(&content, path),
        CorpusFormat::CharacterMiningJson => parse_character_mining(&content, path, cm_options),
    }
}
