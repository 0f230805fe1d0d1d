//! Adapter for the Character Mining season files
//! (`season → episodes → scenes → utterances`). One transcript per episode.
//!
//! Fields consumed per utterance: `speakers`, `transcript` (speech only) and
//! `transcript_with_note` (speech with stage directions in parentheses or
//! brackets). All other fields are ignored.
//!
//! * An entry with no speech but a non-empty `transcript_with_note` is a
//!   standalone note.
//! * A speakerless entry whose text is entirely parenthesized or bracketed is
//!   a standalone note; any other speakerless text is narration.
//! * A speech turn whose `transcript_with_note` carries stage directions has
//!   an attached note. With [`AttachedNotes::Boundary`] (the default) that
//!   note is placed before the turn it is attached to.
//!
//! Multi-speaker turns are attributed to the first listed speaker.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_gold_boundaries, RawEntry, Transcript};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttachedNotes {
    /// Treat an attached stage direction as a note preceding its turn.
    #[default]
    Boundary,
    /// Only standalone notes count.
    Ignore,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterMiningOptions {
    #[serde(default)]
    pub attached_notes: AttachedNotes,
}

#[derive(Debug, Deserialize)]
struct Season {
    #[serde(default)]
    season_id: String,
    episodes: Vec<Episode>,
}

#[derive(Debug, Deserialize)]
struct Episode {
    episode_id: String,
    scenes: Vec<SceneRecord>,
}

#[derive(Debug, Deserialize)]
struct SceneRecord {
    scene_id: String,
    utterances: Vec<UtteranceRecord>,
}

#[derive(Debug, Deserialize)]
struct UtteranceRecord {
    #[serde(default)]
    speakers: Vec<String>,
    #[serde(default)]
    transcript: Option<String>,
    #[serde(default)]
    transcript_with_note: Option<String>,
}

/// True when the whole text is one or more `(...)` / `[...]` groups.
fn is_pure_direction(text: &str) -> bool {
    let text = text.trim();
    !text.is_empty() && strip_directions(text).trim().is_empty() && text.starts_with(['(', '['])
}

/// Removes parenthesized and bracketed groups (non-nested per kind, tolerant
/// of an unclosed trailing group).
fn strip_directions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

/// The parenthesized / bracketed groups of a text, in order.
fn directions(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | '[' => {
                depth += 1;
                current.push(c);
            }
            ')' | ']' if depth > 0 => {
                depth -= 1;
                current.push(c);
                if depth == 0 {
                    out.push(std::mem::take(&mut current));
                }
            }
            _ if depth > 0 => current.push(c),
            _ => {}
        }
    }
    out
}

fn episode_entries(episode: &Episode, options: &CharacterMiningOptions) -> Vec<RawEntry> {
    let mut entries = Vec::new();
    for scene in &episode.scenes {
        for u in &scene.utterances {
            let speech = u.transcript.as_deref().unwrap_or("").trim();
            let with_note = u.transcript_with_note.as_deref().unwrap_or("").trim();

            if speech.is_empty() {
                if !with_note.is_empty() {
                    entries.push(RawEntry::note(&scene.scene_id, with_note));
                }
                continue;
            }
            if u.speakers.is_empty() && is_pure_direction(speech) {
                entries.push(RawEntry::note(&scene.scene_id, speech));
                continue;
            }
            if options.attached_notes == AttachedNotes::Boundary {
                let attached = directions(with_note);
                if !attached.is_empty() {
                    entries.push(RawEntry::note(&scene.scene_id, &attached.join(" ")));
                }
            }
            let speaker = u.speakers.first().map(String::as_str).unwrap_or("");
            entries.push(RawEntry::turn(&scene.scene_id, speaker, speech));
        }
    }
    entries
}

pub fn parse_character_mining(
    content: &str,
    path: &Path,
    options: &CharacterMiningOptions,
) -> Result<Vec<Transcript>> {
    let season: Season = serde_json::from_str(content).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    log::debug!(
        "{}: season `{}` with {} episodes",
        path.display(),
        season.season_id,
        season.episodes.len()
    );
    let mut out = Vec::with_capacity(season.episodes.len());
    for episode in &season.episodes {
        let entries = episode_entries(episode, options);
        match derive_gold_boundaries(&episode.episode_id, &entries) {
            Ok(t) => out.push(t),
            Err(Error::EmptyDocument { doc_id }) => {
                log::warn!("{}: episode `{doc_id}` has no speech turns, skipped", path.display());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
