//! Line-delimited native format: one JSON object per entry, keys exactly
//! `{doc_id, index, speaker, text, is_note, scene_id}`. Consecutive lines with
//! the same `doc_id` form one document; `index` counts entries (notes
//! included) from 0 within the document.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_gold_boundaries, RawEntry, Transcript};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeRecord {
    pub doc_id: String,
    pub index: usize,
    pub speaker: String,
    pub text: String,
    pub is_note: bool,
    pub scene_id: String,
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

pub fn parse_native_jsonl(content: &str, path: &Path) -> Result<Vec<Transcript>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<(String, usize, Vec<RawEntry>)> = None;

    let finish = |doc: Option<(String, usize, Vec<RawEntry>)>, docs: &mut Vec<Transcript>| {
        if let Some((doc_id, first_line, entries)) = doc {
            let transcript = derive_gold_boundaries(&doc_id, &entries)
                .map_err(|e| parse_error(path, first_line, 1, e.to_string()))?;
            docs.push(transcript);
        }
        Ok::<_, Error>(())
    };

    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: NativeRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, line_no, e.column(), e.to_string()))?;

        let starts_new = current
            .as_ref()
            .is_none_or(|(id, _, _)| *id != record.doc_id);
        if starts_new {
            finish(current.take(), &mut docs)?;
            if !seen.insert(record.doc_id.clone()) {
                return Err(parse_error(
                    path,
                    line_no,
                    1,
                    format!("doc_id `{}` appears in two separate runs", record.doc_id),
                ));
            }
            current = Some((record.doc_id.clone(), line_no, Vec::new()));
        }
        let (_, _, entries) = current.as_mut().expect("document started above");
        if record.index != entries.len() {
            return Err(parse_error(
                path,
                line_no,
                1,
                format!(
                    "expected index {} in document `{}`, found {}",
                    entries.len(),
                    record.doc_id,
                    record.index
                ),
            ));
        }
        if !record.is_note && record.text.trim().is_empty() {
            return Err(parse_error(path, line_no, 1, "speech turn with empty text"));
        }
        entries.push(RawEntry {
            speaker: record.speaker,
            text: record.text,
            is_note: record.is_note,
            scene_id: record.scene_id,
        });
    }
    finish(current.take(), &mut docs)?;
    Ok(docs)
}

pub fn native_records(transcript: &Transcript) -> Vec<NativeRecord> {
    transcript
        .raw_entries()
        .into_iter()
        .enumerate()
        .map(|(index, e)| NativeRecord {
            doc_id: transcript.doc_id.clone(),
            index,
            speaker: e.speaker,
            text: e.text,
            is_note: e.is_note,
            scene_id: e.scene_id,
        })
        .collect()
}

pub fn write_native_jsonl<W: Write>(out: &mut W, transcripts: &[Transcript]) -> std::io::Result<()> {
    for t in transcripts {
        for record in native_records(t) {
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
