//! Generators for synthetic dialogue corpora with known structure.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde_json::{json, Value};

use crate::corpus::{derive_gold_boundaries, RawEntry, Transcript};
use crate::preprocess::StopList;

/// Distinct lowercase pseudo-words, none of them a stop word.
pub fn pseudo_words<R: Rng + ?Sized>(rng: &mut R, count: usize, exclude: &BTreeSet<String>) -> Vec<String> {
    let stoplist = StopList::default();
    let mut seen = exclude.clone();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.random_range(5..=8);
        let word: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
        if !stoplist.contains(&word) && seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

/// Two halves of `per_half` utterances whose vocabularies are disjoint. Each
/// utterance holds `tokens` distinct words drawn from its half's vocabulary
/// of `vocab` words. The true switch is at gap `per_half`.
pub fn two_topic_document<R: Rng + ?Sized>(
    rng: &mut R,
    doc_id: &str,
    per_half: usize,
    tokens: usize,
    vocab: usize,
) -> Transcript {
    let left = pseudo_words(rng, vocab, &BTreeSet::new());
    let right = pseudo_words(rng, vocab, &left.iter().cloned().collect());
    let speakers = ["Ann", "Bob", "Cat"];
    let mut raw = Vec::with_capacity(2 * per_half);
    for words in [&left, &right] {
        for _ in 0..per_half {
            let text = words.choose_multiple(rng, tokens).cloned().collect::<Vec<_>>().join(" ");
            raw.push(RawEntry::turn("1", speakers.choose(rng).expect("non-empty"), &text));
        }
    }
    derive_gold_boundaries(doc_id, &raw).expect("generated document is valid")
}

const MAIN_CAST: [&str; 6] = ["Monica", "Rachel", "Ross", "Chandler", "Joey", "Phoebe"];
const FILLER: [&str; 24] = [
    "i", "you", "the", "a", "is", "it", "that", "we", "so", "and", "oh", "what", "just", "really",
    "know", "mean", "okay", "well", "but", "no", "yeah", "this", "to", "was",
];

/// Counts reported alongside a generated episode, taken while generating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpisodeStats {
    pub scenes: usize,
    pub turns: usize,
    pub standalone_notes: usize,
    pub attached_notes: usize,
}

fn sentence<R: Rng + ?Sized>(rng: &mut R, topic: &[String], names: &[&str]) -> String {
    let len = rng.random_range(3..=16);
    let mut words: Vec<String> = (0..len)
        .map(|_| {
            let roll = rng.random_range(0..100);
            if roll < 45 {
                topic.choose(rng).expect("non-empty").clone()
            } else if roll < 50 {
                names.choose(rng).expect("non-empty").to_string()
            } else if roll < 54 {
                ["he", "she", "they", "him", "her"].choose(rng).expect("non-empty").to_string()
            } else {
                FILLER.choose(rng).expect("non-empty").to_string()
            }
        })
        .collect();
    if let Some(first) = words.first_mut() {
        let mut c = first.chars();
        if let Some(h) = c.next() {
            *first = h.to_uppercase().chain(c).collect();
        }
    }
    let end = if rng.random_bool(0.2) { "?" } else { "." };
    format!("{}{end}", words.join(" "))
}

/// A season of Friends-like episodes in the Character Mining layout, with
/// per-episode counts. Scenes carry their own topic
/// vocabulary; stage directions appear only strictly inside scenes, never
/// next to each other, so every one of them yields its own gold boundary.
pub fn friends_like_season<R: Rng + ?Sized>(
    rng: &mut R,
    season_id: &str,
    episodes: usize,
    turns_per_episode: usize,
) -> (Value, Vec<EpisodeStats>) {
    let mut all_stats = Vec::new();
    let mut episode_values = Vec::new();
    let mut used = BTreeSet::new();
    for e in 0..episodes {
        let episode_id = format!("{season_id}_e{:02}", e + 1);
        let mut stats = EpisodeStats::default();
        let mut scenes = Vec::new();
        let mut remaining = turns_per_episode;
        while remaining > 0 {
            let size = rng.random_range(12..=40).min(remaining);
            let size = if remaining - size < 4 { remaining } else { size };
            remaining -= size;
            let topic = pseudo_words(rng, 25, &used);
            used.extend(topic.iter().cloned());
            let cast_size = rng.random_range(2..=4);
            let mut cast: Vec<&str> = MAIN_CAST.choose_multiple(rng, cast_size).copied().collect();
            if rng.random_bool(0.3) {
                cast.push("Gunther");
            }
            cast.shuffle(rng);

            let scene_id = format!("{episode_id}_c{:02}", scenes.len() + 1);
            let mut utterances = Vec::new();
            let mut last_was_note = true;
            for t in 0..size {
                let interior = t > 0 && t + 1 < size;
                if interior && !last_was_note && rng.random_bool(0.04) {
                    let who = cast.choose(rng).expect("non-empty");
                    let note = format!("({who} walks over to the {}.)", topic.choose(rng).expect("non-empty"));
                    utterances.push(json!({
                        "utterance_id": format!("{scene_id}_u{:03}", utterances.len() + 1),
                        "speakers": [],
                        "transcript": "",
                        "transcript_with_note": note,
                    }));
                    stats.standalone_notes += 1;
                    last_was_note = true;
                    continue;
                }
                let speaker = *cast.choose(rng).expect("non-empty");
                let speech = sentence(rng, &topic, &cast);
                let attached = t > 0 && !last_was_note && rng.random_bool(0.03);
                let with_note = if attached {
                    stats.attached_notes += 1;
                    format!("(to {}) {speech}", cast.choose(rng).expect("non-empty"))
                } else {
                    speech.clone()
                };
                utterances.push(json!({
                    "utterance_id": format!("{scene_id}_u{:03}", utterances.len() + 1),
                    "speakers": [speaker],
                    "transcript": speech,
                    "transcript_with_note": with_note,
                }));
                stats.turns += 1;
                last_was_note = attached;
            }
            stats.scenes += 1;
            scenes.push(json!({ "scene_id": scene_id, "utterances": utterances }));
        }
        all_stats.push(stats);
        episode_values.push(json!({ "episode_id": episode_id, "scenes": scenes }));
    }
    (json!({ "season_id": season_id, "episodes": episode_values }), all_stats)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::{parse_character_mining, CharacterMiningOptions};

    #[test]
    fn two_topic_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = two_topic_document(&mut rng, "d", 20, 5, 15);
        assert_eq!(t.len(), 40);
        let vocab = |r: std::ops::Range<usize>| -> BTreeSet<&str> {
            t.utterances[r].iter().flat_map(|u| u.text.split(' ')).collect()
        };
        assert!(vocab(0..20).is_disjoint(&vocab(20..40)));
        assert!(t.utterances.iter().all(|u| u.text.split(' ').collect::<BTreeSet<_>>().len() == 5));
    }

    #[test]
    fn season_parses_with_expected_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (season, stats) = friends_like_season(&mut rng, "s01", 2, 150);
        let docs = parse_character_mining(
            &season.to_string(),
            std::path::Path::new("s.json"),
            &CharacterMiningOptions::default(),
        )
        .unwrap();
        assert_eq!(docs.len(), 2);
        for (d, s) in docs.iter().zip(&stats) {
            assert_eq!(d.len(), s.turns);
            assert_eq!(d.scenes.len(), s.scenes);
        }
    }
}
