use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dialseg::corpus::{
    load_corpus, load_corpus_with, write_native_jsonl, AttachedNotes, CharacterMiningOptions, CorpusFormat,
    RawEntry, SpeakerTable,
};
use dialseg::synthetic::friends_like_season;
use dialseg::ErrorCategory;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn gold(t: &dialseg::corpus::Transcript) -> Vec<usize> {
    t.gold_boundaries.iter().copied().collect()
}

#[test]
fn character_mining_fixture() {
    let docs = load_corpus(&fixtures().join("cm"), CorpusFormat::CharacterMiningJson).unwrap();
    assert_eq!(docs.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(), ["s01_e01", "s01_e02"]);

    let e1 = &docs[0];
    assert_eq!(e1.len(), 22);
    // standalone note, attached note, two scene changes, bracketed note
    assert_eq!(gold(e1), [3, 5, 8, 17, 20]);
    assert_eq!(e1.utterances[14].speaker, "");
    assert_eq!(e1.utterances[14].text, "Later that evening.");
    assert_eq!(e1.notes.len(), 3);

    let e2 = &docs[1];
    assert_eq!(e2.len(), 12);
    // the note opening scene 2 coincides with the scene change
    assert_eq!(gold(e2), [2, 5]);
    assert_eq!(e2.utterances[3].speaker, "Joey Tribbiani");
    let speakers = SpeakerTable::from_transcript(e2);
    assert_eq!(speakers.first_appearance["Rachel Green"], 5);
    assert_eq!(speakers.first_appearance["Ross Geller"], 8);
}

#[test]
fn attached_notes_can_be_ignored() {
    let opts = CharacterMiningOptions {
        attached_notes: AttachedNotes::Ignore,
    };
    let docs = load_corpus_with(&fixtures().join("cm"), CorpusFormat::CharacterMiningJson, &opts).unwrap();
    assert_eq!(gold(&docs[0]), [3, 8, 17, 20]);
    assert_eq!(docs[0].len(), 22);
}

#[test]
fn native_fixture() {
    let docs = load_corpus(&fixtures().join("native/sample.jsonl"), CorpusFormat::NativeJsonl).unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(gold(&docs[0]), [2]);
    assert_eq!(gold(&docs[1]), [4, 6]);
    for d in &docs {
        let seg = d.gold_segmentation().unwrap();
        assert_eq!(seg.n(), d.len());
    }
}

#[test]
fn missing_corpus_is_an_io_error() {
    let err = load_corpus(Path::new("/nonexistent/corpus"), CorpusFormat::NativeJsonl).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Io);
}

#[test]
fn malformed_season_reports_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"episodes\": [ {\"episode_id\": 3} ]}").unwrap();
    let err = load_corpus(&path, CorpusFormat::CharacterMiningJson).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Parse);
}

#[test]
fn generated_gold_counts_follow_scenes_and_notes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (season, stats) = friends_like_season(&mut rng, "s09", 4, 300);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s09.json");
    std::fs::write(&path, season.to_string()).unwrap();

    let docs = load_corpus(&path, CorpusFormat::CharacterMiningJson).unwrap();
    for (doc, s) in docs.iter().zip(&stats) {
        let expected = (s.scenes - 1) + s.standalone_notes + s.attached_notes;
        assert_eq!(doc.gold_boundaries.len(), expected, "{}", doc.doc_id);
    }
    let ignored = load_corpus_with(
        &path,
        CorpusFormat::CharacterMiningJson,
        &CharacterMiningOptions {
            attached_notes: AttachedNotes::Ignore,
        },
    )
    .unwrap();
    for (doc, s) in ignored.iter().zip(&stats) {
        assert_eq!(doc.gold_boundaries.len(), (s.scenes - 1) + s.standalone_notes);
    }
}

fn arb_entries() -> impl Strategy<Value = Vec<RawEntry>> {
    let entry = (0u8..3, 0usize..4, "[a-z]{1,6}( [a-z]{1,6}){0,4}", any::<bool>()).prop_map(
        |(scene, speaker, text, note)| {
            let scene = format!("c{scene}");
            if note {
                RawEntry::note(&scene, &format!("({text})"))
            } else {
                RawEntry::turn(&scene, ["Ann", "Bob", "Cy", ""][speaker], &text)
            }
        },
    );
    prop::collection::vec(entry, 1..25)
        .prop_filter("needs a speech turn", |v| v.iter().any(|e| !e.is_note))
        .prop_map(|mut v| {
            // scenes are contiguous runs
            v.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
            v
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn native_round_trip_through_files(docs in prop::collection::vec(arb_entries(), 1..4)) {
        let transcripts: Vec<_> = docs
            .iter()
            .enumerate()
            .map(|(i, e)| dialseg::corpus::derive_gold_boundaries(&format!("doc{i}"), e).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut buf = Vec::new();
        write_native_jsonl(&mut buf, &transcripts).unwrap();
        std::fs::write(&path, &buf).unwrap();

        let loaded = load_corpus(dir.path(), CorpusFormat::NativeJsonl).unwrap();
        prop_assert_eq!(&loaded, &transcripts);
        for t in &loaded {
            let n = t.len();
            prop_assert!(t.gold_boundaries.iter().all(|&g| g >= 1 && g < n));
            let ids: BTreeSet<_> = t.utterances.iter().map(|u| u.index).collect();
            prop_assert_eq!(ids, (0..n).collect::<BTreeSet<_>>());
        }
    }
}
