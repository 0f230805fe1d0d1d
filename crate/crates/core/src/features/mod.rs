//! Dialogue features that reshape the depth series before boundary
//! selection. They run in a fixed order: speaker-depth blending, speaker
//! introduction boost, coreference smoothing, question suppression.

mod coref;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SpeakerTable;
use crate::error::{Error, Result};
use crate::preprocess::{Span, TokenizedUtterance};
use crate::tiling::{self, min_max_normalize, ScoreSeries, SeriesKind};

pub use coref::{
    heuristic_chains, load_chain_file, AnnotatedChains, ChainProvider, CorefChain, HeuristicChains,
    ANTECEDENT_WINDOW,
};

/// Where coreference chains come from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum CorefSource {
    #[default]
    Heuristic,
    /// JSONL sidecar of `{doc_id, chain_id, mentions}` records.
    File(PathBuf),
}

impl FromStr for CorefSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(CorefSource::Heuristic),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(CorefSource::File(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "coref source must be `heuristic` or `file:<path>`, got `{s}`"
                ))),
            },
        }
    }
}

impl fmt::Display for CorefSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorefSource::Heuristic => f.write_str("heuristic"),
            CorefSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for CorefSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CorefSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub speaker_depth: bool,
    /// `(lexical, speaker)` weights of the blended depth series.
    pub speaker_weights: (f64, f64),
    pub speaker_intro: bool,
    pub boost: f64,
    pub questions: bool,
    pub coref: bool,
    pub coref_source: CorefSource,
    pub coref_scale: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            speaker_depth: false,
            speaker_weights: (2.0, 1.0),
            speaker_intro: false,
            boost: 1.5,
            questions: false,
            coref: false,
            coref_source: CorefSource::Heuristic,
            coref_scale: 0.5,
        }
    }
}

impl FeatureConfig {
    pub fn any_enabled(&self) -> bool {
        self.speaker_depth || self.speaker_intro || self.questions || self.coref
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.boost > 1.0) {
            return Err(Error::Config(format!("boost factor must exceed 1, got {}", self.boost)));
        }
        let (a, b) = self.speaker_weights;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Config(format!("speaker weights must be positive, got ({a}, {b})")));
        }
        if !(0.0..=1.0).contains(&self.coref_scale) {
            return Err(Error::Config(format!(
                "coref scale must lie in [0, 1], got {}",
                self.coref_scale
            )));
        }
        Ok(())
    }
}

/// Locates utterances among spans, to translate utterance-level events into
/// positions of the span-gap series (`values[j]` sits in front of span `j + 1`).
#[derive(Debug, Clone)]
pub struct SpanMap {
    span_of: Vec<usize>,
    firsts: Vec<usize>,
    lasts: Vec<usize>,
}

impl SpanMap {
    pub fn new(spans: &[Span]) -> Self {
        let mut span_of = Vec::new();
        for (i, s) in spans.iter().enumerate() {
            span_of.extend(std::iter::repeat_n(i, s.len()));
        }
        SpanMap {
            span_of,
            firsts: spans.iter().map(|s| s.first).collect(),
            lasts: spans.iter().map(|s| s.last).collect(),
        }
    }

    pub fn utterances(&self) -> usize {
        self.span_of.len()
    }

    /// Series position of the gap opening the span that contains `u`.
    pub fn gap_before(&self, u: usize) -> Option<usize> {
        let s = *self.span_of.get(u)?;
        s.checked_sub(1)
    }

    /// Series position of the gap right after `u`, when `u` closes its span.
    pub fn gap_after(&self, u: usize) -> Option<usize> {
        let s = *self.span_of.get(u)?;
        (self.lasts[s] == u && s + 1 < self.firsts.len()).then_some(s)
    }

    /// Series positions of the gaps whose utterance gap lies in `first+1..=last`.
    pub fn gaps_between(&self, first: usize, last: usize) -> std::ops::Range<usize> {
        let lo = self.firsts.partition_point(|&f| f <= first);
        let hi = self.firsts.partition_point(|&f| f <= last);
        // span s opens at series position s - 1; span 0 never qualifies
        lo.saturating_sub(1)..hi.saturating_sub(1)
    }
}

/// Multiplies the depth in front of every newly introduced speaker (except
/// at the document start) by `factor`. Each gap is boosted at most once.
pub fn speaker_intro_boost(
    depth: &ScoreSeries,
    speakers: &SpeakerTable,
    span_map: &SpanMap,
    factor: f64,
) -> ScoreSeries {
    let gaps: BTreeSet<usize> = speakers
        .first_appearance
        .values()
        .filter(|&&u| u > 0)
        .filter_map(|&u| span_map.gap_before(u))
        .collect();
    let mut values = depth.values.clone();
    for j in gaps {
        if let Some(v) = values.get_mut(j) {
            *v *= factor;
        }
    }
    ScoreSeries::new(depth.kind, values)
}

fn proportion(spans: &[Span], speaker: &str) -> f64 {
    let total: usize = spans.iter().map(Span::turns).sum();
    if total == 0 {
        return 0.0;
    }
    let own: usize = spans
        .iter()
        .map(|s| s.speaker_counts.get(speaker).copied().unwrap_or(0))
        .sum();
    own as f64 / total as f64
}

/// Per-speaker similarity `1 - |share(left) - share(right)|` of turn shares
/// in the blocks around each gap.
pub fn speaker_similarity(spans: &[Span], speaker: &str, k: usize) -> ScoreSeries {
    let m = spans.len();
    let values = (1..m.max(1))
        .map(|gap| {
            let (l, r) = tiling::blocks(gap, m, k);
            1.0 - (proportion(&spans[l], speaker) - proportion(&spans[r], speaker)).abs()
        })
        .collect();
    ScoreSeries::new(SeriesKind::Lexical, values)
}

/// Mean over speakers of the depth of each speaker's smoothed similarity
/// series.
pub fn speaker_depth_scores(
    spans: &[Span],
    k: usize,
    smoothing_window: usize,
    smoothing_rounds: usize,
) -> ScoreSeries {
    let gaps = spans.len().saturating_sub(1);
    let speakers: BTreeSet<&str> = spans
        .iter()
        .flat_map(|s| s.speaker_counts.keys().map(String::as_str))
        .collect();
    let mut sum = vec![0.0; gaps];
    for speaker in &speakers {
        let sim = speaker_similarity(spans, speaker, k);
        let depth = tiling::depth_scores(&tiling::smooth(&sim, smoothing_window, smoothing_rounds));
        for (acc, v) in sum.iter_mut().zip(&depth.values) {
            *acc += v;
        }
    }
    if !speakers.is_empty() {
        let count = speakers.len() as f64;
        sum.iter_mut().for_each(|v| *v /= count);
    }
    ScoreSeries::new(SeriesKind::Depth, sum)
}

/// Weighted mean of the min-max normalized lexical and speaker depth series.
pub fn combine_depth(
    lexical: &ScoreSeries,
    speaker: &ScoreSeries,
    weights: (f64, f64),
) -> Result<ScoreSeries> {
    if lexical.len() != speaker.len() {
        return Err(Error::Internal(format!(
            "cannot combine depth series of lengths {} and {}",
            lexical.len(),
            speaker.len()
        )));
    }
    let (wl, ws) = weights;
    let values = min_max_normalize(&lexical.values)
        .into_iter()
        .zip(min_max_normalize(&speaker.values))
        .map(|(l, s)| (wl * l + ws * s) / (wl + ws))
        .collect();
    Ok(ScoreSeries::new(SeriesKind::Combined, values))
}

/// Zeroes the depth right after every utterance that ends with a question.
pub fn question_suppress(
    depth: &ScoreSeries,
    utterances: &[TokenizedUtterance],
    span_map: &SpanMap,
) -> ScoreSeries {
    let mut values = depth.values.clone();
    for u in utterances.iter().filter(|u| u.ends_with_question) {
        if let Some(v) = span_map.gap_after(u.utterance_index).and_then(|j| values.get_mut(j)) {
            *v = 0.0;
        }
    }
    ScoreSeries::new(depth.kind, values)
}

/// Attenuates the gaps strictly inside coreference chains: every marked gap
/// gets the width-3 moving average of the original values over its run of
/// marked gaps, times `scale`. Overlapping chains mark a gap once.
pub fn coref_smooth(
    depth: &ScoreSeries,
    chains: &[CorefChain],
    span_map: &SpanMap,
    scale: f64,
) -> ScoreSeries {
    let n = span_map.utterances();
    let mut marked = vec![false; depth.len()];
    for chain in chains {
        let (Some(&first), Some(&last)) = (chain.mentions.first(), chain.mentions.last()) else {
            log::warn!("coreference chain `{}` has no mentions, skipped", chain.chain_id);
            continue;
        };
        if chain.mentions.len() < 2 || first == last {
            log::warn!("coreference chain `{}` has a single mention, skipped", chain.chain_id);
            continue;
        }
        if last >= n {
            log::warn!(
                "coreference chain `{}` mentions utterance {last} beyond the document ({n}), skipped",
                chain.chain_id
            );
            continue;
        }
        for j in span_map.gaps_between(first, last) {
            marked[j] = true;
        }
    }

    let original = &depth.values;
    let mut values = original.clone();
    let mut j = 0;
    while j < marked.len() {
        if !marked[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < marked.len() && marked[j] {
            j += 1;
        }
        let averaged = tiling::moving_average(&original[start..j], 1);
        for (slot, v) in values[start..j].iter_mut().zip(averaged) {
            *slot = v * scale;
        }
    }
    ScoreSeries::new(depth.kind, values)
}
