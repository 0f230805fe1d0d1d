//! TextTiling core: per-gap lexical scores, smoothing, depth scores and
//! boundary selection.
//!
//! A series over `m` scoring units (spans) has `m - 1` values; `values[j]`
//! belongs to the gap between unit `j` and unit `j + 1`. Low lexical scores
//! mean low cohesion, so shifts sit in valleys for every lexical method.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::preprocess::{Span, TokenizedUtterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Lexical,
    Smoothed,
    Depth,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub kind: SeriesKind,
    pub values: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(kind: SeriesKind, values: Vec<f64>) -> Self {
        ScoreSeries { kind, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LexicalMethod {
    #[serde(rename = "bc")]
    BlockComparison,
    #[serde(rename = "vi")]
    VocabIntroduction,
    #[serde(rename = "bc+vi")]
    Combined,
}

impl FromStr for LexicalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bc" => Ok(LexicalMethod::BlockComparison),
            "vi" => Ok(LexicalMethod::VocabIntroduction),
            "bc+vi" => Ok(LexicalMethod::Combined),
            other => Err(Error::Config(format!("unknown lexical method `{other}`"))),
        }
    }
}

impl fmt::Display for LexicalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LexicalMethod::BlockComparison => "bc",
            LexicalMethod::VocabIntroduction => "vi",
            LexicalMethod::Combined => "bc+vi",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    /// Shared types over all types of the two blocks.
    #[default]
    Jaccard,
    /// Cosine of term-frequency vectors.
    Cosine,
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jaccard" => Ok(Similarity::Jaccard),
            "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::Config(format!("unknown similarity `{other}`"))),
        }
    }
}

/// Vocabulary memory in utterances. `None` remembers the whole document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Memory(pub Option<usize>);

impl Memory {
    pub const UNBOUNDED: Memory = Memory(None);

    pub fn utterances(m: usize) -> Self {
        Memory(Some(m))
    }

    /// Whether a type last seen at utterance `last_seen` is still remembered at `current`.
    fn remembers(self, last_seen: usize, current: usize) -> bool {
        match self.0 {
            None => true,
            Some(m) => current - last_seen <= m,
        }
    }
}

impl Default for Memory {
    fn default() -> Self {
        Memory(Some(20))
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(m) => write!(f, "{m}"),
            None => f.write_str("inf"),
        }
    }
}

impl FromStr for Memory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "unbounded" => Ok(Memory::UNBOUNDED),
            _ => s
                .parse()
                .map(Memory::utterances)
                .map_err(|_| Error::Config(format!("memory must be an integer or `inf`, got `{s}`"))),
        }
    }
}

impl Serialize for Memory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(m) => s.serialize_u64(m as u64),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Memory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            // bare `inf` in TOML is a float
            Float(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(m) => Ok(Memory::utterances(m)),
            Repr::Float(f) if f == f64::INFINITY => Ok(Memory::UNBOUNDED),
            Repr::Float(f) => Err(serde::de::Error::custom(format!(
                "memory must be an integer or `inf`, got {f}"
            ))),
            Repr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    /// Target span length in tokens.
    pub w: usize,
    /// Block size in spans.
    pub k: usize,
    pub memory: Memory,
    pub smoothing_window: usize,
    pub smoothing_rounds: usize,
    /// Cutoff is `mean - threshold_sigma * stddev` of the depth series;
    /// infinity keeps every local maximum.
    pub threshold_sigma: f64,
    pub method: LexicalMethod,
    pub similarity: Similarity,
}

impl Default for TilingConfig {
    fn default() -> Self {
        TilingConfig {
            w: 12,
            k: 6,
            memory: Memory::default(),
            smoothing_window: 3,
            smoothing_rounds: 1,
            threshold_sigma: 0.5,
            method: LexicalMethod::BlockComparison,
            similarity: Similarity::Jaccard,
        }
    }
}

impl TilingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 {
            return Err(Error::Config("w must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "smoothing window must be odd and positive, got {}",
                self.smoothing_window
            )));
        }
        if self.threshold_sigma.is_nan() {
            return Err(Error::Config("threshold sigma is NaN".into()));
        }
        Ok(())
    }
}

/// Left and right block (as unit index ranges) around gap `gap`
/// (1-based: the gap before unit `gap`), truncated at the document edges.
pub fn blocks(gap: usize, units: usize, k: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    (gap.saturating_sub(k)..gap, gap..(gap + k).min(units))
}

fn jaccard(left: &BTreeMap<&str, usize>, right: &BTreeMap<&str, usize>) -> f64 {
    if left.is_empty() || right.is_empty() {
        return 0.0;
    }
    let shared = left.keys().filter(|t| right.contains_key(*t)).count();
    let union = left.len() + right.len() - shared;
    shared as f64 / union as f64
}

fn cosine(left: &BTreeMap<&str, usize>, right: &BTreeMap<&str, usize>) -> f64 {
    let dot: f64 = left
        .iter()
        .filter_map(|(t, &a)| right.get(t).map(|&b| (a * b) as f64))
        .sum();
    let norm = |m: &BTreeMap<&str, usize>| m.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let denom = norm(left) * norm(right);
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

fn term_counts<S: AsRef<str>>(units: &[Vec<S>]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in units.iter().flatten() {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    counts
}

/// Block comparison: lexical overlap of the `k` units on each side of every gap.
pub fn block_comparison_scores<S: AsRef<str>>(
    units: &[Vec<S>],
    k: usize,
    similarity: Similarity,
) -> ScoreSeries {
    let m = units.len();
    let values = (1..m.max(1))
        .map(|gap| {
            let (l, r) = blocks(gap, m, k);
            let (left, right) = (term_counts(&units[l]), term_counts(&units[r]));
            match similarity {
                Similarity::Jaccard => jaccard(&left, &right),
                Similarity::Cosine => cosine(&left, &right),
            }
        })
        .collect();
    ScoreSeries::new(SeriesKind::Lexical, values)
}

/// Content tokens of each span.
pub fn span_content<'a>(utterances: &'a [TokenizedUtterance], spans: &[Span]) -> Vec<Vec<&'a str>> {
    spans
        .iter()
        .map(|s| {
            utterances[s.utterance_range()]
                .iter()
                .flat_map(|u| u.content_tokens.iter().map(String::as_str))
                .collect()
        })
        .collect()
}

/// Per content-token occurrence, whether its type is new: not seen earlier in
/// the same utterance nor in the `memory` preceding utterances.
pub fn novelty_flags(utterances: &[TokenizedUtterance], memory: Memory) -> Vec<Vec<bool>> {
    let mut last_seen: HashMap<&str, usize> = HashMap::new();
    utterances
        .iter()
        .enumerate()
        .map(|(u, utt)| {
            utt.content_tokens
                .iter()
                .map(|t| {
                    let new = last_seen
                        .get(t.as_str())
                        .is_none_or(|&seen| !memory.remembers(seen, u));
                    last_seen.insert(t.as_str(), u);
                    new
                })
                .collect()
        })
        .collect()
}

/// Vocabulary introduction, stored as `1 - newness` over the `2k` spans
/// centred on each gap. An interval without content tokens scores 1.
pub fn vocab_introduction_scores(
    utterances: &[TokenizedUtterance],
    spans: &[Span],
    k: usize,
    memory: Memory,
) -> ScoreSeries {
    let flags = novelty_flags(utterances, memory);
    let per_span: Vec<(usize, usize)> = spans
        .iter()
        .map(|s| {
            flags[s.utterance_range()]
                .iter()
                .flatten()
                .fold((0, 0), |(new, total), &f| (new + f as usize, total + 1))
        })
        .collect();
    let m = spans.len();
    let values = (1..m.max(1))
        .map(|gap| {
            let (l, r) = blocks(gap, m, k);
            let (new, total) = per_span[l.start..r.end]
                .iter()
                .fold((0, 0), |(a, b), &(n, t)| (a + n, b + t));
            if total == 0 {
                1.0
            } else {
                1.0 - new as f64 / total as f64
            }
        })
        .collect();
    ScoreSeries::new(SeriesKind::Lexical, values)
}

/// `rounds` passes of a centred moving average; the window is truncated at
/// the edges.
pub fn smooth(series: &ScoreSeries, window: usize, rounds: usize) -> ScoreSeries {
    assert!(window % 2 == 1, "smoothing window must be odd");
    let half = window / 2;
    let mut values = series.values.clone();
    for _ in 0..rounds {
        values = moving_average(&values, half);
    }
    ScoreSeries::new(SeriesKind::Smoothed, values)
}

pub(crate) fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Depth of the valley each value sits in: `((hl - s) + (hr - s)) / 2`,
/// where `hl` / `hr` are the nearest peaks found by climbing while the
/// values do not decrease (plateaus are crossed).
pub fn depth_scores(series: &ScoreSeries) -> ScoreSeries {
    let s = &series.values;
    let n = s.len();
    let values = (0..n)
        .map(|i| {
            let mut l = i;
            while l > 0 && s[l - 1] >= s[l] {
                l -= 1;
            }
            let mut r = i;
            while r + 1 < n && s[r + 1] >= s[r] {
                r += 1;
            }
            ((s[l] - s[i]) + (s[r] - s[i])) / 2.0
        })
        .collect();
    ScoreSeries::new(SeriesKind::Depth, values)
}

/// Interior strict local maxima. A plateau counts once, at its leftmost
/// index, when both of its neighbours are strictly lower; series edges are
/// never candidates.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mut end = i;
        while end + 1 < n && values[end + 1] == values[i] {
            end += 1;
        }
        if end + 1 < n && values[i - 1] < values[i] && values[end + 1] < values[i] {
            out.push(i);
        }
        i = end + 1;
    }
    out
}

/// `mean - sigma * stddev` (population deviation), or `-inf` when `sigma`
/// is infinite.
pub fn depth_cutoff(values: &[f64], sigma: f64) -> f64 {
    if sigma.is_infinite() || values.is_empty() {
        return f64::NEG_INFINITY;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    mean - sigma * var.sqrt()
}

/// Indices into the depth series of the selected gaps.
pub fn select_gaps(depth: &[f64], sigma: f64) -> Vec<usize> {
    let cutoff = depth_cutoff(depth, sigma);
    local_maxima(depth)
        .into_iter()
        .filter(|&j| depth[j] >= cutoff)
        .collect()
}

/// Keeps thresholded local maxima of the depth series and maps each span gap
/// to the utterance gap in front of the right-hand span.
pub fn select_boundaries(depth: &ScoreSeries, spans: &[Span], sigma: f64) -> Result<Segmentation> {
    let n = spans.last().map_or(0, |s| s.last + 1);
    if spans.len() < 2 {
        return Ok(Segmentation::empty(n));
    }
    if depth.len() != spans.len() - 1 {
        return Err(Error::Internal(format!(
            "depth series has {} values for {} spans",
            depth.len(),
            spans.len()
        )));
    }
    Segmentation::new(
        n,
        select_gaps(&depth.values, sigma).into_iter().map(|j| spans[j + 1].first),
    )
}

/// Rescales to `[0, 1]`; a constant series maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Intermediate series of one tiling run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TilingTrace {
    pub lexical: Vec<ScoreSeries>,
    pub smoothed: Vec<ScoreSeries>,
    pub depth: ScoreSeries,
}

fn lexical_to_depth(lexical: ScoreSeries, config: &TilingConfig, trace: &mut TilingTrace) -> ScoreSeries {
    let smoothed = smooth(&lexical, config.smoothing_window, config.smoothing_rounds);
    let depth = depth_scores(&smoothed);
    trace.lexical.push(lexical);
    trace.smoothed.push(smoothed);
    depth
}

/// Lexical scores → smoothing → depth for the configured method. The
/// combined method averages the min-max normalized depth series of block
/// comparison and vocabulary introduction.
pub fn tiling_depth(utterances: &[TokenizedUtterance], spans: &[Span], config: &TilingConfig) -> TilingTrace {
    let mut trace = TilingTrace {
        lexical: Vec::new(),
        smoothed: Vec::new(),
        depth: ScoreSeries::new(SeriesKind::Depth, Vec::new()),
    };
    let bc = |trace: &mut TilingTrace| {
        let units = span_content(utterances, spans);
        lexical_to_depth(block_comparison_scores(&units, config.k, config.similarity), config, trace)
    };
    let vi = |trace: &mut TilingTrace| {
        let lexical = vocab_introduction_scores(utterances, spans, config.k, config.memory);
        lexical_to_depth(lexical, config, trace)
    };
    trace.depth = match config.method {
        LexicalMethod::BlockComparison => bc(&mut trace),
        LexicalMethod::VocabIntroduction => vi(&mut trace),
        LexicalMethod::Combined => {
            let a = min_max_normalize(&bc(&mut trace).values);
            let b = min_max_normalize(&vi(&mut trace).values);
            let values = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
            ScoreSeries::new(SeriesKind::Combined, values)
        }
    };
    trace
}

/// Distinct content types of a token slice.
pub fn types<S: AsRef<str>>(tokens: &[S]) -> HashSet<&str> {
    tokens.iter().map(AsRef::as_ref).collect()
}
