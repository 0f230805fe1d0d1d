//! End-to-end segmentation of one transcript: tokenize, build spans, tile,
//! apply dialogue features, select boundaries.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::corpus::{SpeakerTable, Transcript};
use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::features::{
    self, load_chain_file, ChainProvider, CorefChain, CorefSource, FeatureConfig, HeuristicChains, SpanMap,
};
use crate::preprocess::{build_spans, PreprocessOptions, Preprocessor};
use crate::tiling::{self, LexicalMethod, ScoreSeries, TilingConfig, TilingTrace};

/// A lexical method plus a set of dialogue features, written like `bc+sd+q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub method: LexicalMethod,
    pub speaker_depth: bool,
    pub speaker_intro: bool,
    pub questions: bool,
    pub coref: bool,
}

impl Variant {
    pub fn plain(method: LexicalMethod) -> Self {
        Variant {
            method,
            speaker_depth: false,
            speaker_intro: false,
            questions: false,
            coref: false,
        }
    }

    /// Copies of the configurations with this variant's method and feature
    /// switches applied; every other parameter is kept.
    pub fn configure(&self, tiling: &TilingConfig, features: &FeatureConfig) -> (TilingConfig, FeatureConfig) {
        let tiling = TilingConfig {
            method: self.method,
            ..tiling.clone()
        };
        let features = FeatureConfig {
            speaker_depth: self.speaker_depth,
            speaker_intro: self.speaker_intro,
            questions: self.questions,
            coref: self.coref,
            ..features.clone()
        };
        (tiling, features)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split('+').map(str::trim).peekable();
        let (mut bc, mut vi) = (false, false);
        while let Some(&p) = parts.peek() {
            match p {
                "bc" => bc = true,
                "vi" => vi = true,
                _ => break,
            }
            parts.next();
        }
        let method = match (bc, vi) {
            (true, false) => LexicalMethod::BlockComparison,
            (false, true) => LexicalMethod::VocabIntroduction,
            (true, true) => LexicalMethod::Combined,
            (false, false) => {
                return Err(Error::Config(format!("variant `{s}` must start with bc, vi or bc+vi")))
            }
        };
        let mut v = Variant::plain(method);
        for p in parts {
            let flag = match p {
                "sd" => &mut v.speaker_depth,
                "si" => &mut v.speaker_intro,
                "q" => &mut v.questions,
                "co" => &mut v.coref,
                other => return Err(Error::Config(format!("unknown feature `{other}` in variant `{s}`"))),
            };
            if *flag {
                return Err(Error::Config(format!("feature `{p}` repeated in variant `{s}`")));
            }
            *flag = true;
        }
        Ok(v)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.method)?;
        for (on, tag) in [
            (self.speaker_depth, "sd"),
            (self.speaker_intro, "si"),
            (self.questions, "q"),
            (self.coref, "co"),
        ] {
            if on {
                write!(f, "+{tag}")?;
            }
        }
        Ok(())
    }
}

/// Intermediate results of one segmentation.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentTrace {
    /// `(first, last)` utterance of every span.
    pub spans: Vec<(usize, usize)>,
    pub tiling: TilingTrace,
    pub speaker_depth: Option<ScoreSeries>,
    pub chains: Vec<CorefChain>,
    /// Depth series handed to boundary selection.
    pub depth: ScoreSeries,
    /// Boundaries the run would have produced without question suppression.
    pub without_questions: Option<Segmentation>,
}

pub struct Segmenter {
    tiling: TilingConfig,
    features: FeatureConfig,
    preprocessor: Preprocessor,
    chains: Arc<dyn ChainProvider>,
}

impl fmt::Debug for Segmenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segmenter")
            .field("tiling", &self.tiling)
            .field("features", &self.features)
            .finish_non_exhaustive()
    }
}

impl Segmenter {
    /// Validates the configuration and, for file-backed coreference, reads
    /// the chain sidecar.
    pub fn new(tiling: TilingConfig, features: FeatureConfig, preprocess: &PreprocessOptions) -> Result<Self> {
        tiling.validate()?;
        features.validate()?;
        let chains: Arc<dyn ChainProvider> = match (&features.coref, &features.coref_source) {
            (true, CorefSource::File(path)) => Arc::new(load_chain_file(path)?),
            _ => Arc::new(HeuristicChains),
        };
        Ok(Segmenter {
            tiling,
            features,
            preprocessor: Preprocessor::new(preprocess)?,
            chains,
        })
    }

    pub fn with_chain_provider(mut self, provider: Arc<dyn ChainProvider>) -> Self {
        self.chains = provider;
        self
    }

    pub fn tiling(&self) -> &TilingConfig {
        &self.tiling
    }

    pub fn features(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn segment(&self, transcript: &Transcript) -> Result<Segmentation> {
        self.segment_traced(transcript).map(|(seg, _)| seg)
    }

    pub fn segment_traced(&self, transcript: &Transcript) -> Result<(Segmentation, SegmentTrace)> {
        if transcript.is_empty() {
            return Err(Error::EmptyDocument {
                doc_id: transcript.doc_id.clone(),
            });
        }
        let utts = self.preprocessor.tokenize_all(&transcript.utterances);
        let spans = build_spans(&utts, self.tiling.w);
        let tiling_trace = tiling::tiling_depth(&utts, &spans, &self.tiling);
        let sigma = self.tiling.threshold_sigma;
        let f = &self.features;

        let mut trace = SegmentTrace {
            spans: spans.iter().map(|s| (s.first, s.last)).collect(),
            depth: tiling_trace.depth.clone(),
            tiling: tiling_trace,
            speaker_depth: None,
            chains: Vec::new(),
            without_questions: None,
        };
        if !f.any_enabled() || spans.len() < 2 {
            let seg = tiling::select_boundaries(&trace.depth, &spans, sigma)?;
            return Ok((seg, trace));
        }

        let span_map = SpanMap::new(&spans);
        let mut depth = trace.depth.clone();
        if f.speaker_depth {
            let sd = features::speaker_depth_scores(
                &spans,
                self.tiling.k,
                self.tiling.smoothing_window,
                self.tiling.smoothing_rounds,
            );
            depth = features::combine_depth(&depth, &sd, f.speaker_weights)?;
            trace.speaker_depth = Some(sd);
        }
        if f.speaker_intro {
            let table = SpeakerTable::from_transcript(transcript);
            depth = features::speaker_intro_boost(&depth, &table, &span_map, f.boost);
        }
        if f.coref {
            trace.chains = self.chains.chains(transcript);
            depth = features::coref_smooth(&depth, &trace.chains, &span_map, f.coref_scale);
        }
        if f.questions {
            trace.without_questions = Some(tiling::select_boundaries(&depth, &spans, sigma)?);
            depth = features::question_suppress(&depth, &utts, &span_map);
        }
        let seg = tiling::select_boundaries(&depth, &spans, sigma)?;
        trace.depth = depth;
        Ok((seg, trace))
    }
}
