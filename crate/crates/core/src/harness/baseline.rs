//! Reference segmenters: the seeded random baseline and classic TextTiling
//! over fixed-size token windows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Transcript;
use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::preprocess::{word_tokens, PreprocessOptions, Preprocessor};
use crate::tiling::{self, Similarity};

/// Draws `b` uniformly from `0..n`, then marks each gap independently with
/// probability `b / n`.
pub fn random_baseline<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Segmentation {
    if n < 2 {
        return Segmentation::empty(n);
    }
    let b = rng.random_range(0..n);
    let p = b as f64 / n as f64;
    let boundaries: Vec<usize> = (1..n).filter(|_| rng.random::<f64>() < p).collect();
    Segmentation::new(n, boundaries).expect("gaps are in range")
}

/// Generator for one document, derived from the run seed and the document id
/// so results do not depend on processing order.
pub fn document_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(doc_id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(seed ^ u64::from_le_bytes(head))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OgConfig {
    /// Pseudo-sentence length in tokens.
    pub w: usize,
    /// Block size in pseudo-sentences.
    pub k: usize,
    pub smoothing_window: usize,
    pub smoothing_rounds: usize,
    pub threshold_sigma: f64,
}

impl Default for OgConfig {
    fn default() -> Self {
        OgConfig {
            w: 20,
            k: 10,
            smoothing_window: 3,
            smoothing_rounds: 1,
            threshold_sigma: 0.5,
        }
    }
}

impl OgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.k == 0 {
            return Err(Error::Config("og w and k must be at least 1".into()));
        }
        if self.smoothing_window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "og smoothing window must be odd, got {}",
                self.smoothing_window
            )));
        }
        if self.threshold_sigma.is_nan() {
            return Err(Error::Config("og threshold sigma is NaN".into()));
        }
        Ok(())
    }
}

/// TextTiling over the whole token stream cut into `w`-token windows,
/// ignoring turn boundaries; boundaries are moved to the nearest utterance
/// gap afterwards.
#[derive(Debug)]
pub struct OgTextTiling {
    config: OgConfig,
    preprocessor: Preprocessor,
}

impl OgTextTiling {
    pub fn new(config: OgConfig, preprocess: &PreprocessOptions) -> Result<Self> {
        config.validate()?;
        Ok(OgTextTiling {
            config,
            preprocessor: Preprocessor::new(preprocess)?,
        })
    }

    pub fn segment(&self, transcript: &Transcript) -> Result<Segmentation> {
        let n = transcript.len();
        let w = self.config.w;
        let mut starts = Vec::with_capacity(n + 1);
        let mut windows: Vec<Vec<String>> = Vec::new();
        let mut current = Vec::new();
        let mut offset = 0;
        for utt in &transcript.utterances {
            starts.push(offset);
            for token in word_tokens(&utt.text) {
                current.extend(self.preprocessor.content_form(&token));
                offset += 1;
                if offset % w == 0 {
                    windows.push(std::mem::take(&mut current));
                }
            }
        }
        starts.push(offset);
        if offset % w != 0 {
            windows.push(current);
        }
        if n < 2 || windows.len() < 2 {
            return Ok(Segmentation::empty(n));
        }

        let c = &self.config;
        let lexical = tiling::block_comparison_scores(&windows, c.k, Similarity::Cosine);
        let smoothed = tiling::smooth(&lexical, c.smoothing_window, c.smoothing_rounds);
        let depth = tiling::depth_scores(&smoothed);
        let gaps = tiling::select_gaps(&depth.values, c.threshold_sigma);
        Segmentation::new(n, gaps.into_iter().map(|j| anchor((j + 1) * w, &starts)))
    }
}

/// Utterance gap nearest to token position `p`; ties go to the earlier gap.
/// `starts[u]` is the first token of utterance `u`, `starts[n]` the total.
fn anchor(p: usize, starts: &[usize]) -> usize {
    let n = starts.len() - 1;
    let u = starts[..n].partition_point(|&s| s <= p).saturating_sub(1);
    let gap = if p - starts[u] <= starts[u + 1] - p { u } else { u + 1 };
    gap.clamp(1, n - 1)
}
