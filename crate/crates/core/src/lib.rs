//! Linear topic segmentation of multi-party dialogue transcripts.
//!
//! The pipeline groups utterances into spans of about `w` tokens, scores
//! lexical cohesion at every span gap (block comparison and/or vocabulary
//! introduction), smooths the scores, turns them into depth scores, adjusts
//! those with dialogue features (speaker distribution, speaker introduction,
//! coreference chains, questions) and keeps the deepest valleys as topic
//! boundaries. [`eval`] scores segmentations with Pk, F1 and a relaxed,
//! precision-weighted Fk.

// `!(x > y)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;
pub mod tiling;

pub use error::{Error, ErrorCategory, Result};
