//! Experiment orchestration: run segmenters over a corpus, evaluate them and
//! write reproducible artifacts.

mod baseline;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, AttachedNotes, CharacterMiningOptions, CorpusFormat, Transcript};
use crate::error::{Error, Result};
use crate::eval::{self, BoundaryRecord, EvalOptions, EvalReport, Segmentation};
use crate::features::{CorefSource, FeatureConfig};
use crate::pipeline::{Segmenter, Variant};
use crate::preprocess::PreprocessOptions;
use crate::tiling::{LexicalMethod, TilingConfig};

pub use baseline::{document_rng, random_baseline, OgConfig, OgTextTiling};
pub use report::{format_table, metrics_tsv, per_document_tsv, sha256_file, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmenterSpec {
    Random,
    OgTextTiling,
    Tiling(Variant),
}

impl FromStr for SegmenterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(SegmenterSpec::Random),
            "og" | "og-texttiling" => Ok(SegmenterSpec::OgTextTiling),
            _ => s.parse().map(SegmenterSpec::Tiling),
        }
    }
}

impl fmt::Display for SegmenterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmenterSpec::Random => f.write_str("random"),
            SegmenterSpec::OgTextTiling => f.write_str("og-texttiling"),
            SegmenterSpec::Tiling(v) => v.fmt(f),
        }
    }
}

impl Serialize for SegmenterSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SegmenterSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub paths: Vec<PathBuf>,
    pub format: CorpusFormat,
    #[serde(default)]
    pub attached_notes: AttachedNotes,
}

fn default_segmenters() -> Vec<SegmenterSpec> {
    vec![SegmenterSpec::Tiling(Variant::plain(LexicalMethod::BlockComparison))]
}

fn default_best_of() -> usize {
    1
}

/// Everything one run depends on. Relative paths are resolved against the
/// directory of the file the configuration was read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    pub output: PathBuf,
    #[serde(default = "default_segmenters")]
    pub segmenters: Vec<SegmenterSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Random-baseline repetitions; the run with the highest summed relaxed
    /// F-measures is kept.
    #[serde(default = "default_best_of")]
    pub best_of: usize,
    #[serde(default)]
    pub preprocess: PreprocessOptions,
    #[serde(default)]
    pub tiling: TilingConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub og: OgConfig,
    #[serde(default)]
    pub eval: EvalOptions,
    /// Parameter grid for sweeps: dotted key → candidate values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

impl ExperimentConfig {
    pub fn new(corpus: CorpusConfig, output: PathBuf) -> Self {
        ExperimentConfig {
            corpus,
            output,
            segmenters: default_segmenters(),
            seed: 0,
            best_of: 1,
            preprocess: PreprocessOptions::default(),
            tiling: TilingConfig::default(),
            features: FeatureConfig::default(),
            og: OgConfig::default(),
            eval: EvalOptions::default(),
            sweep: BTreeMap::new(),
        }
    }

    /// Reads a TOML file (or JSON, by extension) and resolves its relative paths.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&content).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&content).map_err(|e| {
                let (line, column) = e
                    .span()
                    .map(|s| line_column(&content, s.start))
                    .unwrap_or((0, 0));
                Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column,
                    message: e.message().to_string(),
                }
            })?
        };
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.paths.iter_mut().for_each(fix);
        fix(&mut self.output);
        if let Some(p) = self.preprocess.stoplist.as_mut() {
            fix(p);
        }
        if let CorefSource::File(p) = &mut self.features.coref_source {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.paths.is_empty() {
            return Err(Error::Config("no corpus paths given".into()));
        }
        if self.segmenters.is_empty() {
            return Err(Error::Config("no segmenters given".into()));
        }
        if self.best_of == 0 {
            return Err(Error::Config("best_of must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.segmenters {
            if !seen.insert(s.to_string()) {
                return Err(Error::Config(format!("segmenter `{s}` listed twice")));
            }
        }
        self.tiling.validate()?;
        self.features.validate()?;
        self.og.validate()?;
        self.eval.validate()
    }

    pub fn cm_options(&self) -> CharacterMiningOptions {
        CharacterMiningOptions {
            attached_notes: self.corpus.attached_notes,
        }
    }
}

fn line_column(content: &str, offset: usize) -> (usize, usize) {
    let before = &content[..offset.min(content.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Loads every corpus file, logging each failure; the first failure is
/// returned. Documents come back sorted by id.
pub fn load_documents(config: &CorpusConfig) -> Result<(Vec<Transcript>, Vec<PathBuf>)> {
    let opts = CharacterMiningOptions {
        attached_notes: config.attached_notes,
    };
    let mut files = Vec::new();
    for path in &config.paths {
        files.extend(corpus::corpus_files(path, config.format)?);
    }
    if files.is_empty() {
        return Err(Error::Config("corpus paths contain no corpus files".into()));
    }
    let loaded: Vec<Result<Vec<Transcript>>> = files
        .par_iter()
        .map(|f| corpus::load_file(f, config.format, &opts))
        .collect();
    let mut docs = Vec::new();
    let mut first_error = None;
    for (file, result) in files.iter().zip(loaded) {
        match result {
            Ok(d) => docs.extend(d),
            Err(e) => {
                log::error!("{}: {e}", file.display());
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(w) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(Error::InvalidDocument(format!("doc_id `{}` occurs twice in the corpus", w[0].doc_id)));
    }
    Ok((docs, files))
}

/// Prediction for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocPrediction {
    pub segmentation: Segmentation,
    /// For runs with question suppression: whether it changed the boundaries.
    pub questions_changed: Option<bool>,
}

/// Runs one segmenter over the documents (in parallel, order preserved).
pub fn segment_documents(
    spec: SegmenterSpec,
    docs: &[Transcript],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<DocPrediction>> {
    let plain = |segmentation| DocPrediction {
        segmentation,
        questions_changed: None,
    };
    match spec {
        SegmenterSpec::Random => Ok(docs
            .par_iter()
            .map(|d| plain(random_baseline(d.len(), &mut document_rng(seed, &d.doc_id))))
            .collect()),
        SegmenterSpec::OgTextTiling => {
            let og = OgTextTiling::new(config.og.clone(), &config.preprocess)?;
            docs.par_iter().map(|d| og.segment(d).map(plain)).collect()
        }
        SegmenterSpec::Tiling(variant) => {
            let (tiling, features) = variant.configure(&config.tiling, &config.features);
            let segmenter = Segmenter::new(tiling, features, &config.preprocess)?;
            docs.par_iter()
                .map(|d| {
                    let (segmentation, trace) = segmenter.segment_traced(d)?;
                    let questions_changed = trace.without_questions.map(|w| w != segmentation);
                    Ok(DocPrediction {
                        segmentation,
                        questions_changed,
                    })
                })
                .collect()
        }
    }
}

/// Outcome of one segmenter in an experiment.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub name: String,
    pub report: EvalReport,
    pub per_document: Vec<EvalReport>,
    pub predictions: Vec<BoundaryRecord>,
    pub questions_changed: Option<usize>,
    /// Chosen repetition when `best_of > 1` applies.
    pub best_iteration: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub results: Vec<VariantResult>,
    pub documents: usize,
    pub skipped: Vec<String>,
    pub manifest: Manifest,
}

fn evaluate_predictions(
    name: &str,
    docs: &[Transcript],
    golds: &[Segmentation],
    predictions: Vec<DocPrediction>,
    options: &EvalOptions,
) -> Result<VariantResult> {
    let per_document = docs
        .iter()
        .zip(golds)
        .zip(&predictions)
        .map(|((d, g), p)| eval::evaluate(&d.doc_id, g, &p.segmentation, options))
        .collect::<Result<Vec<_>>>()?;
    let with_questions: Vec<bool> = predictions.iter().filter_map(|p| p.questions_changed).collect();
    Ok(VariantResult {
        name: name.to_string(),
        report: eval::aggregate(&per_document)?,
        per_document,
        predictions: docs
            .iter()
            .zip(&predictions)
            .map(|(d, p)| BoundaryRecord::new(&d.doc_id, &p.segmentation))
            .collect(),
        questions_changed: (!with_questions.is_empty())
            .then(|| with_questions.iter().filter(|&&c| c).count()),
        best_iteration: None,
    })
}

/// Segments and evaluates `docs` with one segmenter. For the random baseline
/// with `best_of > 1` the repetition with the highest summed relaxed
/// F-measures is returned.
pub fn run_variant(
    spec: SegmenterSpec,
    docs: &[Transcript],
    golds: &[Segmentation],
    config: &ExperimentConfig,
) -> Result<VariantResult> {
    let name = spec.to_string();
    if spec != SegmenterSpec::Random || config.best_of == 1 {
        let preds = segment_documents(spec, docs, config, config.seed)?;
        return evaluate_predictions(&name, docs, golds, preds, &config.eval);
    }
    let mut best: Option<VariantResult> = None;
    for i in 0..config.best_of {
        let preds = segment_documents(spec, docs, config, config.seed.wrapping_add(i as u64))?;
        let mut result = evaluate_predictions(&name, docs, golds, preds, &config.eval)?;
        result.best_iteration = Some(i);
        if best.as_ref().is_none_or(|b| result.report.fk_sum() > b.report.fk_sum()) {
            best = Some(result);
        }
    }
    Ok(best.expect("best_of is at least 1"))
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn boundary_bytes(records: &[BoundaryRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    eval::write_boundary_records(&mut buf, records).expect("writing to memory");
    buf
}

/// Segments and evaluates the corpus with every configured segmenter and
/// writes `gold.jsonl`, `<segmenter>/predictions.jsonl`,
/// `<segmenter>/per_document.tsv`, `metrics.tsv`, `report.txt` and
/// `manifest.json` under the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let (all_docs, files) = load_documents(&config.corpus)?;
    let mut skipped = Vec::new();
    let docs: Vec<Transcript> = all_docs
        .into_iter()
        .filter(|d| {
            let keep = d.len() >= 2;
            if !keep {
                log::warn!("document `{}` has {} utterance(s), skipped", d.doc_id, d.len());
                skipped.push(d.doc_id.clone());
            }
            keep
        })
        .collect();
    if docs.is_empty() {
        return Err(Error::InvalidDocument("no document with at least two utterances".into()));
    }
    let golds = docs.iter().map(Transcript::gold_segmentation).collect::<Result<Vec<_>>>()?;

    let mut results = Vec::new();
    for &spec in &config.segmenters {
        log::info!("running {spec} on {} documents", docs.len());
        let result = run_variant(spec, &docs, &golds, config)?;
        if let Some(0) = result.questions_changed {
            log::warn!("{}: question suppression changed no boundaries", result.name);
        }
        results.push(result);
    }

    let out = &config.output;
    let gold_records: Vec<_> = docs
        .iter()
        .zip(&golds)
        .map(|(d, g)| BoundaryRecord::new(&d.doc_id, g))
        .collect();
    write_file(&out.join("gold.jsonl"), &boundary_bytes(&gold_records))?;
    for r in &results {
        let dir = out.join(&r.name);
        write_file(&dir.join("predictions.jsonl"), &boundary_bytes(&r.predictions))?;
        let docs_tsv = per_document_tsv(&docs, &golds, r, &config.eval.ks);
        write_file(&dir.join("per_document.tsv"), docs_tsv.as_bytes())?;
    }
    write_file(&out.join("metrics.tsv"), metrics_tsv(&results, &config.eval.ks).as_bytes())?;
    write_file(&out.join("report.txt"), format_table(&results, &config.eval.ks).as_bytes())?;
    let manifest = Manifest::build(config, &files, docs.len(), &skipped, &results)?;
    write_file(&out.join("manifest.json"), manifest.to_json().as_bytes())?;

    Ok(ExperimentOutcome {
        results,
        documents: docs.len(),
        skipped,
        manifest,
    })
}

/// One point of a sweep grid.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub name: String,
    pub config: ExperimentConfig,
}

fn set_dotted(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields one part");
    for part in parents {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("sweep key `{key}` does not name a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    node.as_table_mut()
        .ok_or_else(|| Error::Config(format!("sweep key `{key}` does not name a table")))?
        .insert(last.to_string(), value);
    Ok(())
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Expands the sweep grid into concrete configurations, in lexicographic
/// order of keys and listed order of values. Each point writes into its own
/// subdirectory of the output directory.
pub fn sweep_points(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    if config.sweep.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if let Some((k, _)) = config.sweep.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("sweep key `{k}` has no values")));
    }
    let mut base = config.clone();
    base.sweep.clear();
    let base_value = toml::Value::try_from(&base).map_err(|e| Error::Internal(e.to_string()))?;

    let mut combos: Vec<Vec<(&String, &toml::Value)>> = vec![Vec::new()];
    for (key, values) in &config.sweep {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut next = c.clone();
                    next.push((key, v));
                    next
                })
            })
            .collect();
    }

    combos
        .into_iter()
        .map(|combo| {
            let mut value = base_value.clone();
            for (k, v) in &combo {
                set_dotted(&mut value, k, (*v).clone())?;
            }
            let mut point: ExperimentConfig = value
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("invalid sweep point: {}", e.message())))?;
            let name = combo
                .iter()
                .map(|(k, v)| format!("{k}={}", value_label(v)))
                .collect::<Vec<_>>()
                .join(",");
            point.output = config.output.join(&name);
            Ok(SweepPoint { name, config: point })
        })
        .collect()
}

/// Runs every sweep point and writes `sweep.tsv` with one row per point and
/// segmenter, linking each row to its point's manifest.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<(SweepPoint, ExperimentOutcome)>> {
    let points = sweep_points(config)?;
    let mut rows = Vec::new();
    for point in points {
        log::info!("sweep point {}", point.name);
        let outcome = run_experiment(&point.config)?;
        rows.push((point, outcome));
    }
    write_file(
        &config.output.join("sweep.tsv"),
        report::sweep_tsv(&rows, &config.eval.ks).as_bytes(),
    )?;
    Ok(rows)
}
