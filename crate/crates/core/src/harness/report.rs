//! Tabular reports and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, ExperimentOutcome, SweepPoint, VariantResult};
use crate::corpus::Transcript;
use crate::error::{Error, Result};
use crate::eval::{EvalOptions, Segmentation};
use crate::features::FeatureConfig;
use crate::harness::OgConfig;
use crate::preprocess::{PreprocessOptions, StopList};
use crate::tiling::TilingConfig;

fn metric_columns(ks: &[usize]) -> Vec<String> {
    let mut cols = vec!["F1".to_string()];
    cols.extend(ks.iter().map(|k| format!("Fk{k}")));
    cols.push("Pk".into());
    cols
}

fn metric_values(report: &crate::eval::EvalReport, ks: &[usize]) -> Vec<f64> {
    let mut vals = vec![report.f1];
    vals.extend(ks.iter().map(|k| report.fk.get(k).copied().unwrap_or(f64::NAN)));
    vals.push(report.pk);
    vals
}

/// Fixed-width table, one row per segmenter, metrics ×100 with two decimals.
pub fn format_table(results: &[VariantResult], ks: &[usize]) -> String {
    let cols = metric_columns(ks);
    let name_width = results.iter().map(|r| r.name.len()).max().unwrap_or(0).max("segmenter".len());
    let mut out = format!("{:<name_width$}", "segmenter");
    for c in &cols {
        let _ = write!(out, "  {c:>7}");
    }
    out.push('\n');
    for r in results {
        let _ = write!(out, "{:<name_width$}", r.name);
        for v in metric_values(&r.report, ks) {
            let _ = write!(out, "  {:>7.2}", v * 100.0);
        }
        out.push('\n');
    }
    out
}

/// Corpus-level metrics in [0, 1], full precision.
pub fn metrics_tsv(results: &[VariantResult], ks: &[usize]) -> String {
    let mut out = String::from("segmenter\tdocuments");
    for c in metric_columns(ks) {
        let _ = write!(out, "\t{}", c.to_lowercase());
    }
    out.push('\n');
    for r in results {
        let _ = write!(out, "{}\t{}", r.name, r.report.doc_ids.len());
        for v in metric_values(&r.report, ks) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub fn per_document_tsv(docs: &[Transcript], golds: &[Segmentation], result: &VariantResult, ks: &[usize]) -> String {
    let mut out = String::from("doc_id\tn\tgold\tpredicted");
    for c in metric_columns(ks) {
        let _ = write!(out, "\t{}", c.to_lowercase());
    }
    out.push('\n');
    for (((doc, gold), pred), report) in docs.iter().zip(golds).zip(&result.predictions).zip(&result.per_document) {
        let _ = write!(out, "{}\t{}\t{}\t{}", doc.doc_id, doc.len(), gold.boundaries().len(), pred.boundaries.len());
        for v in metric_values(report, ks) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub(crate) fn sweep_tsv(rows: &[(SweepPoint, ExperimentOutcome)], ks: &[usize]) -> String {
    let mut out = String::from("point\tsegmenter\tdocuments");
    for c in metric_columns(ks) {
        let _ = write!(out, "\t{}", c.to_lowercase());
    }
    out.push_str("\tmanifest\n");
    for (point, outcome) in rows {
        for r in &outcome.results {
            let _ = write!(out, "{}\t{}\t{}", point.name, r.name, r.report.doc_ids.len());
            for v in metric_values(&r.report, ks) {
                let _ = write!(out, "\t{v}");
            }
            let _ = writeln!(out, "\t{}/manifest.json", point.name);
        }
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusFileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantEntry {
    pub name: String,
    pub predictions: String,
    pub per_document: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub questions_changed_documents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_iteration: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestConfig {
    pub seed: u64,
    pub best_of: usize,
    pub preprocess: PreprocessOptions,
    pub stoplist_version: String,
    pub tiling: TilingConfig,
    pub features: FeatureConfig,
    pub og: OgConfig,
    pub eval: EvalOptions,
}

/// Machine-readable description of a run. Output file names are relative to
/// the run directory; there are no timestamps, so identical runs produce
/// identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub corpus_format: String,
    pub attached_notes: crate::corpus::AttachedNotes,
    pub corpus_files: Vec<CorpusFileEntry>,
    pub config: ManifestConfig,
    pub documents: usize,
    pub skipped_documents: Vec<String>,
    pub gold: String,
    pub metrics: String,
    pub table: String,
    pub segmenters: Vec<VariantEntry>,
}

impl Manifest {
    pub(crate) fn build(
        config: &ExperimentConfig,
        files: &[PathBuf],
        documents: usize,
        skipped: &[String],
        results: &[VariantResult],
    ) -> Result<Self> {
        let stoplist = match &config.preprocess.stoplist {
            Some(p) => StopList::from_file(p)?,
            None => StopList::default(),
        };
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            corpus_format: config.corpus.format.to_string(),
            attached_notes: config.corpus.attached_notes,
            corpus_files: files
                .iter()
                .map(|f| {
                    Ok(CorpusFileEntry {
                        path: f.clone(),
                        sha256: sha256_file(f)?,
                    })
                })
                .collect::<Result<_>>()?,
            config: ManifestConfig {
                seed: config.seed,
                best_of: config.best_of,
                preprocess: config.preprocess.clone(),
                stoplist_version: stoplist.version().to_string(),
                tiling: config.tiling.clone(),
                features: config.features.clone(),
                og: config.og.clone(),
                eval: config.eval.clone(),
            },
            documents,
            skipped_documents: skipped.to_vec(),
            gold: "gold.jsonl".into(),
            metrics: "metrics.tsv".into(),
            table: "report.txt".into(),
            segmenters: results
                .iter()
                .map(|r| VariantEntry {
                    name: r.name.clone(),
                    predictions: format!("{}/predictions.jsonl", r.name),
                    per_document: format!("{}/per_document.tsv", r.name),
                    questions_changed_documents: r.questions_changed,
                    best_iteration: r.best_iteration,
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::eval::EvalReport;

    fn result(name: &str, f1: f64, pk: f64) -> VariantResult {
        VariantResult {
            name: name.into(),
            report: EvalReport {
                doc_ids: vec!["a".into(), "b".into()],
                pk,
                f1,
                fk: BTreeMap::from([(1, 0.305678), (2, 0.456)]),
                matches: BTreeMap::new(),
            },
            per_document: Vec::new(),
            predictions: Vec::new(),
            questions_changed: None,
            best_iteration: None,
        }
    }

    #[test]
    fn table_layout() {
        let t = format_table(&[result("bc", 0.1078, 0.4958), result("bc+sd", 0.1494, 0.467)], &[1, 2]);
        let expected = "\
segmenter       F1      Fk1      Fk2       Pk
bc           10.78    30.57    45.60    49.58
bc+sd        14.94    30.57    45.60    46.70
";
        assert_eq!(t, expected);
    }

    #[test]
    fn tsv_layout() {
        let t = metrics_tsv(&[result("bc", 0.5, 0.25)], &[1, 2]);
        assert_eq!(t, "segmenter\tdocuments\tf1\tfk1\tfk2\tpk\nbc\t2\t0.5\t0.305678\t0.456\t0.25\n");
    }
}
