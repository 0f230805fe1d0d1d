mod args;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use dialseg::eval::{self, BoundaryRecord, EvalReport};
use dialseg::harness::{self, ExperimentConfig, SegmenterSpec, VariantResult};
use dialseg::{Error, ErrorCategory, Result};

use args::{BaselineKind, Cli, Command};

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Config => 2,
        ErrorCategory::Io => 3,
        ErrorCategory::Parse => 4,
        ErrorCategory::Data => 5,
        ErrorCategory::Internal => 6,
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(p, bytes).map_err(|e| Error::io(p, e))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn records_bytes(records: &[BoundaryRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    eval::write_boundary_records(&mut buf, records).expect("writing to memory");
    buf
}

/// Segments the configured corpus with one segmenter. For the random
/// baseline with `best_of > 1` the repetition scoring best against gold is
/// kept and its evaluation returned as well.
fn segment_corpus(config: &ExperimentConfig, spec: SegmenterSpec) -> Result<(Vec<BoundaryRecord>, Option<VariantResult>)> {
    let (docs, _) = harness::load_documents(&config.corpus)?;
    let docs: Vec<_> = docs
        .into_iter()
        .filter(|d| {
            let keep = d.len() >= 2;
            if !keep {
                log::warn!("document `{}` has fewer than two utterances, skipped", d.doc_id);
            }
            keep
        })
        .collect();
    if spec == SegmenterSpec::Random && config.best_of > 1 {
        let golds = docs.iter().map(|d| d.gold_segmentation()).collect::<Result<Vec<_>>>()?;
        let result = harness::run_variant(spec, &docs, &golds, config)?;
        return Ok((result.predictions.clone(), Some(result)));
    }
    let preds = harness::segment_documents(spec, &docs, config, config.seed)?;
    let records = docs
        .iter()
        .zip(&preds)
        .map(|(d, p)| BoundaryRecord::new(&d.doc_id, &p.segmentation))
        .collect();
    Ok((records, None))
}

fn report_line(name: &str, r: &EvalReport) -> String {
    let fk: Vec<String> = r.fk.iter().map(|(k, v)| format!("Fk{k}={:.2}", v * 100.0)).collect();
    format!("{name}: F1={:.2} {} Pk={:.2} ({} documents)", r.f1 * 100.0, fk.join(" "), r.pk * 100.0, r.doc_ids.len())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => {
            let config = a.common.experiment_config(None)?;
            config.validate()?;
            let spec = a.segmenter.unwrap_or_else(|| args::configured_variant(&config));
            let (records, _) = segment_corpus(&config, spec)?;
            write_output(a.output.as_deref(), &records_bytes(&records))
        }
        Command::Baseline(a) => {
            let mut config = a.common.experiment_config(None)?;
            if let Some(n) = a.best_of {
                config.best_of = n;
            }
            config.validate()?;
            let spec = match a.kind {
                BaselineKind::Random => SegmenterSpec::Random,
                BaselineKind::Og => SegmenterSpec::OgTextTiling,
            };
            let (records, chosen) = segment_corpus(&config, spec)?;
            if let Some(r) = chosen {
                eprintln!(
                    "kept repetition {} of {}: {}",
                    r.best_iteration.unwrap_or(0) + 1,
                    config.best_of,
                    report_line(&r.name, &r.report)
                );
            }
            write_output(a.output.as_deref(), &records_bytes(&records))
        }
        Command::Evaluate(a) => {
            let options = a.eval.options(Default::default());
            options.validate()?;
            let gold = eval::read_boundary_file(&a.gold)?;
            let pred = eval::read_boundary_file(&a.pred)?;
            let by_id: std::collections::BTreeMap<_, _> = pred.iter().map(|r| (r.doc_id.as_str(), r)).collect();
            let mut reports = Vec::new();
            for g in &gold {
                let p = by_id.get(g.doc_id.as_str()).ok_or_else(|| {
                    Error::InvalidSegmentation(format!("no prediction for document `{}`", g.doc_id))
                })?;
                if g.n < 2 {
                    log::warn!("document `{}` has fewer than two utterances, skipped", g.doc_id);
                    continue;
                }
                let report = eval::evaluate(&g.doc_id, &g.segmentation()?, &p.segmentation()?, &options)?;
                if a.per_document {
                    println!("{}", report_line(&g.doc_id, &report));
                }
                reports.push(report);
            }
            let total = eval::aggregate(&reports)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&total).map_err(|e| Error::Internal(e.to_string()))?);
            } else {
                println!("{}", report_line("corpus", &total));
            }
            Ok(())
        }
        Command::Experiment(a) => {
            let mut config = a.common.experiment_config(a.output)?;
            if !a.segmenters.is_empty() {
                config.segmenters = a.segmenters;
            }
            if let Some(n) = a.best_of {
                config.best_of = n;
            }
            let outcome = harness::run_experiment(&config)?;
            print!("{}", harness::format_table(&outcome.results, &config.eval.ks));
            eprintln!("artifacts written to {}", config.output.display());
            Ok(())
        }
        Command::Sweep(a) => {
            let mut config = a.common.experiment_config(a.output)?;
            if !a.segmenters.is_empty() {
                config.segmenters = a.segmenters;
            }
            for g in &a.grid {
                let (key, values) = args::parse_grid(g)?;
                config.sweep.insert(key, values);
            }
            let rows = harness::run_sweep(&config)?;
            for (point, outcome) in &rows {
                for r in &outcome.results {
                    println!("{}", report_line(&format!("{} {}", point.name, r.name), &r.report));
                }
            }
            eprintln!("sweep table written to {}", config.output.join("sweep.tsv").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level())
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.category()))
        }
    }
}
