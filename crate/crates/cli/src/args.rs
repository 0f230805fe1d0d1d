use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dialseg::corpus::{AttachedNotes, CorpusFormat};
use dialseg::eval::EvalOptions;
use dialseg::features::CorefSource;
use dialseg::harness::{CorpusConfig, ExperimentConfig, SegmenterSpec};
use dialseg::pipeline::Variant;
use dialseg::tiling::{LexicalMethod, Memory, Similarity};
use dialseg::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "dialseg", version, about = "Topic segmentation for multi-party dialogue transcripts")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only report errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> log::LevelFilter {
        if self.quiet {
            return log::LevelFilter::Error;
        }
        match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a corpus and write one boundary record per document.
    Segment(SegmentArgs),
    /// Score predicted boundaries against gold boundaries.
    Evaluate(EvaluateArgs),
    /// Run the random or original TextTiling baseline.
    Baseline(BaselineArgs),
    /// Segment and evaluate a corpus with several segmenters.
    Experiment(ExperimentArgs),
    /// Run an experiment once per point of a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NotesArg {
    Boundary,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    Sd,
    Si,
    Q,
    Co,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineKind {
    Random,
    Og,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Tolerances for the relaxed F-measure.
    #[arg(long = "fk", value_delimiter = ',', value_name = "K")]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Pk window; half the mean gold segment length when omitted.
    #[arg(long)]
    pub pk_window: Option<usize>,
}

impl EvalArgs {
    pub fn options(&self, mut base: EvalOptions) -> EvalOptions {
        if !self.ks.is_empty() {
            base.ks = self.ks.clone();
        }
        if let Some(b) = self.beta {
            base.beta = b;
        }
        if self.pk_window.is_some() {
            base.pk_window = self.pk_window;
        }
        base
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus files or directories.
    #[arg(long, value_delimiter = ',')]
    pub corpus: Vec<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<CorpusFormat>)]
    pub format: Option<CorpusFormat>,
    #[arg(long, value_enum)]
    pub attached_notes: Option<NotesArg>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// bc, vi or bc+vi.
    #[arg(long, value_parser = parse_from_str::<LexicalMethod>)]
    pub method: Option<LexicalMethod>,
    /// Block size in spans.
    #[arg(long)]
    pub k: Option<usize>,
    /// Target span length in tokens.
    #[arg(long)]
    pub w: Option<usize>,
    /// Novelty memory in utterances, or `inf`.
    #[arg(long, value_parser = parse_from_str::<Memory>)]
    pub memory: Option<Memory>,
    #[arg(long)]
    pub smoothing_window: Option<usize>,
    #[arg(long)]
    pub smoothing_rounds: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold_sigma: Option<f64>,
    #[arg(long, value_parser = parse_from_str::<Similarity>)]
    pub similarity: Option<Similarity>,

    /// Dialogue features to enable; `none` clears them.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub features: Vec<FeatureArg>,
    /// Multiplier for depth at a new speaker's first turn.
    #[arg(long)]
    pub boost: Option<f64>,
    /// `heuristic` or `file:<path>`.
    #[arg(long, value_parser = parse_from_str::<CorefSource>)]
    pub coref_source: Option<CorefSource>,
    #[arg(long)]
    pub coref_scale: Option<f64>,

    #[arg(long)]
    pub stemming: bool,
    /// Replacement stop list, one word per line.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,

    #[command(flatten)]
    pub eval: EvalArgs,
}

fn parse_from_str<T>(s: &str) -> std::result::Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

impl CommonArgs {
    /// The configuration file (or defaults) with every given flag applied.
    pub fn experiment_config(&self, output: Option<PathBuf>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => {
                if self.corpus.is_empty() {
                    return Err(Error::Config("either --config or --corpus is required".into()));
                }
                let format = self
                    .format
                    .ok_or_else(|| Error::Config("--format is required without --config".into()))?;
                ExperimentConfig::new(
                    CorpusConfig {
                        paths: Vec::new(),
                        format,
                        attached_notes: AttachedNotes::default(),
                    },
                    PathBuf::from("dialseg-output"),
                )
            }
        };
        if !self.corpus.is_empty() {
            cfg.corpus.paths = self.corpus.clone();
        }
        if let Some(f) = self.format {
            cfg.corpus.format = f;
        }
        if let Some(n) = self.attached_notes {
            cfg.corpus.attached_notes = match n {
                NotesArg::Boundary => AttachedNotes::Boundary,
                NotesArg::Ignore => AttachedNotes::Ignore,
            };
        }
        if let Some(o) = output {
            cfg.output = o;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }

        let t = &mut cfg.tiling;
        if let Some(m) = self.method {
            t.method = m;
        }
        if let Some(k) = self.k {
            t.k = k;
        }
        if let Some(w) = self.w {
            t.w = w;
        }
        if let Some(m) = self.memory {
            t.memory = m;
        }
        if let Some(v) = self.smoothing_window {
            t.smoothing_window = v;
        }
        if let Some(v) = self.smoothing_rounds {
            t.smoothing_rounds = v;
        }
        if let Some(v) = self.threshold_sigma {
            t.threshold_sigma = v;
        }
        if let Some(v) = self.similarity {
            t.similarity = v;
        }

        let f = &mut cfg.features;
        if !self.features.is_empty() {
            f.speaker_depth = self.features.contains(&FeatureArg::Sd);
            f.speaker_intro = self.features.contains(&FeatureArg::Si);
            f.questions = self.features.contains(&FeatureArg::Q);
            f.coref = self.features.contains(&FeatureArg::Co);
        }
        if let Some(b) = self.boost {
            f.boost = b;
        }
        if let Some(c) = &self.coref_source {
            f.coref_source = c.clone();
        }
        if let Some(s) = self.coref_scale {
            f.coref_scale = s;
        }

        if self.stemming {
            cfg.preprocess.stemming = true;
        }
        if let Some(s) = &self.stoplist {
            cfg.preprocess.stoplist = Some(s.clone());
        }
        cfg.eval = self.eval.options(cfg.eval);
        Ok(cfg)
    }
}

/// The tiling variant described by the method and feature settings.
pub fn configured_variant(cfg: &ExperimentConfig) -> SegmenterSpec {
    SegmenterSpec::Tiling(Variant {
        method: cfg.tiling.method,
        speaker_depth: cfg.features.speaker_depth,
        speaker_intro: cfg.features.speaker_intro,
        questions: cfg.features.questions,
        coref: cfg.features.coref,
    })
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// random, og-texttiling or a variant such as bc+sd; defaults to the
    /// method and features given.
    #[arg(long, value_parser = parse_from_str::<SegmenterSpec>)]
    pub segmenter: Option<SegmenterSpec>,
    /// Boundary file to write; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random repetitions; the one scoring best against gold is kept.
    #[arg(long)]
    pub best_of: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold boundary file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted boundary file.
    #[arg(long)]
    pub pred: PathBuf,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Print one line per document as well.
    #[arg(long)]
    pub per_document: bool,
    /// Print the corpus report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<SegmenterSpec>)]
    pub segmenters: Vec<SegmenterSpec>,
    #[arg(long)]
    pub best_of: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<SegmenterSpec>)]
    pub segmenters: Vec<SegmenterSpec>,
    /// Grid axis as `dotted.key=v1,v2,...` (repeatable).
    #[arg(long)]
    pub grid: Vec<String>,
}

/// Parses `key=v1,v2`; each value is read as a TOML literal and falls back
/// to a plain string.
pub fn parse_grid(spec: &str) -> Result<(String, Vec<toml::Value>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("grid axis `{spec}` must look like key=v1,v2")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("grid axis `{spec}` has no key")));
    }
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            toml::from_str::<toml::Table>(&format!("v = {v}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()))
        })
        .collect::<Vec<_>>();
    if values.is_empty() {
        return Err(Error::Config(format!("grid axis `{key}` has no values")));
    }
    Ok((key.to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_keep_their_types() {
        let (k, v) = parse_grid("tiling.threshold_sigma=0.25, 1").unwrap();
        assert_eq!(k, "tiling.threshold_sigma");
        assert_eq!(v, [toml::Value::Float(0.25), toml::Value::Integer(1)]);
        let (_, v) = parse_grid("tiling.memory=inf,20,\"bc+sd\",bc").unwrap();
        assert_eq!(v[0], toml::Value::Float(f64::INFINITY));
        assert_eq!(v[2], toml::Value::String("bc+sd".into()));
        assert_eq!(v[3], toml::Value::String("bc".into()));
        assert!(parse_grid("novalues=").is_err());
        assert!(parse_grid("noequals").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "dialseg", "segment", "--corpus", "c.jsonl", "--format", "native-jsonl", "--features", "sd,q",
            "--memory", "inf", "--threshold-sigma", "-0.5", "--fk", "3",
        ])
        .unwrap();
        let Command::Segment(a) = cli.command else { panic!() };
        let cfg = a.common.experiment_config(None).unwrap();
        assert!(cfg.features.speaker_depth && cfg.features.questions && !cfg.features.coref);
        assert_eq!(cfg.tiling.memory, Memory::UNBOUNDED);
        assert_eq!(cfg.tiling.threshold_sigma, -0.5);
        assert_eq!(cfg.eval.ks, [3]);
        assert_eq!(configured_variant(&cfg).to_string(), "bc+sd+q");
    }

    #[test]
    fn corpus_is_required_without_config() {
        let cli = Cli::try_parse_from(["dialseg", "segment", "--format", "native-jsonl"]).unwrap();
        let Command::Segment(a) = cli.command else { panic!() };
        assert!(a.common.experiment_config(None).is_err());
    }
}
