//! Segmentation metrics: Pk, exact-match F1, and the relaxed Fk where a
//! prediction within `k` utterances of a not-yet-used gold boundary counts
//! as correct, with precision weighted over recall (`beta = 0.5`).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_FK_TOLERANCES: [usize; 2] = [1, 2];

/// Boundary positions over the gaps of an `n`-utterance document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segmentation {
    n: usize,
    boundaries: Vec<usize>,
}

impl Segmentation {
    /// Sorts and deduplicates; rejects positions outside `1..n`.
    pub fn new(n: usize, boundaries: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut boundaries: Vec<usize> = boundaries.into_iter().collect();
        boundaries.sort_unstable();
        boundaries.dedup();
        if let Some(&bad) = boundaries.iter().find(|&&b| b == 0 || b >= n) {
            return Err(Error::InvalidSegmentation(format!(
                "boundary {bad} outside 1..{n}"
            )));
        }
        Ok(Segmentation { n, boundaries })
    }

    pub fn empty(n: usize) -> Self {
        Segmentation {
            n,
            boundaries: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Segment label of every utterance.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.n);
        let mut seg = 0;
        let mut next = self.boundaries.iter().peekable();
        for i in 0..self.n {
            if next.next_if(|&&b| b == i).is_some() {
                seg += 1;
            }
            labels.push(seg);
        }
        labels
    }
}

fn same_length(gold: &Segmentation, pred: &Segmentation) -> Result<()> {
    if gold.n != pred.n {
        return Err(Error::InvalidSegmentation(format!(
            "gold covers {} utterances, prediction {}",
            gold.n, pred.n
        )));
    }
    Ok(())
}

/// Half the mean gold segment length, rounded, at least 2.
pub fn default_pk_window(gold: &Segmentation) -> usize {
    let half = gold.n as f64 / (2.0 * gold.segment_count() as f64);
    (half.round() as usize).max(2)
}

pub fn pk_score(gold: &Segmentation, pred: &Segmentation, window: Option<usize>) -> Result<f64> {
    same_length(gold, pred)?;
    let n = gold.n;
    if n < 2 {
        return Err(Error::UndefinedMetric(format!("Pk needs at least 2 utterances, got {n}")));
    }
    let window = match window {
        Some(0) => return Err(Error::Config("Pk window must be positive".into())),
        Some(w) => w,
        None => default_pk_window(gold),
    }
    .min(n - 1);

    let gold_labels = gold.labels();
    let pred_labels = pred.labels();
    let pairs = n - window;
    let disagreements = (0..pairs)
        .filter(|&i| {
            let j = i + window;
            (gold_labels[i] == gold_labels[j]) != (pred_labels[i] == pred_labels[j])
        })
        .count();
    Ok(disagreements as f64 / pairs as f64)
}

/// Precision with the empty-set conventions: an empty prediction is perfect
/// only against an empty gold.
fn ratio(matched: usize, total: usize, other_total: usize) -> f64 {
    match (total, other_total) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => matched as f64 / total as f64,
    }
}

pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

pub fn precision_recall(matched: usize, gold: &Segmentation, pred: &Segmentation) -> (f64, f64) {
    let (g, p) = (gold.boundaries.len(), pred.boundaries.len());
    (ratio(matched, p, g), ratio(matched, g, p))
}

pub fn f1_score(gold: &Segmentation, pred: &Segmentation) -> Result<f64> {
    same_length(gold, pred)?;
    let matched = match_boundaries(gold, pred, 0).pairs.len();
    let (p, r) = precision_recall(matched, gold, pred);
    Ok(f_beta(p, r, 1.0))
}

/// One-to-one pairing of predicted and gold boundaries at tolerance `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryMatching {
    /// `(predicted, gold)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

/// Maximum matching where `(p, g)` may pair iff `|p - g| <= k`.
///
/// Both sides are sorted and every edge set is an interval, so scanning
/// predictions left to right and giving each the leftmost still-free gold
/// boundary in `[p - k, p + k]` is optimal.
pub fn match_boundaries(gold: &Segmentation, pred: &Segmentation, k: usize) -> BoundaryMatching {
    let golds = &gold.boundaries;
    let mut used = vec![false; golds.len()];
    let mut out = BoundaryMatching::default();
    let mut lo = 0;
    for &p in &pred.boundaries {
        while lo < golds.len() && golds[lo] + k < p {
            lo += 1;
        }
        let hit = (lo..golds.len())
            .take_while(|&j| golds[j] <= p + k)
            .find(|&j| !used[j]);
        match hit {
            Some(j) => {
                used[j] = true;
                out.pairs.push((p, golds[j]));
            }
            None => out.unmatched_pred.push(p),
        }
    }
    out.unmatched_gold = golds
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(&g, _)| g)
        .collect();
    out
}

pub fn fk_score(gold: &Segmentation, pred: &Segmentation, k: usize) -> Result<f64> {
    fk_score_with_beta(gold, pred, k, DEFAULT_BETA)
}

pub fn fk_score_with_beta(gold: &Segmentation, pred: &Segmentation, k: usize, beta: f64) -> Result<f64> {
    same_length(gold, pred)?;
    let matched = match_boundaries(gold, pred, k).pairs.len();
    let (p, r) = precision_recall(matched, gold, pred);
    Ok(f_beta(p, r, beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Tolerances for the relaxed F-measure.
    pub ks: Vec<usize>,
    pub beta: f64,
    pub pk_window: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            ks: DEFAULT_FK_TOLERANCES.to_vec(),
            beta: DEFAULT_BETA,
            pk_window: None,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.pk_window == Some(0) {
            return Err(Error::Config("Pk window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub matched: usize,
    pub unmatched_pred: usize,
    pub unmatched_gold: usize,
}

impl From<&BoundaryMatching> for MatchCounts {
    fn from(m: &BoundaryMatching) -> Self {
        MatchCounts {
            matched: m.pairs.len(),
            unmatched_pred: m.unmatched_pred.len(),
            unmatched_gold: m.unmatched_gold.len(),
        }
    }
}

/// Metrics for one document, or the unweighted mean over several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub doc_ids: Vec<String>,
    pub pk: f64,
    pub f1: f64,
    /// Tolerance `k` → relaxed F-measure.
    pub fk: BTreeMap<usize, f64>,
    /// Tolerance `k` → match counts (summed when aggregated).
    pub matches: BTreeMap<usize, MatchCounts>,
}

impl EvalReport {
    pub fn fk_sum(&self) -> f64 {
        self.fk.values().sum()
    }
}

pub fn evaluate(
    doc_id: &str,
    gold: &Segmentation,
    pred: &Segmentation,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let pk = pk_score(gold, pred, options.pk_window)?;
    let f1 = f1_score(gold, pred)?;
    let mut fk = BTreeMap::new();
    let mut matches = BTreeMap::new();
    for &k in &options.ks {
        let m = match_boundaries(gold, pred, k);
        let (p, r) = precision_recall(m.pairs.len(), gold, pred);
        fk.insert(k, f_beta(p, r, options.beta));
        matches.insert(k, MatchCounts::from(&m));
    }
    Ok(EvalReport {
        doc_ids: vec![doc_id.to_string()],
        pk,
        f1,
        fk,
        matches,
    })
}

/// Unweighted mean over documents.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport> {
    let Some(first) = reports.first() else {
        return Err(Error::UndefinedMetric("cannot aggregate zero reports".into()));
    };
    let count = reports.len() as f64;
    let mean = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / count;

    let mut fk = BTreeMap::new();
    let mut matches = BTreeMap::new();
    for &k in first.fk.keys() {
        if reports.iter().any(|r| !r.fk.contains_key(&k)) {
            return Err(Error::Internal(format!("reports disagree on tolerance k={k}")));
        }
        fk.insert(k, mean(&|r| r.fk[&k]));
        let mut sum = MatchCounts::default();
        for c in reports.iter().filter_map(|r| r.matches.get(&k)) {
            sum.matched += c.matched;
            sum.unmatched_pred += c.unmatched_pred;
            sum.unmatched_gold += c.unmatched_gold;
        }
        matches.insert(k, sum);
    }
    Ok(EvalReport {
        doc_ids: reports.iter().flat_map(|r| r.doc_ids.iter().cloned()).collect(),
        pk: mean(&|r| r.pk),
        f1: mean(&|r| r.f1),
        fk,
        matches,
    })
}

/// One line of a boundary file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryRecord {
    pub doc_id: String,
    pub n: usize,
    pub boundaries: Vec<usize>,
}

impl BoundaryRecord {
    pub fn new(doc_id: &str, seg: &Segmentation) -> Self {
        BoundaryRecord {
            doc_id: doc_id.to_string(),
            n: seg.n,
            boundaries: seg.boundaries.clone(),
        }
    }

    pub fn segmentation(&self) -> Result<Segmentation> {
        Segmentation::new(self.n, self.boundaries.iter().copied())
    }
}

pub fn read_boundary_file(path: &Path) -> Result<Vec<BoundaryRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column,
            message,
        };
        let record: BoundaryRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.column(), e.to_string()))?;
        record.segmentation().map_err(|e| parse_err(1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_boundary_records<W: Write>(out: &mut W, records: &[BoundaryRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(n: usize, b: &[usize]) -> Segmentation {
        Segmentation::new(n, b.iter().copied()).unwrap()
    }

    #[test]
    fn segmentation_validates_and_normalizes() {
        assert_eq!(seg(10, &[5, 2, 5]).boundaries(), [2, 5]);
        assert!(Segmentation::new(4, [0]).is_err());
        assert!(Segmentation::new(4, [4]).is_err());
        assert_eq!(seg(5, &[2, 4]).labels(), [0, 0, 1, 1, 2]);
    }

    #[test]
    fn pk_perfect_is_zero() {
        let g = seg(20, &[4, 11, 15]);
        assert_eq!(pk_score(&g, &g, None).unwrap(), 0.0);
    }

    #[test]
    fn pk_missing_boundary_window_one() {
        // pairs (0,1) (1,2) (2,3); only (1,2) straddles the gold boundary
        let pk = pk_score(&seg(4, &[2]), &seg(4, &[]), Some(1)).unwrap();
        assert_eq!(pk, 1.0 / 3.0);
    }

    #[test]
    fn pk_without_boundaries_clamps_window() {
        let g = seg(10, &[]);
        assert_eq!(default_pk_window(&g), 5);
        assert_eq!(default_pk_window(&seg(4, &[2])), 2);
        assert_eq!(pk_score(&g, &g, None).unwrap(), 0.0);
    }

    #[test]
    fn pk_rejects_degenerate_input() {
        assert!(matches!(
            pk_score(&seg(1, &[]), &seg(1, &[]), None),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(pk_score(&seg(5, &[]), &seg(6, &[]), None).is_err());
        assert!(pk_score(&seg(5, &[]), &seg(5, &[]), Some(0)).is_err());
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1_score(&seg(10, &[3, 6]), &seg(10, &[3, 6])).unwrap(), 1.0);
        assert_eq!(f1_score(&seg(10, &[2, 5]), &seg(10, &[2, 7])).unwrap(), 0.5);
        assert_eq!(f1_score(&seg(10, &[2, 5]), &seg(10, &[])).unwrap(), 0.0);
        assert_eq!(f1_score(&seg(10, &[]), &seg(10, &[])).unwrap(), 1.0);
        assert_eq!(f1_score(&seg(10, &[]), &seg(10, &[4])).unwrap(), 0.0);
    }

    #[test]
    fn fk_cases() {
        let g = seg(10, &[4]);
        assert_eq!(fk_score(&seg(10, &[2, 7]), &seg(10, &[2, 7]), 0).unwrap(), 1.0);
        assert_eq!(fk_score(&g, &seg(10, &[3]), 1).unwrap(), 1.0);
        // one gold boundary cannot absorb two predictions: P = 0.5, R = 1
        let fk = fk_score(&g, &seg(10, &[3, 5]), 1).unwrap();
        assert!((fk - 1.25 * 0.5 / (0.25 * 0.5 + 1.0)).abs() < 1e-12);
        assert!((fk - 0.625 / 1.125).abs() < 1e-12);
    }

    #[test]
    fn greedy_matching_prefers_leftmost_free_gold() {
        // p=3 could take 2 or 4; taking 2 leaves 4 for p=5
        let m = match_boundaries(&seg(10, &[2, 4]), &seg(10, &[3, 5]), 1);
        assert_eq!(m.pairs, [(3, 2), (5, 4)]);
        assert!(m.unmatched_gold.is_empty() && m.unmatched_pred.is_empty());
    }

    #[test]
    fn aggregate_is_unweighted_mean() {
        let opts = EvalOptions::default();
        let a = evaluate("a", &seg(4, &[2]), &seg(4, &[]), &EvalOptions { pk_window: Some(1), ..opts.clone() }).unwrap();
        let mut b = a.clone();
        b.doc_ids = vec!["b".into()];
        b.pk = 0.6;
        let mut a2 = a.clone();
        a2.pk = 0.4;
        let agg = aggregate(&[a2, b]).unwrap();
        assert!((agg.pk - 0.5).abs() < 1e-12);
        assert_eq!(agg.doc_ids, ["a", "b"]);
        assert_eq!(agg.matches[&1].unmatched_gold, 2);

        let single = aggregate(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single, a);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn aggregate_ignores_document_length() {
        let opts = EvalOptions::default();
        let short = evaluate("s", &seg(4, &[2]), &seg(4, &[2]), &opts).unwrap();
        let long = evaluate("l", &seg(400, &[200]), &seg(400, &[]), &opts).unwrap();
        let agg = aggregate(&[short.clone(), long.clone()]).unwrap();
        assert!((agg.pk - (short.pk + long.pk) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.jsonl");
        let records = vec![
            BoundaryRecord::new("a", &seg(5, &[2])),
            BoundaryRecord::new("b", &seg(3, &[])),
        ];
        let mut f = std::fs::File::create(&path).unwrap();
        write_boundary_records(&mut f, &records).unwrap();
        assert_eq!(read_boundary_file(&path).unwrap(), records);

        std::fs::write(&path, "{\"doc_id\":\"a\",\"n\":3,\"boundaries\":[3]}\n").unwrap();
        assert!(matches!(read_boundary_file(&path), Err(Error::Parse { line: 1, .. })));
    }
}
