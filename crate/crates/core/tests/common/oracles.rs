//! Slow reference implementations of the evaluation metrics.

#![allow(dead_code)]

/// Largest number of disjoint `(pred, gold)` pairs with `|p - g| <= k`, by
/// exhaustive search over subsets of gold boundaries.
pub fn brute_force_matching(gold: &[usize], pred: &[usize], k: usize) -> usize {
    fn go(i: usize, used: u32, gold: &[usize], pred: &[usize], k: usize) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(i + 1, used, gold, pred, k);
        for (j, &g) in gold.iter().enumerate() {
            if used & (1 << j) == 0 && pred[i].abs_diff(g) <= k {
                best = best.max(1 + go(i + 1, used | (1 << j), gold, pred, k));
            }
        }
        best
    }
    assert!(gold.len() <= 32);
    go(0, 0, gold, pred, k)
}

fn ratio(matched: usize, total: usize, other: usize) -> f64 {
    match (total, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => matched as f64 / total as f64,
    }
}

pub fn fk_oracle(gold: &[usize], pred: &[usize], k: usize, beta: f64) -> f64 {
    let m = brute_force_matching(gold, pred, k);
    let p = ratio(m, pred.len(), gold.len());
    let r = ratio(m, gold.len(), pred.len());
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    }
}

/// Pk by enumerating every probe pair `(i, i + window)` and asking each side
/// whether any boundary falls strictly after `i` and at or before `i + window`.
pub fn pk_oracle(n: usize, gold: &[usize], pred: &[usize], window: usize) -> f64 {
    let window = window.min(n - 1);
    let split = |bs: &[usize], i: usize, j: usize| bs.iter().any(|&b| b > i && b <= j);
    let mut pairs = 0usize;
    let mut wrong = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if j - i != window {
                continue;
            }
            pairs += 1;
            if split(gold, i, j) != split(pred, i, j) {
                wrong += 1;
            }
        }
    }
    wrong as f64 / pairs as f64
}

/// Window rule of the metric: half the mean gold segment length, at least 2.
pub fn pk_default_window(n: usize, gold: &[usize]) -> usize {
    let segments = gold.len() + 1;
    ((n as f64 / (2.0 * segments as f64)).round() as usize).max(2)
}
