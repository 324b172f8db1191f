//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numeric paths.
#![allow(dead_code)]

use fgts_core::Label;

/// Fisher scores by the textbook two-pass formulas.
/// `samples[s][t][d]` is sample `s`, token `t`, dim `d`.
pub fn naive_fisher(real: &[Vec<Vec<f64>>], fake: &[Vec<Vec<f64>>], eps: f64) -> Vec<f64> {
    let n_tokens = real[0].len();
    let dim = real[0][0].len();
    let moments = |set: &[Vec<Vec<f64>>], t: usize, d: usize| {
        let n = set.len() as f64;
        let mean = set.iter().map(|s| s[t][d]).sum::<f64>() / n;
        let var = set.iter().map(|s| (s[t][d] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    };
    (0..n_tokens)
        .map(|t| {
            let mut total = 0.0;
            for d in 0..dim {
                let (mr, vr) = moments(real, t, d);
                let (mf, vf) = moments(fake, t, d);
                let num = (mr - mf).powi(2);
                total += if num == 0.0 { 0.0 } else { num / (vr + vf + eps) };
            }
            total / dim as f64
        })
        .collect()
}

/// Descending by score, ascending index on ties, by selection sort.
pub fn naive_order(scores: &[f64]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for j in 1..remaining.len() {
            let (a, b) = (remaining[j], remaining[best]);
            if scores[a] > scores[b] || (scores[a] == scores[b] && a < b) {
                best = j;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

/// Mean over all fake-real pairs of [s_f > s_r] + 0.5 [s_f == s_r].
pub fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, li) in labels.iter().enumerate() {
        if *li != Label::Fake {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if *lj != Label::Real {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Step AP recomputing recall and precision from scratch at every cut.
pub fn prefix_sweep_ap(scores: &[f64], labels: &[Label]) -> f64 {
    let n = scores.len();
    // insertion sort, descending, stable
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let pos = order
            .iter()
            .position(|&j| scores[j] < scores[i])
            .unwrap_or(order.len());
        order.insert(pos, i);
    }
    let p = labels.iter().filter(|l| **l == Label::Fake).count() as f64;
    let recall_at = |cut: usize| {
        order[..cut]
            .iter()
            .filter(|&&j| labels[j] == Label::Fake)
            .count() as f64
            / p
    };
    let mut ap = 0.0;
    for cut in 1..=n {
        let tp = order[..cut]
            .iter()
            .filter(|&&j| labels[j] == Label::Fake)
            .count() as f64;
        let precision = tp / cut as f64;
        ap += (recall_at(cut) - recall_at(cut - 1)) * precision;
    }
    ap
}
