//! Accuracy, ROC-AUC and average precision with fake as the positive class.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Label;
use crate::manifest::REAL_GENERATOR;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub label: Label,
    pub generator: String,
}

impl ScoredSample {
    pub fn new(score: f64, label: Label, generator: impl Into<String>) -> Self {
        ScoredSample {
            score,
            label,
            generator: generator.into(),
        }
    }
}

fn check_finite(samples: &[ScoredSample]) -> Result<()> {
    match samples.iter().position(|s| !s.score.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "non-finite score at sample {i}"
        ))),
        None => Ok(()),
    }
}

pub fn accuracy(samples: &[ScoredSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(samples)?;
    let correct = samples
        .iter()
        .filter(|s| Label::from_score(s.score) == s.label)
        .count();
    Ok(correct as f64 / samples.len() as f64)
}

/// Mann-Whitney AUC with average ranks for ties.
pub fn roc_auc(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let n_fake = samples.iter().filter(|s| s.label == Label::Fake).count();
    let n_real = samples.len() - n_fake;
    if n_fake == 0 {
        return Err(Error::SingleClass(Label::Real));
    }
    if n_real == 0 {
        return Err(Error::SingleClass(Label::Fake));
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[a]
            .score
            .partial_cmp(&samples[b].score)
            .unwrap_or(Ordering::Equal)
    });

    // Ranks are 1-based; a tie group spanning positions i..j gets (i+1+j)/2.
    let mut fake_rank_sum = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && samples[order[j]].score == samples[order[i]].score {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let fakes_in_group = order[i..j]
            .iter()
            .filter(|&&k| samples[k].label == Label::Fake)
            .count();
        fake_rank_sum += avg_rank * fakes_in_group as f64;
        i = j;
    }
    let nf = n_fake as f64;
    Ok((fake_rank_sum - nf * (nf + 1.0) / 2.0) / (nf * n_real as f64))
}

/// Step (non-interpolated) average precision: sort by descending score,
/// keeping input order among ties, then sum `(R_n - R_{n-1}) * P_n` over
/// every prefix.
pub fn average_precision(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let positives = samples.iter().filter(|s| s.label == Label::Fake).count();
    if positives == 0 {
        return Err(Error::SingleClass(Label::Real));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    // sort_by is stable
    order.sort_by(|&a, &b| {
        samples[b]
            .score
            .partial_cmp(&samples[a].score)
            .unwrap_or(Ordering::Equal)
    });
    let p = positives as f64;
    let mut tp = 0usize;
    let mut prev_recall = 0.0f64;
    let mut ap = 0.0f64;
    for (n, &k) in order.iter().enumerate() {
        if samples[k].label == Label::Fake {
            tp += 1;
        }
        let recall = tp as f64 / p;
        let precision = tp as f64 / (n + 1) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub acc: f64,
    pub auc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMetrics {
    pub generator: String,
    pub n_real: usize,
    pub n_fake: usize,
    pub metrics: MetricTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedMetrics {
    /// One row per fake generator, in order of first appearance.
    pub rows: Vec<GeneratorMetrics>,
    /// Unweighted mean over generator rows.
    pub aggregate: MetricTriple,
}

pub fn metric_triple(samples: &[ScoredSample]) -> Result<MetricTriple> {
    Ok(MetricTriple {
        acc: accuracy(samples)?,
        auc: roc_auc(samples)?,
        ap: average_precision(samples)?,
    })
}

/// Scores each fake generator against the full shared real pool; the
/// aggregate is the unweighted mean over generators.
pub fn group_by_generator(samples: &[ScoredSample]) -> Result<GroupedMetrics> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let reals: Vec<&ScoredSample> = samples.iter().filter(|s| s.label == Label::Real).collect();
    if reals.is_empty() {
        return Err(Error::SingleClass(Label::Fake));
    }
    let mut generators: Vec<&str> = Vec::new();
    let mut fakes: BTreeMap<&str, Vec<&ScoredSample>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.label == Label::Fake) {
        if !fakes.contains_key(s.generator.as_str()) {
            generators.push(&s.generator);
        }
        fakes.entry(&s.generator).or_default().push(s);
    }
    if generators.is_empty() {
        return Err(Error::SingleClass(Label::Real));
    }

    let mut rows = Vec::with_capacity(generators.len());
    for g in generators {
        let group: Vec<ScoredSample> = reals
            .iter()
            .copied()
            .chain(fakes[g].iter().copied())
            .cloned()
            .collect();
        rows.push(GeneratorMetrics {
            generator: g.to_string(),
            n_real: reals.len(),
            n_fake: fakes[g].len(),
            metrics: metric_triple(&group)?,
        });
    }
    let aggregate = mean_triple(rows.iter().map(|r| r.metrics));
    Ok(GroupedMetrics { rows, aggregate })
}

pub fn mean_triple(triples: impl IntoIterator<Item = MetricTriple>) -> MetricTriple {
    let mut n = 0usize;
    let mut sum = MetricTriple {
        acc: 0.0,
        auc: 0.0,
        ap: 0.0,
    };
    for t in triples {
        n += 1;
        sum.acc += t.acc;
        sum.auc += t.auc;
        sum.ap += t.ap;
    }
    let n = n.max(1) as f64;
    MetricTriple {
        acc: sum.acc / n,
        auc: sum.auc / n,
        ap: sum.ap / n,
    }
}

/// Convenience for real samples.
pub fn real_sample(score: f64) -> ScoredSample {
    ScoredSample::new(score, Label::Real, REAL_GENERATOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(score: f64, label: Label) -> ScoredSample {
        let g = if label == Label::Real { "-" } else { "g" };
        ScoredSample::new(score, label, g)
    }

    #[test]
    fn accuracy_examples() {
        use Label::*;
        assert_eq!(
            accuracy(&[s(-1.0, Real), s(2.0, Fake), s(0.0, Fake)]).unwrap(),
            1.0
        );
        assert_eq!(accuracy(&[s(1.0, Real), s(1.0, Fake)]).unwrap(), 0.5);
        assert_eq!(
            accuracy(&[s(-1.0, Real), s(1.0, Fake), s(2.0, Fake), s(-3.0, Fake)]).unwrap(),
            0.75
        );
        assert!(matches!(accuracy(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn auc_examples() {
        use Label::*;
        assert_eq!(
            roc_auc(&[s(0.1, Real), s(0.2, Real), s(0.3, Fake), s(0.9, Fake)]).unwrap(),
            1.0
        );
        assert_eq!(
            roc_auc(&[s(1.0, Real), s(1.0, Fake), s(1.0, Fake), s(1.0, Real)]).unwrap(),
            0.5
        );
        assert!(roc_auc(&[s(1.0, Fake)]).is_err());
    }

    #[test]
    fn ap_examples() {
        use Label::*;
        assert_eq!(
            average_precision(&[s(0.9, Fake), s(0.8, Fake), s(0.1, Real)]).unwrap(),
            1.0
        );
        let mut v: Vec<ScoredSample> = (0..7).map(|i| s(10.0 - i as f64, Real)).collect();
        v.push(s(-5.0, Fake));
        assert!((average_precision(&v).unwrap() - 1.0 / 8.0).abs() < 1e-15);
        assert!(average_precision(&[s(1.0, Real)]).is_err());
    }

    #[test]
    fn grouping() {
        use Label::*;
        let mut samples = vec![s(-1.0, Real), s(-1.0, Real), s(1.0, Real), s(-2.0, Real)];
        // gen a: 5 fakes all right -> acc on its group (4 real, 5 fake) 8/9
        for _ in 0..5 {
            samples.push(ScoredSample::new(1.0, Fake, "a"));
        }
        samples.push(ScoredSample::new(-1.0, Fake, "b"));
        let g = group_by_generator(&samples).unwrap();
        assert_eq!(g.rows.len(), 2);
        assert_eq!(g.rows[0].generator, "a");
        assert_eq!(g.rows[0].n_real, 4);
        assert_eq!(g.rows[1].n_fake, 1);
        assert_eq!(g.rows[0].metrics.acc, 8.0 / 9.0);
        assert_eq!(g.rows[1].metrics.acc, 3.0 / 5.0);
        assert_eq!(g.aggregate.acc, (8.0 / 9.0 + 3.0 / 5.0) / 2.0);
    }

    #[test]
    fn one_generator_aggregate_is_itself() {
        use Label::*;
        let samples = vec![s(-1.0, Real), s(0.5, Real), s(1.0, Fake), s(-0.2, Fake)];
        let g = group_by_generator(&samples).unwrap();
        assert_eq!(g.aggregate, g.rows[0].metrics);
    }
}
