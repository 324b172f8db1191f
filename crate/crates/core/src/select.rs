//! Token selection strategies and embedding aggregation.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{TokenRanking, DEFAULT_K};
use crate::tensor::FeatureTensor;

/// Picks `k` token indices out of a ranking's scored set.
pub trait TokenSelector: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, ranking: &TokenRanking, k: usize) -> Result<Vec<usize>>;
}

/// The first `k` entries of the ranking.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherTopK;

impl TokenSelector for FisherTopK {
    fn name(&self) -> &'static str {
        "fisher_topk"
    }

    fn select(&self, ranking: &TokenRanking, k: usize) -> Result<Vec<usize>> {
        check_k(ranking, k)?;
        Ok(ranking.sorted_indices[..k].to_vec())
    }
}

/// `k` scored tokens drawn uniformly without replacement from a seeded
/// stream, returned in ascending index order.
#[derive(Debug, Clone, Copy)]
pub struct RandomK {
    pub seed: u64,
}

impl TokenSelector for RandomK {
    fn name(&self) -> &'static str {
        "random_k"
    }

    fn select(&self, ranking: &TokenRanking, k: usize) -> Result<Vec<usize>> {
        check_k(ranking, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, ranking.n_scored(), k)
            .into_iter()
            .map(|j| ranking.tokens[j])
            .collect();
        picked.sort_unstable();
        Ok(picked)
    }
}

fn check_k(ranking: &TokenRanking, k: usize) -> Result<()> {
    if k == 0 || k > ranking.n_scored() {
        return Err(Error::KOutOfRange {
            k,
            available: ranking.n_scored(),
        });
    }
    Ok(())
}

type SelectorFactory = fn(u64) -> Box<dyn TokenSelector>;

/// Name-keyed constructors for token selectors.
pub struct SelectorRegistry {
    factories: BTreeMap<&'static str, SelectorFactory>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        SelectorRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: SelectorFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, seed: u64) -> Result<Box<dyn TokenSelector>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownName {
            kind: "selector",
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })?;
        Ok(factory(seed))
    }
}

impl Default for SelectorRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("fisher_topk", |_| Box::new(FisherTopK));
        reg.register("random_k", |seed| Box::new(RandomK { seed }));
        reg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectionMethod {
    FisherTopk,
    RandomK { seed: u64 },
}

impl SelectionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionMethod::FisherTopk => "fisher_topk",
            SelectionMethod::RandomK { .. } => "random_k",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SelectionMethod::FisherTopk => 0,
            SelectionMethod::RandomK { seed } => *seed,
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionMethod::FisherTopk => f.write_str("fisher_topk"),
            SelectionMethod::RandomK { seed } => write!(f, "random_k(seed={seed})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    #[serde(flatten)]
    pub method: SelectionMethod,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: DEFAULT_K,
            method: SelectionMethod::FisherTopk,
        }
    }
}

impl SelectionConfig {
    pub fn fisher(k: usize) -> Self {
        SelectionConfig {
            k,
            method: SelectionMethod::FisherTopk,
        }
    }

    pub fn random(k: usize, seed: u64) -> Self {
        SelectionConfig {
            k,
            method: SelectionMethod::RandomK { seed },
        }
    }
}

pub fn select_top_k(ranking: &TokenRanking, cfg: &SelectionConfig) -> Result<Vec<usize>> {
    SelectorRegistry::default()
        .build(cfg.method.name(), cfg.method.seed())?
        .select(ranking, cfg.k)
}

/// Mean of the selected token rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Averages the rows named by `indices`. Rows are summed in ascending index
/// order, so any two index lists naming the same set give the same bits.
pub fn aggregate(tensor: &FeatureTensor, indices: &[usize]) -> Result<Embedding> {
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n_tokens = tensor.n_tokens();
    if let Some(&index) = indices.iter().find(|&&i| i >= n_tokens) {
        return Err(Error::TokenIndexOutOfRange { index, n_tokens });
    }
    let mut order = indices.to_vec();
    order.sort_unstable();
    let mut z = vec![0.0f64; tensor.dim()];
    for &i in &order {
        for (acc, &v) in z.iter_mut().zip(tensor.row(i)) {
            *acc += f64::from(v);
        }
    }
    let k = order.len() as f64;
    z.iter_mut().for_each(|v| *v /= k);
    Ok(Embedding(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{TokenLayout, TokenStrategy};

    fn ranking(n: usize) -> TokenRanking {
        let layout = TokenLayout::patches(1, n).unwrap();
        let scores = (0..n).map(|i| ((i * 7) % n) as f64).collect();
        TokenRanking::from_scores(layout, TokenStrategy::All, (0..n).collect(), scores).unwrap()
    }

    #[test]
    fn k_equal_n_returns_everything() {
        let r = ranking(12);
        let top = FisherTopK.select(&r, 12).unwrap();
        assert_eq!(top, r.sorted_indices);
        let mut rnd = RandomK { seed: 3 }.select(&r, 12).unwrap();
        rnd.sort_unstable();
        assert_eq!(rnd, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn k_out_of_range() {
        let r = ranking(5);
        assert!(matches!(
            select_top_k(&r, &SelectionConfig::fisher(0)),
            Err(Error::KOutOfRange { k: 0, available: 5 })
        ));
        assert!(matches!(
            select_top_k(&r, &SelectionConfig::random(6, 1)),
            Err(Error::KOutOfRange { k: 6, .. })
        ));
    }

    #[test]
    fn random_k_is_reproducible() {
        let r = ranking(196);
        let a = select_top_k(&r, &SelectionConfig::random(10, 7)).unwrap();
        let b = select_top_k(&r, &SelectionConfig::random(10, 7)).unwrap();
        let c = select_top_k(&r, &SelectionConfig::random(10, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn registry_lookup() {
        let reg = SelectorRegistry::default();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["fisher_topk", "random_k"]);
        assert!(matches!(
            reg.build("attention", 0),
            Err(Error::UnknownName { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let layout = TokenLayout::patches(1, 3).unwrap();
        let t = FeatureTensor::new(layout, 2, vec![0.0, 0.0, 2.0, 4.0, 9.0, -1.0]).unwrap();
        assert_eq!(aggregate(&t, &[2]).unwrap().0, [9.0, -1.0]);
        assert_eq!(aggregate(&t, &[0, 1]).unwrap().0, [1.0, 2.0]);
        assert_eq!(aggregate(&t, &[1, 0]).unwrap(), aggregate(&t, &[0, 1]).unwrap());
        assert!(matches!(aggregate(&t, &[]), Err(Error::EmptySelection)));
        assert!(matches!(
            aggregate(&t, &[3]),
            Err(Error::TokenIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn selection_config_serde() {
        let json = serde_json::to_string(&SelectionConfig::random(20, 4)).unwrap();
        assert_eq!(json, r#"{"k":20,"method":"random_k","seed":4}"#);
        let back: SelectionConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SelectionConfig::random(20, 4));
    }
}
