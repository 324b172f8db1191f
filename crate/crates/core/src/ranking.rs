//! Offline token ranking by Fisher discriminability.
//!
//! For token `i` and feature dimension `d`:
//!
//! ```text
//! F[i,d] = (mean_real[i,d] - mean_fake[i,d])^2 / (var_real[i,d] + var_fake[i,d] + eps)
//! F[i]   = mean over d of F[i,d]
//! ```
//!
//! Tokens are sorted by descending `F[i]`; equal scores keep ascending token
//! index so rankings are reproducible.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{TokenLayout, TokenStrategy};
use crate::stats::ClassStats;

pub const DEFAULT_EPS: f64 = 1e-12;
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRanking {
    pub scope: TokenStrategy,
    pub layout: TokenLayout,
    /// Scored token indices (absolute rows) in scope order.
    pub tokens: Vec<usize>,
    /// `scores[j]` is the score of `tokens[j]`.
    pub scores: Vec<f64>,
    /// Absolute token indices, best first.
    pub sorted_indices: Vec<usize>,
    pub k_default: usize,
}

impl TokenRanking {
    /// Builds a ranking from precomputed scores, applying the standard order.
    pub fn from_scores(
        layout: TokenLayout,
        scope: TokenStrategy,
        tokens: Vec<usize>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        if tokens.len() != scores.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tokens but {} scores",
                tokens.len(),
                scores.len()
            )));
        }
        if let Some(j) = scores.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::NonFiniteScore { token: tokens[j] });
        }
        let sorted_indices = sort_by_score(&tokens, &scores);
        Ok(TokenRanking {
            scope,
            layout,
            tokens,
            scores,
            sorted_indices,
            k_default: DEFAULT_K,
        })
    }

    pub fn n_scored(&self) -> usize {
        self.tokens.len()
    }

    /// Score of an absolute token index, if it was scored.
    pub fn score_of(&self, token: usize) -> Option<f64> {
        self.tokens
            .iter()
            .position(|&t| t == token)
            .map(|j| self.scores[j])
    }

    /// Rank position (0 = best) of an absolute token index.
    pub fn rank_of(&self, token: usize) -> Option<usize> {
        self.sorted_indices.iter().position(|&t| t == token)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ranking serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ranking: TokenRanking =
            serde_json::from_str(text).map_err(|e| Error::Artifact(format!("ranking: {e}")))?;
        ranking.check()?;
        Ok(ranking)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        self.layout.check()?;
        let expected = self.scope.rows(&self.layout)?;
        if expected != self.tokens {
            return Err(Error::Artifact(
                "ranking tokens do not match its scope and layout".into(),
            ));
        }
        let rebuilt = Self::from_scores(
            self.layout,
            self.scope.clone(),
            self.tokens.clone(),
            self.scores.clone(),
        )?;
        if rebuilt.sorted_indices != self.sorted_indices {
            return Err(Error::Artifact(
                "sorted_indices disagree with scores".into(),
            ));
        }
        Ok(())
    }
}

fn sort_by_score(tokens: &[usize], scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tokens.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(tokens[a].cmp(&tokens[b]))
    });
    order.into_iter().map(|j| tokens[j]).collect()
}

/// Per-token Fisher scores from class statistics.
pub fn fisher_scores(stats: &ClassStats, eps: f64) -> Result<TokenRanking> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be finite and >= 0, got {eps}")));
    }
    let dim = stats.dim;
    let scores = stats
        .tokens
        .iter()
        .enumerate()
        .map(|(j, &token)| {
            let span = j * dim..(j + 1) * dim;
            let mut total = 0.0;
            for k in span {
                let gap = stats.real.mean[k] - stats.fake.mean[k];
                let numerator = gap * gap;
                let denominator = stats.real.var[k] + stats.fake.var[k] + eps;
                let ratio = if numerator == 0.0 {
                    0.0
                } else {
                    numerator / denominator
                };
                if !ratio.is_finite() {
                    return Err(Error::NonFiniteScore { token });
                }
                total += ratio;
            }
            Ok(total / dim as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    TokenRanking::from_scores(stats.layout, stats.scope.clone(), stats.tokens.clone(), scores)
}
