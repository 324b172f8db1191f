//! Seeded synthetic feature generator with a planted set of informative
//! patch tokens. Used by tests, benchmarks and the demo dataset.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::layout::{Label, TokenLayout};
use crate::select::Embedding;
use crate::tensor::FeatureTensor;

const PLANT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Every token `t` and dim `d` draws `base[d] + sigma * N(0,1)`. On the
/// informative tokens the class means are shifted apart by `gap * sigma`
/// along a fixed random sign pattern: real by `-gap/2`, fake by `+gap/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSignal {
    pub layout: TokenLayout,
    pub dim: usize,
    pub sigma: f64,
    pub gap: f64,
    /// Absolute token indices, ascending.
    pub informative: Vec<usize>,
    pub base: Vec<f64>,
    pub signs: Vec<f64>,
}

impl PlantedSignal {
    pub fn new(
        layout: TokenLayout,
        dim: usize,
        n_informative: usize,
        gap: f64,
        seed: u64,
    ) -> Result<Self> {
        layout.check()?;
        if n_informative > layout.n_patch() {
            return Err(Error::KOutOfRange {
                k: n_informative,
                available: layout.n_patch(),
            });
        }
        // Offset so the planted set never coincides with a selector seeded
        // with the same value.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PLANT_STREAM);
        let first_patch = layout.patch_range().start;
        let mut informative: Vec<usize> = index::sample(&mut rng, layout.n_patch(), n_informative)
            .into_iter()
            .map(|i| first_patch + i)
            .collect();
        informative.sort_unstable();
        let base = (0..dim).map(|_| rng.random_range(1.5..2.5)).collect();
        let signs = (0..dim)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        Ok(PlantedSignal {
            layout,
            dim,
            sigma: 1.0,
            gap,
            informative,
            base,
            signs,
        })
    }

    /// Draws one sample; `gap_scale` multiplies the planted gap (e.g. to
    /// simulate generators that are easier or harder to detect).
    pub fn sample<R: Rng + ?Sized>(&self, label: Label, gap_scale: f64, rng: &mut R) -> FeatureTensor {
        let half = match label {
            Label::Real => -0.5,
            Label::Fake => 0.5,
        } * self.gap
            * gap_scale
            * self.sigma;
        let mut data = Vec::with_capacity(self.layout.n_tokens() * self.dim);
        for t in 0..self.layout.n_tokens() {
            let planted = self.informative.binary_search(&t).is_ok();
            for d in 0..self.dim {
                let noise: f64 = StandardNormal.sample(rng);
                let mut v = self.base[d] + self.sigma * noise;
                if planted {
                    v += half * self.signs[d];
                }
                data.push(v as f32);
            }
        }
        FeatureTensor::new(self.layout, self.dim, data).expect("synthetic tensor is valid")
    }

    /// `n_per_class` real then `n_per_class` fake samples from one stream.
    pub fn balanced(&self, n_per_class: usize, seed: u64) -> Vec<(Label, FeatureTensor)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(2 * n_per_class);
        for label in [Label::Real, Label::Fake] {
            for _ in 0..n_per_class {
                out.push((label, self.sample(label, 1.0, &mut rng)));
            }
        }
        out
    }
}

/// Linearly separable embeddings: Gaussian draws whose component along a
/// random unit direction `w` is pushed to at least `margin` on the class
/// side (fake positive). `w` depends only on `direction_seed`, so train and
/// held-out sets share it. Returns the samples and `w`.
pub fn separable_embeddings(
    n_per_class: usize,
    dim: usize,
    margin: f64,
    direction_seed: u64,
    sample_seed: u64,
) -> (Vec<(Label, Embedding)>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(direction_seed);
    let mut w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed ^ 0x5eed_0000_0000_0000);
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for label in [Label::Real, Label::Fake] {
        let side = if label == Label::Fake { 1.0 } else { -1.0 };
        for _ in 0..n_per_class {
            let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let along: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            let target = side * (margin + along.abs());
            x.iter_mut().zip(&w).for_each(|(a, b)| *a += (target - along) * b);
            out.push((label, Embedding(x)));
        }
    }
    (out, w)
}
