//! Two-logit linear probe trained with Adam on softmax cross-entropy.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_counts, common_dim, Classifier, Prediction, Protocol};
use crate::error::{Error, Result};
use crate::layout::Label;
use crate::select::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainingMeta {
    fn default() -> Self {
        TrainingMeta {
            epochs: 50,
            lr: 1e-2,
            batch_size: 32,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Input preprocessing applied identically at fit and predict time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputTransform {
    Identity,
    /// Scale each embedding to unit L2 norm (zero vectors pass through).
    L2,
    /// Per-dimension z-score with statistics from the training set.
    Standardize { mean: Vec<f64>, std: Vec<f64> },
}

impl InputTransform {
    fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            InputTransform::Identity => z.to_vec(),
            InputTransform::L2 => {
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    z.to_vec()
                } else {
                    z.iter().map(|v| v / norm).collect()
                }
            }
            InputTransform::Standardize { mean, std } => z
                .iter()
                .zip(mean)
                .zip(std)
                .map(|((v, m), s)| (v - m) / s)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    None,
    #[default]
    L2,
    Standardize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub meta: TrainingMeta,
    pub norm: NormMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    /// 2 x dim, row 0 = real logit, row 1 = fake logit.
    pub weights: Vec<f32>,
    pub bias: [f32; 2],
    pub dim: usize,
    pub transform: InputTransform,
    pub training_meta: TrainingMeta,
    pub token_indices: Vec<usize>,
    /// Mean cross-entropy over the full training set after each epoch.
    pub loss_history: Vec<f64>,
}

struct Adam {
    meta: TrainingMeta,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(meta: TrainingMeta, len: usize) -> Self {
        Adam {
            meta,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let TrainingMeta {
            lr,
            beta1,
            beta2,
            adam_eps,
            ..
        } = self.meta;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + adam_eps);
        }
    }
}

/// Parameter layout during training: [w_real (dim), w_fake (dim), b_real, b_fake].
fn logits(params: &[f64], dim: usize, x: &[f64]) -> [f64; 2] {
    let dot = |row: &[f64]| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    [
        dot(&params[..dim]) + params[2 * dim],
        dot(&params[dim..2 * dim]) + params[2 * dim + 1],
    ]
}

fn cross_entropy(l: [f64; 2], class: usize) -> f64 {
    let max = l[0].max(l[1]);
    let lse = max + ((l[0] - max).exp() + (l[1] - max).exp()).ln();
    lse - l[class]
}

fn mean_loss(params: &[f64], dim: usize, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, &y)| cross_entropy(logits(params, dim, x), y))
        .sum::<f64>()
        / xs.len() as f64
}

/// Trains the probe by mini-batch Adam from zero-initialised parameters.
/// Batches are drawn from a per-epoch shuffle of a single seeded stream.
pub fn fit_probe(
    reference: &[(Label, Embedding)],
    cfg: &ProbeConfig,
    token_indices: &[usize],
) -> Result<LinearProbe> {
    let dim = common_dim(reference)?;
    let (n_real, n_fake) = class_counts(reference);
    if n_real == 0 {
        return Err(Error::SingleClass(Label::Fake));
    }
    if n_fake == 0 {
        return Err(Error::SingleClass(Label::Real));
    }
    let meta = cfg.meta;
    if meta.batch_size == 0 || meta.epochs == 0 || !(meta.lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid training schedule: {meta:?}"
        )));
    }
    if reference
        .iter()
        .any(|(_, z)| z.as_slice().iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidArgument("non-finite embedding".into()));
    }

    let transform = match cfg.norm {
        NormMode::None => InputTransform::Identity,
        NormMode::L2 => InputTransform::L2,
        NormMode::Standardize => {
            let n = reference.len() as f64;
            let mut mean = vec![0.0; dim];
            for (_, z) in reference {
                mean.iter_mut().zip(z.as_slice()).for_each(|(m, v)| *m += v);
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; dim];
            for (_, z) in reference {
                var.iter_mut()
                    .zip(z.as_slice())
                    .zip(&mean)
                    .for_each(|((s, v), m)| *s += (v - m) * (v - m));
            }
            let std = var
                .into_iter()
                .map(|s| {
                    let sd = (s / n).sqrt();
                    if sd > 0.0 {
                        sd
                    } else {
                        1.0
                    }
                })
                .collect();
            InputTransform::Standardize { mean, std }
        }
    };

    let xs: Vec<Vec<f64>> = reference
        .iter()
        .map(|(_, z)| transform.apply(z.as_slice()))
        .collect();
    let ys: Vec<usize> = reference.iter().map(|(l, _)| l.class_index()).collect();

    let n_params = 2 * dim + 2;
    let mut params = vec![0.0f64; n_params];
    let mut adam = Adam::new(meta, n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(meta.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut grad = vec![0.0f64; n_params];
    let mut loss_history = Vec::with_capacity(meta.epochs);

    for _ in 0..meta.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(meta.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = &xs[i];
                let l = logits(&params, dim, x);
                let max = l[0].max(l[1]);
                let e = [(l[0] - max).exp(), (l[1] - max).exp()];
                let total = e[0] + e[1];
                for c in 0..2 {
                    let target = if ys[i] == c { 1.0 } else { 0.0 };
                    let delta = (e[c] / total - target) * scale;
                    let row = &mut grad[c * dim..(c + 1) * dim];
                    row.iter_mut().zip(x).for_each(|(g, v)| *g += delta * v);
                    grad[2 * dim + c] += delta;
                }
            }
            adam.step(&mut params, &grad);
        }
        loss_history.push(mean_loss(&params, dim, &xs, &ys));
    }

    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("probe training diverged".into()));
    }
    Ok(LinearProbe {
        weights: params[..2 * dim].iter().map(|&w| w as f32).collect(),
        bias: [params[2 * dim] as f32, params[2 * dim + 1] as f32],
        dim,
        transform,
        training_meta: meta,
        token_indices: token_indices.to_vec(),
        loss_history,
    })
}

#[derive(Serialize, Deserialize)]
struct ProbeArtifact {
    protocol: String,
    dim: usize,
    /// Base64 of 2*dim float32 LE values, row-major (real row, fake row).
    weights: String,
    bias: [f32; 2],
    transform: InputTransform,
    training_meta: TrainingMeta,
    token_indices: Vec<usize>,
    loss_history: Vec<f64>,
}

impl LinearProbe {
    /// Zero weights with the given bias; handy for constructing probes by hand.
    pub fn with_bias(dim: usize, bias: [f32; 2]) -> Self {
        LinearProbe {
            weights: vec![0.0; 2 * dim],
            bias,
            dim,
            transform: InputTransform::Identity,
            training_meta: TrainingMeta::default(),
            token_indices: Vec::new(),
            loss_history: Vec::new(),
        }
    }

    /// Logit difference `fake - real` for a raw (untransformed) embedding.
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        let x = self.transform.apply(z);
        let (w_real, w_fake) = self.weights.split_at(self.dim);
        let mut score = f64::from(self.bias[1]) - f64::from(self.bias[0]);
        for ((wr, wf), v) in w_real.iter().zip(w_fake).zip(&x) {
            score += (f64::from(*wf) - f64::from(*wr)) * v;
        }
        Ok(score)
    }

    /// Decision-boundary normal (fake row minus real row).
    pub fn direction(&self) -> Vec<f64> {
        let (w_real, w_fake) = self.weights.split_at(self.dim);
        w_fake
            .iter()
            .zip(w_real)
            .map(|(f, r)| f64::from(*f) - f64::from(*r))
            .collect()
    }

    pub fn from_artifact(value: &serde_json::Value) -> Result<Self> {
        let a: ProbeArtifact = serde_json::from_value(value.clone())
            .map_err(|e| Error::Artifact(format!("probe model: {e}")))?;
        let bytes = BASE64
            .decode(a.weights.as_bytes())
            .map_err(|e| Error::Artifact(format!("probe weights: {e}")))?;
        if bytes.len() != 2 * a.dim * 4 {
            return Err(Error::Artifact(format!(
                "probe weights hold {} bytes, expected {}",
                bytes.len(),
                2 * a.dim * 4
            )));
        }
        let weights: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if weights.iter().chain(&a.bias).any(|w| !w.is_finite()) {
            return Err(Error::Artifact("non-finite probe parameter".into()));
        }
        Ok(LinearProbe {
            weights,
            bias: a.bias,
            dim: a.dim,
            transform: a.transform,
            training_meta: a.training_meta,
            token_indices: a.token_indices,
            loss_history: a.loss_history,
        })
    }
}

impl Classifier for LinearProbe {
    fn protocol(&self) -> &'static str {
        "probe"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn token_indices(&self) -> &[usize] {
        &self.token_indices
    }

    fn predict(&self, z: &Embedding) -> Result<Prediction> {
        Ok(Prediction::from_score(self.score(z.as_slice())?))
    }

    fn to_artifact(&self) -> serde_json::Value {
        let bytes: Vec<u8> = self.weights.iter().flat_map(|w| w.to_le_bytes()).collect();
        let artifact = ProbeArtifact {
            protocol: "probe".into(),
            dim: self.dim,
            weights: BASE64.encode(bytes),
            bias: self.bias,
            transform: self.transform.clone(),
            training_meta: self.training_meta,
            token_indices: self.token_indices.clone(),
            loss_history: self.loss_history.clone(),
        };
        serde_json::to_value(artifact).expect("probe serializes")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ProbeProtocol(pub ProbeConfig);

impl Protocol for ProbeProtocol {
    fn name(&self) -> &'static str {
        "probe"
    }

    fn fit(
        &self,
        reference: &[(Label, Embedding)],
        token_indices: &[usize],
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(fit_probe(reference, &self.0, token_indices)?))
    }
}
