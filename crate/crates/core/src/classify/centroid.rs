use serde::{Deserialize, Serialize};

use super::{class_counts, common_dim, Classifier, Prediction, Protocol};
use crate::error::{Error, Result};
use crate::layout::Label;
use crate::select::Embedding;

/// Training-free protocol: class-mean centroids, cosine-similarity decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    pub mu_real: Vec<f64>,
    pub mu_fake: Vec<f64>,
    pub k: usize,
    pub token_indices: Vec<usize>,
}

/// Cosine similarity; a zero-norm side contributes similarity 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn fit_centroids(
    reference: &[(Label, Embedding)],
    token_indices: &[usize],
) -> Result<CentroidModel> {
    let dim = common_dim(reference)?;
    let (n_real, n_fake) = class_counts(reference);
    for (class, count) in [(Label::Real, n_real), (Label::Fake, n_fake)] {
        if count == 0 {
            return Err(Error::InsufficientSamples {
                class,
                count,
                required: 1,
            });
        }
    }
    let mut mu_real = vec![0.0; dim];
    let mut mu_fake = vec![0.0; dim];
    for (label, z) in reference {
        let acc = match label {
            Label::Real => &mut mu_real,
            Label::Fake => &mut mu_fake,
        };
        acc.iter_mut().zip(z.as_slice()).for_each(|(a, v)| *a += v);
    }
    mu_real.iter_mut().for_each(|v| *v /= n_real as f64);
    mu_fake.iter_mut().for_each(|v| *v /= n_fake as f64);
    let model = CentroidModel {
        mu_real,
        mu_fake,
        k: token_indices.len(),
        token_indices: token_indices.to_vec(),
    };
    model.check()?;
    Ok(model)
}

impl CentroidModel {
    fn check(&self) -> Result<()> {
        if self.mu_real.len() != self.mu_fake.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu_real.len(),
                found: self.mu_fake.len(),
            });
        }
        if self.mu_real.iter().chain(&self.mu_fake).any(|v| !v.is_finite()) {
            return Err(Error::Artifact("non-finite centroid".into()));
        }
        if self.mu_real.iter().all(|&v| v == 0.0) && self.mu_fake.iter().all(|&v| v == 0.0) {
            return Err(Error::Artifact("both centroids are zero vectors".into()));
        }
        if self.k != self.token_indices.len() {
            return Err(Error::Artifact(format!(
                "k={} but {} token indices",
                self.k,
                self.token_indices.len()
            )));
        }
        Ok(())
    }

    /// score = cos(z, mu_fake) - cos(z, mu_real)
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.mu_real.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu_real.len(),
                found: z.len(),
            });
        }
        if z.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(cosine(z, &self.mu_fake) - cosine(z, &self.mu_real))
    }

    pub fn from_artifact(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Artifact {
            #[serde(flatten)]
            model: CentroidModel,
        }
        let a: Artifact = serde_json::from_value(value.clone())
            .map_err(|e| Error::Artifact(format!("centroid model: {e}")))?;
        a.model.check()?;
        Ok(a.model)
    }
}

impl Classifier for CentroidModel {
    fn protocol(&self) -> &'static str {
        "centroid"
    }

    fn dim(&self) -> usize {
        self.mu_real.len()
    }

    fn token_indices(&self) -> &[usize] {
        &self.token_indices
    }

    fn predict(&self, z: &Embedding) -> Result<Prediction> {
        Ok(Prediction::from_score(self.score(z.as_slice())?))
    }

    fn to_artifact(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("centroid serializes");
        v.as_object_mut()
            .unwrap()
            .insert("protocol".into(), "centroid".into());
        v
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CentroidProtocol;

impl Protocol for CentroidProtocol {
    fn name(&self) -> &'static str {
        "centroid"
    }

    fn fit(
        &self,
        reference: &[(Label, Embedding)],
        token_indices: &[usize],
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(fit_centroids(reference, token_indices)?))
    }
}
