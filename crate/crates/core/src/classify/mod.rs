//! Classification protocols over FGTS embeddings.
//!
//! Both protocols produce a signed score where larger means "more fake";
//! a score of exactly zero is classified fake.

mod centroid;
mod probe;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Label;
use crate::select::Embedding;

pub use centroid::{cosine, fit_centroids, CentroidModel, CentroidProtocol};
pub use probe::{
    fit_probe, InputTransform, LinearProbe, NormMode, ProbeConfig, ProbeProtocol, TrainingMeta,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub label: Label,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Prediction {
            score,
            label: Label::from_score(score),
        }
    }
}

/// A fitted, immutable classifier.
pub trait Classifier: Send + Sync {
    fn protocol(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn token_indices(&self) -> &[usize];
    fn predict(&self, z: &Embedding) -> Result<Prediction>;
    /// Self-describing JSON artifact; the `"protocol"` key names the loader.
    fn to_artifact(&self) -> serde_json::Value;
}

/// A classification protocol: fits a [`Classifier`] on labeled reference
/// embeddings built from `token_indices`.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(
        &self,
        reference: &[(Label, Embedding)],
        token_indices: &[usize],
    ) -> Result<Box<dyn Classifier>>;
}

type ProtocolFactory = fn(&ProbeConfig) -> Box<dyn Protocol>;
type ArtifactLoader = fn(&serde_json::Value) -> Result<Box<dyn Classifier>>;

struct Entry {
    factory: ProtocolFactory,
    loader: ArtifactLoader,
}

/// Name-keyed protocol constructors and artifact loaders.
pub struct ProtocolRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl ProtocolRegistry {
    pub fn empty() -> Self {
        ProtocolRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: ProtocolFactory, loader: ArtifactLoader) {
        self.entries.insert(name, Entry { factory, loader });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    fn entry(&self, name: &str) -> Result<&Entry> {
        self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "protocol",
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })
    }

    pub fn build(&self, name: &str, probe: &ProbeConfig) -> Result<Box<dyn Protocol>> {
        Ok((self.entry(name)?.factory)(probe))
    }

    pub fn load(&self, artifact: &serde_json::Value) -> Result<Box<dyn Classifier>> {
        let name = artifact
            .get("protocol")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Artifact("model artifact has no \"protocol\" key".into()))?;
        (self.entry(name)?.loader)(artifact)
    }
}

impl Default for ProtocolRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(
            "centroid",
            |_| Box::new(CentroidProtocol),
            |v| Ok(Box::new(CentroidModel::from_artifact(v)?)),
        );
        reg.register(
            "probe",
            |cfg| Box::new(ProbeProtocol(cfg.clone())),
            |v| Ok(Box::new(LinearProbe::from_artifact(v)?)),
        );
        reg
    }
}

fn class_counts(reference: &[(Label, Embedding)]) -> (usize, usize) {
    let fake = reference.iter().filter(|(l, _)| *l == Label::Fake).count();
    (reference.len() - fake, fake)
}

fn common_dim(reference: &[(Label, Embedding)]) -> Result<usize> {
    let dim = reference.first().ok_or(Error::EmptyInput)?.1.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("zero-dimensional embeddings".into()));
    }
    for (_, z) in reference {
        if z.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: z.dim(),
            });
        }
    }
    Ok(dim)
}
