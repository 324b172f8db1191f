//! One split of a manifest, read lazily from disk.

use std::fs;
use std::path::{Path, PathBuf};

use fgts_core::format::{decode, decode_header};
use fgts_core::stats::StatsAccumulator;
use fgts_core::validate::check_against_manifest;
use fgts_core::{
    aggregate, load_manifest, ClassStats, Embedding, FeatureTensor, Label, SampleManifest,
    SampleRecord, Split, TokenLayout, TokenStrategy,
};
use serde::{Deserialize, Serialize};

use crate::cache::digest;
use crate::error::{HarnessError, Result, Stage, StageContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSample {
    pub sample_id: String,
    pub label: Label,
    pub generator: String,
    pub z: Embedding,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: SampleManifest,
    pub features_dir: Option<PathBuf>,
    pub split: Split,
    pub records: Vec<SampleRecord>,
    /// Digest over the records and the bytes of every feature file.
    pub fingerprint: String,
}

impl Dataset {
    /// Loads `split` of the manifest at `path`. Fakes are restricted to
    /// `generators` when it is non-empty. Every feature file is read once to
    /// check its header and fingerprint its contents.
    pub fn load(
        path: &Path,
        split: Split,
        features_dir: Option<&Path>,
        generators: &[String],
    ) -> Result<Self> {
        let manifest = load_manifest(path).invalid_at(Stage::Load)?;
        let records: Vec<SampleRecord> = manifest
            .by_split(split)
            .filter(|r| {
                r.label == Label::Real || generators.is_empty() || generators.contains(&r.generator)
            })
            .cloned()
            .collect();
        let mut ds = Dataset {
            manifest,
            features_dir: features_dir.map(Path::to_path_buf),
            split,
            records,
            fingerprint: String::new(),
        };
        ds.fingerprint = ds.compute_fingerprint()?;
        Ok(ds)
    }

    fn read_bytes(&self, record: &SampleRecord) -> Result<(PathBuf, Vec<u8>)> {
        let path = self.manifest.feature_path(record, self.features_dir.as_deref());
        match fs::read(&path) {
            Ok(bytes) => Ok((path, bytes)),
            Err(e) => Err(HarnessError::invalid(
                Stage::Load,
                format!("{}: cannot read {}: {e}", record.sample_id, path.display()),
            )),
        }
    }

    fn compute_fingerprint(&self) -> Result<String> {
        let mut entries = Vec::with_capacity(self.records.len());
        for record in &self.records {
            let (path, bytes) = self.read_bytes(record)?;
            let (header, _) = decode_header(&bytes).map_err(|e| {
                HarnessError::invalid(Stage::Load, format!("{}: {e}", path.display()))
            })?;
            if header.layout() != self.manifest.layout || header.dim != self.manifest.dim {
                return Err(HarnessError::invalid(
                    Stage::Load,
                    format!(
                        "{}: layout mismatch: manifest declares {} dim {}, file has {} dim {}",
                        path.display(),
                        self.manifest.layout,
                        self.manifest.dim,
                        header.layout(),
                        header.dim
                    ),
                ));
            }
            entries.push(serde_json::json!([
                record.sample_id,
                record.label,
                record.generator,
                digest(&bytes)
            ]));
        }
        let doc = serde_json::json!({
            "layout": self.manifest.layout,
            "dim": self.manifest.dim,
            "split": self.split,
            "records": entries,
        });
        Ok(digest(doc.to_string().as_bytes()))
    }

    pub fn layout(&self) -> TokenLayout {
        self.manifest.layout
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    pub fn read(&self, record: &SampleRecord) -> Result<FeatureTensor> {
        let (path, bytes) = self.read_bytes(record)?;
        let tensor = decode(&bytes)
            .and_then(|t| check_against_manifest(&self.manifest, &t).map(|_| t))
            .map_err(|e| HarnessError::invalid(Stage::Load, format!("{}: {e}", path.display())))?;
        Ok(tensor)
    }

    /// Per-class token statistics over `scope`, streaming one file at a time.
    pub fn class_stats(&self, scope: &TokenStrategy) -> Result<ClassStats> {
        let mut acc = StatsAccumulator::new(self.layout(), self.dim(), scope.clone()).at(Stage::Rank)?;
        for record in &self.records {
            acc.push(record.label, &self.read(record)?).at(Stage::Rank)?;
        }
        acc.finish().at(Stage::Rank)
    }

    /// Mean of the `indices` rows for every sample, in manifest order.
    pub fn embed(&self, indices: &[usize]) -> Result<Vec<EmbeddedSample>> {
        self.records
            .iter()
            .map(|record| {
                let z = aggregate(&self.read(record)?, indices).at(Stage::Embed)?;
                Ok(EmbeddedSample {
                    sample_id: record.sample_id.clone(),
                    label: record.label,
                    generator: record.generator.clone(),
                    z,
                })
            })
            .collect()
    }
}
