use std::path::Path;

use crate::error::{Error, Result};
use crate::format::read_feature_file;
use crate::manifest::SampleManifest;
use crate::tensor::FeatureTensor;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checked: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks that `tensor` agrees with the manifest's declared layout and dim.
pub fn check_against_manifest(manifest: &SampleManifest, tensor: &FeatureTensor) -> Result<()> {
    if *tensor.layout() != manifest.layout {
        return Err(Error::LayoutMismatch {
            expected: manifest.layout.to_string(),
            found: tensor.layout().to_string(),
        });
    }
    if tensor.dim() != manifest.dim {
        return Err(Error::DimensionMismatch {
            expected: manifest.dim,
            found: tensor.dim(),
        });
    }
    Ok(())
}

/// Reads every feature file named by `manifest` and reports problems
/// without stopping at the first one.
pub fn validate(manifest: &SampleManifest, features_dir: Option<&Path>) -> ValidationReport {
    let mut report = ValidationReport::default();
    for record in &manifest.records {
        report.checked += 1;
        let path = manifest.feature_path(record, features_dir);
        let outcome = read_feature_file(&path).and_then(|t| check_against_manifest(manifest, &t));
        if let Err(e) = outcome {
            report
                .errors
                .push(format!("{}: {}: {e}", record.sample_id, path.display()));
        }
        if let Some(image) = &record.image_path {
            let image = if image.is_absolute() {
                image.clone()
            } else {
                manifest.base_dir.join(image)
            };
            if !image.exists() {
                report.warnings.push(format!(
                    "{}: image {} not found",
                    record.sample_id,
                    image.display()
                ));
            }
        }
    }
    let generators = manifest.generators();
    for g in manifest
        .seen_generators
        .iter()
        .chain(&manifest.unseen_generators)
    {
        if !generators.contains(&g.as_str()) {
            report
                .warnings
                .push(format!("generator {g:?} declared but has no samples"));
        }
    }
    report
}
