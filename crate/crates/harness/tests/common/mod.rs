#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fgts_core::{load_manifest, Split};
use fgts_harness::{ExperimentConfig, SyntheticBenchmark};

pub fn small_bench() -> SyntheticBenchmark {
    SyntheticBenchmark {
        dim: 4,
        n_reference_per_class: 60,
        n_eval_real: 60,
        n_eval_per_generator: 60,
        ..Default::default()
    }
}

pub fn write_bench(dir: &Path) -> PathBuf {
    small_bench().write(&dir.join("data")).unwrap()
}

pub fn config(manifest: &Path, out: &Path) -> ExperimentConfig {
    ExperimentConfig::new(manifest, out)
}

/// Copies a manifest to `dest` with absolute feature paths, optionally
/// keeping only one split.
pub fn relocate_manifest(src: &Path, dest: &Path, keep: Option<Split>) -> PathBuf {
    let mut m = load_manifest(src).unwrap();
    let base = m.base_dir.clone();
    m.records.retain(|r| keep.is_none_or(|s| r.split == s));
    for r in &mut m.records {
        r.feature_path = base.join(&r.feature_path);
    }
    std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
    m.write(dest).unwrap();
    dest.to_path_buf()
}

pub fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}
