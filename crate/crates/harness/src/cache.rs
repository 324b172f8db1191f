//! Content-addressed stage cache. Keys are SHA-256 digests of the stage name
//! and a JSON description of everything the stage result depends on.

use std::fs;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stable key for `(stage, inputs)`. `serde_json` writes object keys in
/// sorted order, so equal inputs give equal keys.
pub fn stage_key(stage: &str, inputs: &serde_json::Value) -> String {
    digest(format!("{stage}\n{inputs}").as_bytes())
}

#[derive(Debug, Clone, Default)]
pub struct StageCache {
    dir: Option<PathBuf>,
}

impl StageCache {
    pub fn disabled() -> Self {
        StageCache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        StageCache {
            dir: Some(dir.into()),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.dir.is_some()
    }

    fn path(&self, stage: &str, key: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(stage).join(format!("{key}.json")))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get<T: DeserializeOwned>(&self, stage: &str, key: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(stage, key)?).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes through a temporary file and renames, so readers never see a
    /// partial entry.
    pub fn put<T: Serialize>(&self, stage: &str, key: &str, value: &T) -> Result<()> {
        let Some(path) = self.path(stage, key) else {
            return Ok(());
        };
        let dir = path.parent().expect("entry has a parent");
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let text = serde_json::to_string(value).expect("cache entries serialize");
        fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| HarnessError::io(&path, e))
    }

    pub fn get_or_try<T, F>(&self, stage: &str, key: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if let Some(hit) = self.get(stage, key) {
            return Ok(hit);
        }
        let value = compute()?;
        self.put(stage, key, &value)?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_stage_and_inputs() {
        let a = serde_json::json!({"k": 10, "m": "x"});
        let b = serde_json::json!({"m": "x", "k": 10});
        assert_eq!(stage_key("rank", &a), stage_key("rank", &b));
        assert_ne!(stage_key("rank", &a), stage_key("fit", &a));
        assert_ne!(stage_key("rank", &a), stage_key("rank", &serde_json::json!({"k": 11, "m": "x"})));
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = StageCache::at(dir.path());
        let mut calls = 0;
        let v: Vec<f64> = cache.get_or_try("s", "k", || { calls += 1; Ok(vec![0.1, 1e-300]) }).unwrap();
        let w: Vec<f64> = cache.get_or_try("s", "k", || { calls += 1; Ok(vec![]) }).unwrap();
        assert_eq!(v, w);
        assert_eq!(calls, 1);
        assert!(StageCache::disabled().get::<Vec<f64>>("s", "k").is_none());
    }
}
