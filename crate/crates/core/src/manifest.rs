//! JSON Lines dataset manifests.
//!
//! Line 1 is a header object declaring the token layout, feature dim and the
//! seen/unseen generator partition; every following non-blank line is one
//! [`SampleRecord`]. Real samples use the generator sentinel `"-"`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Label, TokenLayout};

pub const REAL_GENERATOR: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Reference,
    Eval,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Reference => "reference",
            Split::Eval => "eval",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Split::Reference),
            "eval" => Ok(Split::Eval),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    pub feature_path: PathBuf,
    pub label: Label,
    pub generator: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub n_cls: usize,
    pub n_reg: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub dim: usize,
    #[serde(default)]
    pub seen_generators: BTreeSet<String>,
    #[serde(default)]
    pub unseen_generators: BTreeSet<String>,
}

// Raw record: label and split stay strings so unknown tokens get a precise error.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    sample_id: String,
    #[serde(default)]
    image_path: Option<PathBuf>,
    feature_path: PathBuf,
    label: String,
    generator: String,
    split: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleManifest {
    pub records: Vec<SampleRecord>,
    pub layout: TokenLayout,
    pub dim: usize,
    pub seen_generators: BTreeSet<String>,
    pub unseen_generators: BTreeSet<String>,
    /// Directory relative feature paths resolve against by default.
    pub base_dir: PathBuf,
}

impl SampleManifest {
    pub fn new(
        layout: TokenLayout,
        dim: usize,
        seen_generators: impl IntoIterator<Item = String>,
        unseen_generators: impl IntoIterator<Item = String>,
        records: Vec<SampleRecord>,
    ) -> Result<Self> {
        let manifest = SampleManifest {
            records,
            layout,
            dim,
            seen_generators: seen_generators.into_iter().collect(),
            unseen_generators: unseen_generators.into_iter().collect(),
            base_dir: PathBuf::from("."),
        };
        manifest.check()?;
        Ok(manifest)
    }

    pub fn header(&self) -> ManifestHeader {
        ManifestHeader {
            n_cls: self.layout.n_cls,
            n_reg: self.layout.n_reg,
            grid_h: self.layout.grid_h,
            grid_w: self.layout.grid_w,
            dim: self.dim,
            seen_generators: self.seen_generators.clone(),
            unseen_generators: self.unseen_generators.clone(),
        }
    }

    /// Checks every manifest-level invariant.
    pub fn check(&self) -> Result<()> {
        self.layout.check()?;
        if self.dim == 0 {
            return Err(Error::LayoutInconsistency("dim must be positive".into()));
        }
        if let Some(g) = self.seen_generators.intersection(&self.unseen_generators).next() {
            return Err(Error::PartitionOverlap(g.clone()));
        }
        let mut ids = HashSet::new();
        for (n, record) in self.records.iter().enumerate() {
            let line = n + 2;
            if !ids.insert(record.sample_id.as_str()) {
                return Err(Error::DuplicateId(record.sample_id.clone()));
            }
            match record.label {
                Label::Real if record.generator != REAL_GENERATOR => {
                    return Err(Error::Manifest {
                        line,
                        message: format!(
                            "real sample {:?} must use generator {REAL_GENERATOR:?}, found {:?}",
                            record.sample_id, record.generator
                        ),
                    })
                }
                Label::Fake if record.generator == REAL_GENERATOR => {
                    return Err(Error::Manifest {
                        line,
                        message: format!(
                            "fake sample {:?} uses the real sentinel as generator",
                            record.sample_id
                        ),
                    })
                }
                Label::Fake
                    if !self.seen_generators.contains(&record.generator)
                        && !self.unseen_generators.contains(&record.generator) =>
                {
                    return Err(Error::UnpartitionedGenerator(record.generator.clone()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(Error::Manifest {
            line: 1,
            message: "missing header line".into(),
        })?;
        let header: ManifestHeader =
            serde_json::from_str(header_line).map_err(|e| Error::Manifest {
                line: 1,
                message: format!("bad header: {e}"),
            })?;
        let layout = TokenLayout {
            n_cls: header.n_cls,
            n_reg: header.n_reg,
            grid_h: header.grid_h,
            grid_w: header.grid_w,
        };

        let mut records = Vec::new();
        for (idx, line) in lines {
            let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Manifest {
                line: idx + 1,
                message: e.to_string(),
            })?;
            let label: Label = raw.label.parse()?;
            let split: Split = raw.split.parse().map_err(|e: Error| Error::Manifest {
                line: idx + 1,
                message: e.to_string(),
            })?;
            records.push(SampleRecord {
                sample_id: raw.sample_id,
                image_path: raw.image_path,
                feature_path: raw.feature_path,
                label,
                generator: raw.generator,
                split,
            });
        }
        Self::new(
            layout,
            header.dim,
            header.seen_generators,
            header.unseen_generators,
            records,
        )
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// Feature path for `record`: absolute paths are used verbatim, relative
    /// ones are joined onto `features_dir` or, failing that, the manifest's
    /// own directory.
    pub fn feature_path(&self, record: &SampleRecord, features_dir: Option<&Path>) -> PathBuf {
        if record.feature_path.is_absolute() {
            record.feature_path.clone()
        } else {
            features_dir
                .unwrap_or(&self.base_dir)
                .join(&record.feature_path)
        }
    }

    pub fn by_split(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    /// Fake generators in order of first appearance.
    pub fn generators(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| r.label == Label::Fake)
            .map(|r| r.generator.as_str())
            .filter(|g| seen.insert(*g))
            .collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<SampleManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest = SampleManifest::parse(&text)?;
    manifest.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"n_cls":1,"n_reg":4,"grid_h":14,"grid_w":14,"dim":8,"seen_generators":["ldm"],"unseen_generators":["sdxl"]}"#;

    fn record(id: &str, label: &str, generator: &str) -> String {
        format!(
            r#"{{"sample_id":"{id}","feature_path":"{id}.fgts","label":"{label}","generator":"{generator}","split":"reference"}}"#
        )
    }

    #[test]
    fn two_record_manifest() {
        let text = [
            HEADER.to_string(),
            record("a", "real", "-"),
            record("b", "fake", "ldm"),
        ]
        .join("\n");
        let m = SampleManifest::parse(&text).unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].sample_id, "a");
        assert_eq!(m.records[1].label, Label::Fake);
        assert_eq!(m.layout, TokenLayout::REFERENCE);
    }

    #[test]
    fn partition_overlap() {
        let header = r#"{"n_cls":1,"n_reg":4,"grid_h":14,"grid_w":14,"dim":8,"seen_generators":["ldm"],"unseen_generators":["ldm"]}"#;
        let err = SampleManifest::parse(header).unwrap_err();
        assert!(err.to_string().starts_with("generator partition overlap"));
    }

    #[test]
    fn duplicate_id() {
        let text = [
            HEADER.to_string(),
            record("a", "real", "-"),
            record("a", "fake", "ldm"),
        ]
        .join("\n");
        assert!(matches!(
            SampleManifest::parse(&text),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn unknown_label() {
        let text = [HEADER.to_string(), record("a", "synthetic", "ldm")].join("\n");
        assert!(matches!(
            SampleManifest::parse(&text),
            Err(Error::UnknownLabel(l)) if l == "synthetic"
        ));
    }

    #[test]
    fn real_must_use_sentinel() {
        let text = [HEADER.to_string(), record("a", "real", "")].join("\n");
        assert!(matches!(
            SampleManifest::parse(&text),
            Err(Error::Manifest { line: 2, .. })
        ));
    }

    #[test]
    fn fake_generator_must_be_partitioned() {
        let text = [HEADER.to_string(), record("a", "fake", "midjourney")].join("\n");
        assert!(matches!(
            SampleManifest::parse(&text),
            Err(Error::UnpartitionedGenerator(g)) if g == "midjourney"
        ));
    }

    #[test]
    fn balanced_manifest_counts_and_roundtrip() {
        let mut lines = vec![HEADER.to_string()];
        for i in 0..1000 {
            lines.push(record(&format!("r{i}"), "real", "-"));
            lines.push(record(&format!("f{i}"), "fake", "ldm"));
        }
        let m = SampleManifest::parse(&lines.join("\n")).unwrap();
        assert_eq!(m.records.len(), 2000);
        assert_eq!(m.count(Label::Real), 1000);
        assert_eq!(m.count(Label::Fake), 1000);
        assert_eq!(SampleManifest::parse(&m.to_jsonl()).unwrap(), m);
    }

    #[test]
    fn feature_path_resolution() {
        let text = [HEADER.to_string(), record("a", "real", "-")].join("\n");
        let mut m = SampleManifest::parse(&text).unwrap();
        m.base_dir = PathBuf::from("/data/m");
        let r = &m.records[0];
        assert_eq!(m.feature_path(r, None), PathBuf::from("/data/m/a.fgts"));
        assert_eq!(
            m.feature_path(r, Some(Path::new("/feat"))),
            PathBuf::from("/feat/a.fgts")
        );
    }
}
