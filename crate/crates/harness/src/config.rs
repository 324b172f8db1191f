//! Experiment configuration, read from TOML.
//!
//! ```toml
//! reference = "data/manifest.jsonl"
//! output_dir = "runs/patch-k10"
//! token_strategy = "patch"
//! seed = 0
//!
//! [selection]
//! k = 10               # or "all"
//! method = "fisher_topk"
//!
//! [protocol]
//! name = "probe"
//! epochs = 50
//!
//! [robustness]
//! specs = ["jpeg:70", "resize:0.5"]
//! manifests = { "jpeg:70" = "data/jpeg70.jsonl", "resize:0.5" = "data/resize05.jsonl" }
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fgts_core::classify::{NormMode, ProbeConfig, ProtocolRegistry, TrainingMeta};
use fgts_core::ranking::{DEFAULT_EPS, DEFAULT_K};
use fgts_core::select::SelectorRegistry;
use fgts_core::{SelectionConfig, TokenStrategy};
use fgts_perturb::PerturbSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result, Stage};

/// Number of tokens to keep: a count, or every token the strategy offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Count(usize),
    All(AllTokens),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllTokens {
    All,
}

impl KSpec {
    pub const ALL: KSpec = KSpec::All(AllTokens::All);

    pub fn resolve(self, available: usize) -> usize {
        match self {
            KSpec::Count(k) => k,
            KSpec::All(_) => available,
        }
    }
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Count(DEFAULT_K)
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Count(k) => write!(f, "{k}"),
            KSpec::All(_) => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for KSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(KSpec::ALL);
        }
        s.parse()
            .map(KSpec::Count)
            .map_err(|_| format!("expected a token count or \"all\", got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSpec {
    pub k: KSpec,
    pub method: String,
    /// Falls back to the experiment seed.
    pub seed: Option<u64>,
    /// Seeds averaged for the random baseline in top-K sweeps.
    pub random_seeds: usize,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        SelectionSpec {
            k: KSpec::default(),
            method: "fisher_topk".into(),
            seed: None,
            random_seeds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSpec {
    pub name: String,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub norm: NormMode,
    /// Falls back to the experiment seed.
    pub seed: Option<u64>,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        let meta = TrainingMeta::default();
        ProtocolSpec {
            name: "centroid".into(),
            epochs: meta.epochs,
            lr: meta.lr,
            batch_size: meta.batch_size,
            norm: NormMode::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSpec {
    /// Perturbations in `kind:params` form.
    pub specs: Vec<String>,
    /// Eval manifest with pre-extracted features for each perturbation.
    pub manifests: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Manifest whose `reference` split fits the ranking and classifier.
    pub reference: PathBuf,
    /// Manifest whose `eval` split is scored; defaults to `reference`.
    #[serde(default)]
    pub eval: Option<PathBuf>,
    /// Overrides the directory relative feature paths resolve against.
    #[serde(default)]
    pub features_dir: Option<PathBuf>,
    /// Restricts reference fakes to these generators (empty = all).
    #[serde(default)]
    pub reference_generators: Vec<String>,
    #[serde(default = "default_strategy")]
    pub token_strategy: TokenStrategy,
    #[serde(default)]
    pub selection: SelectionSpec,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub robustness: RobustnessSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Stage cache location; `None` disables caching.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_strategy() -> TokenStrategy {
    TokenStrategy::Patch
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fgts-out")
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl ExperimentConfig {
    pub fn new(reference: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            reference: reference.into(),
            eval: None,
            features_dir: None,
            reference_generators: Vec::new(),
            token_strategy: default_strategy(),
            selection: SelectionSpec::default(),
            protocol: ProtocolSpec::default(),
            robustness: RobustnessSpec::default(),
            output_dir: output_dir.into(),
            cache_dir: None,
            seed: 0,
            eps: DEFAULT_EPS,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::invalid(Stage::Config, e))
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.reference);
        self.eval.iter_mut().for_each(fix);
        self.features_dir.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        self.cache_dir.iter_mut().for_each(fix);
        self.robustness.manifests.values_mut().for_each(fix);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn eval_manifest(&self) -> &Path {
        self.eval.as_deref().unwrap_or(&self.reference)
    }

    pub fn selection_seed(&self) -> u64 {
        self.selection.seed.unwrap_or(self.seed)
    }

    pub fn probe_config(&self) -> ProbeConfig {
        let p = &self.protocol;
        ProbeConfig {
            meta: TrainingMeta {
                epochs: p.epochs,
                lr: p.lr,
                batch_size: p.batch_size,
                seed: p.seed.unwrap_or(self.seed),
                ..TrainingMeta::default()
            },
            norm: p.norm,
        }
    }

    /// Selection for a concrete `k`.
    pub fn selection_config(&self, k: usize) -> SelectionConfig {
        match self.selection.method.as_str() {
            "random_k" => SelectionConfig::random(k, self.selection_seed()),
            _ => SelectionConfig::fisher(k),
        }
    }

    pub fn perturbations(&self) -> Result<Vec<PerturbSpec>> {
        self.robustness
            .specs
            .iter()
            .map(|s| s.parse::<PerturbSpec>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| HarnessError::invalid(Stage::Config, e))
    }

    /// Checks everything that does not need the data itself.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::invalid(Stage::Config, msg));
        for (what, p) in [("reference manifest", &self.reference), ("eval manifest", &self.eval_manifest().to_path_buf())] {
            if !p.is_file() {
                return bad(format!("{what} not found: {}", p.display()));
            }
        }
        if let Some(dir) = &self.features_dir {
            if !dir.is_dir() {
                return bad(format!("features_dir not found: {}", dir.display()));
            }
        }
        if self.selection.k == KSpec::Count(0) {
            return bad("selection.k must be positive".into());
        }
        if !SelectorRegistry::default().names().any(|n| n == self.selection.method) {
            return bad(format!("unknown selection method {:?}", self.selection.method));
        }
        if self.selection.random_seeds == 0 {
            return bad("selection.random_seeds must be positive".into());
        }
        ProtocolRegistry::default()
            .build(&self.protocol.name, &self.probe_config())
            .map_err(|e| HarnessError::invalid(Stage::Config, e))?;
        if self.protocol.epochs == 0 || self.protocol.batch_size == 0 {
            return bad("protocol epochs and batch_size must be positive".into());
        }
        if !(self.protocol.lr > 0.0 && self.protocol.lr.is_finite()) {
            return bad(format!("protocol lr must be positive, got {}", self.protocol.lr));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and non-negative, got {}", self.eps));
        }
        self.perturbations()?;
        for key in self.robustness.manifests.keys() {
            key.parse::<PerturbSpec>()
                .map_err(|e| HarnessError::invalid(Stage::Config, e))?;
        }
        Ok(())
    }

    /// Parameters that determine results; paths and output locations are
    /// excluded so relocating data or outputs keeps fingerprints stable.
    pub fn fingerprint_params(&self) -> serde_json::Value {
        serde_json::json!({
            "token_strategy": self.token_strategy,
            "reference_generators": self.reference_generators,
            "selection": {
                "k": self.selection.k.to_string(),
                "method": self.selection.method,
                "seed": self.selection_seed(),
            },
            "protocol": self.protocol.name,
            "probe": self.probe_config(),
            "eps": self.eps,
        })
    }
}
