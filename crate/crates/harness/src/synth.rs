//! Writes a small planted-signal benchmark to disk: feature files plus a
//! manifest with reference and eval splits.

use std::path::{Path, PathBuf};

use fgts_core::synthetic::PlantedSignal;
use fgts_core::{
    write_feature_file, Label, SampleManifest, SampleRecord, Split, TokenLayout,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result, Stage, StageContext};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub name: String,
    /// Multiplies the planted gap; below 1 makes the generator harder.
    pub gap_scale: f64,
    /// Seen generators supply the reference fakes.
    pub seen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub layout: TokenLayout,
    pub dim: usize,
    pub n_informative: usize,
    /// Class-mean gap on informative tokens, in noise standard deviations.
    pub gap: f64,
    pub n_reference_per_class: usize,
    pub n_eval_real: usize,
    pub n_eval_per_generator: usize,
    pub generators: Vec<GeneratorSpec>,
    pub seed: u64,
}

impl Default for SyntheticBenchmark {
    fn default() -> Self {
        SyntheticBenchmark {
            layout: TokenLayout::REFERENCE,
            dim: 8,
            n_informative: 10,
            gap: 1.5,
            n_reference_per_class: 100,
            n_eval_real: 100,
            n_eval_per_generator: 100,
            generators: vec![
                GeneratorSpec {
                    name: "gen_a".into(),
                    gap_scale: 1.0,
                    seen: true,
                },
                GeneratorSpec {
                    name: "gen_b".into(),
                    gap_scale: 0.7,
                    seen: false,
                },
            ],
            seed: 0,
        }
    }
}

impl SyntheticBenchmark {
    pub fn signal(&self) -> Result<PlantedSignal> {
        PlantedSignal::new(self.layout, self.dim, self.n_informative, self.gap, self.seed)
            .invalid_at(Stage::Config)
    }

    /// Writes `features/*.fgts` and `manifest.jsonl` under `dir`; returns
    /// the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let signal = self.signal()?;
        let seen: Vec<&GeneratorSpec> = self.generators.iter().filter(|g| g.seen).collect();
        if seen.is_empty() {
            return Err(HarnessError::invalid(Stage::Config, "no seen generator for reference fakes"));
        }
        let features = dir.join("features");
        std::fs::create_dir_all(&features).map_err(|e| HarnessError::io(&features, e))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        let mut records = Vec::new();
        let mut emit = |id: String, label: Label, gen: &GeneratorSpec, split: Split| -> Result<()> {
            let scale = if label == Label::Real { 1.0 } else { gen.gap_scale };
            let tensor = signal.sample(label, scale, &mut rng);
            let rel = PathBuf::from("features").join(format!("{id}.fgts"));
            write_feature_file(&tensor, dir.join(&rel)).at(Stage::Load)?;
            records.push(SampleRecord {
                sample_id: id,
                image_path: None,
                feature_path: rel,
                label,
                generator: if label == Label::Real { "-".into() } else { gen.name.clone() },
                split,
            });
            Ok(())
        };
        let real = GeneratorSpec {
            name: "-".into(),
            gap_scale: 1.0,
            seen: true,
        };
        for i in 0..self.n_reference_per_class {
            emit(format!("ref-real-{i:05}"), Label::Real, &real, Split::Reference)?;
            let gen = seen[i % seen.len()];
            emit(format!("ref-{}-{i:05}", gen.name), Label::Fake, gen, Split::Reference)?;
        }
        for i in 0..self.n_eval_real {
            emit(format!("eval-real-{i:05}"), Label::Real, &real, Split::Eval)?;
        }
        for gen in &self.generators {
            for i in 0..self.n_eval_per_generator {
                emit(format!("eval-{}-{i:05}", gen.name), Label::Fake, gen, Split::Eval)?;
            }
        }
        let names = |seen: bool| {
            self.generators
                .iter()
                .filter(move |g| g.seen == seen)
                .map(|g| g.name.clone())
        };
        let manifest = SampleManifest::new(self.layout, self.dim, names(true), names(false), records)
            .invalid_at(Stage::Config)?;
        let path = dir.join("manifest.jsonl");
        manifest.write(&path).at(Stage::Load)?;
        Ok(path)
    }
}
