//! The end-to-end pipeline: rank, select, embed, fit, score, report.
//!
//! Stage results are cached by content (see [`crate::cache`]), and every
//! classifier is rebuilt from its serialized artifact, so cached and fresh
//! runs take the same numeric path and produce identical bytes.

use std::path::Path;

use fgts_core::classify::{Classifier, ProtocolRegistry};
use fgts_core::metrics::{group_by_generator, mean_triple, MetricTriple, ScoredSample};
use fgts_core::ranking::fisher_scores;
use fgts_core::select::SelectionMethod;
use fgts_core::{select_top_k, Embedding, Label, SelectionConfig, Split, TokenRanking, TokenStrategy};
use fgts_perturb::PerturbSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cache::{digest, stage_key, StageCache};
use crate::config::{ExperimentConfig, KSpec};
use crate::dataset::{Dataset, EmbeddedSample};
use crate::error::{HarnessError, Result, Stage, StageContext};
use crate::report::{write_file, ComparisonTable, EvalReport};

/// How tokens are chosen for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub strategy: TokenStrategy,
    pub k: KSpec,
    pub method: SelectionMethod,
}

impl Variant {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Variant {
            strategy: cfg.token_strategy.clone(),
            k: cfg.selection.k,
            method: cfg.selection_config(1).method,
        }
    }
}

/// Everything fitted on the reference split for one [`Variant`].
pub struct Prepared {
    pub variant: Variant,
    pub k: usize,
    pub ranking: TokenRanking,
    pub indices: Vec<usize>,
    pub artifact: serde_json::Value,
    pub classifier: Box<dyn Classifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: String,
    pub generator: String,
    pub label: Label,
    pub score: f64,
}

pub fn scores_to_csv(rows: &[ScoreRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn scores_from_csv(text: &str) -> Result<Vec<ScoreRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .invalid_at(Stage::Report)
}

/// Per-generator metrics over scored samples.
pub fn grouped_report(rows: &[ScoreRow]) -> Result<fgts_core::metrics::GroupedMetrics> {
    let samples: Vec<ScoredSample> = rows
        .iter()
        .map(|r| ScoredSample::new(r.score, r.label, r.generator.clone()))
        .collect();
    group_by_generator(&samples).at(Stage::Score)
}

pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub cache: StageCache,
    pub reference: Dataset,
}

impl Pipeline {
    /// Validates the config and loads the reference split.
    pub fn open(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let reference = Dataset::load(
            &cfg.reference,
            Split::Reference,
            cfg.features_dir.as_deref(),
            &cfg.reference_generators,
        )?;
        if reference.is_empty() {
            return Err(HarnessError::invalid(Stage::Load, "no reference samples"));
        }
        let cache = cfg.cache_dir.clone().map(StageCache::at).unwrap_or_default();
        Ok(Pipeline {
            cfg: cfg.clone(),
            cache,
            reference,
        })
    }

    /// Loads the eval split of `manifest`, checking it is non-empty and
    /// shares the reference layout.
    pub fn load_eval(&self, manifest: &Path) -> Result<Dataset> {
        let eval = Dataset::load(manifest, Split::Eval, self.cfg.features_dir.as_deref(), &[])?;
        if eval.is_empty() {
            return Err(HarnessError::invalid(Stage::Load, "no eval samples"));
        }
        if eval.layout() != self.reference.layout() || eval.dim() != self.reference.dim() {
            return Err(HarnessError::invalid(
                Stage::Load,
                format!(
                    "layout mismatch: reference {} dim {}, eval {} dim {}",
                    self.reference.layout(),
                    self.reference.dim(),
                    eval.layout(),
                    eval.dim()
                ),
            ));
        }
        Ok(eval)
    }

    pub fn ranking(&self, scope: &TokenStrategy) -> Result<TokenRanking> {
        let key = stage_key(
            "rank",
            &json!({"reference": self.reference.fingerprint, "scope": scope, "eps": self.cfg.eps}),
        );
        self.cache.get_or_try("rank", &key, || {
            let stats = self.reference.class_stats(scope)?;
            fisher_scores(&stats, self.cfg.eps).at(Stage::Rank)
        })
    }

    fn embeddings(&self, data: &Dataset, indices: &[usize]) -> Result<(String, Vec<EmbeddedSample>)> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let key = stage_key("embed", &json!({"data": data.fingerprint, "indices": sorted}));
        let value = self.cache.get_or_try("embed", &key, || data.embed(&sorted))?;
        Ok((key, value))
    }

    pub fn prepare(&self, variant: &Variant) -> Result<Prepared> {
        let ranking = self.ranking(&variant.strategy)?;
        let available = ranking.n_scored();
        let k = variant.k.resolve(available);
        if k == 0 || k > available {
            return Err(HarnessError::invalid(
                Stage::Select,
                format!("K={k} is outside 1..={available} for token strategy {}", variant.strategy),
            ));
        }
        let selection = SelectionConfig {
            k,
            method: variant.method,
        };
        let indices = select_top_k(&ranking, &selection).at(Stage::Select)?;
        let (ref_key, reference) = self.embeddings(&self.reference, &indices)?;

        let registry = ProtocolRegistry::default();
        let probe = self.cfg.probe_config();
        let fit_key = stage_key(
            "fit",
            &json!({
                "embeddings": ref_key,
                "protocol": self.cfg.protocol.name,
                "probe": probe,
                "indices": indices,
            }),
        );
        let artifact: serde_json::Value = self.cache.get_or_try("fit", &fit_key, || {
            let pairs: Vec<(Label, Embedding)> =
                reference.iter().map(|s| (s.label, s.z.clone())).collect();
            let protocol = registry.build(&self.cfg.protocol.name, &probe).invalid_at(Stage::Fit)?;
            Ok(protocol.fit(&pairs, &indices).at(Stage::Fit)?.to_artifact())
        })?;
        let classifier = registry.load(&artifact).at(Stage::Fit)?;
        Ok(Prepared {
            variant: variant.clone(),
            k,
            ranking,
            indices,
            artifact,
            classifier,
        })
    }

    pub fn score(&self, prepared: &Prepared, eval: &Dataset) -> Result<Vec<ScoreRow>> {
        let (_, samples) = self.embeddings(eval, &prepared.indices)?;
        samples
            .into_iter()
            .map(|s| {
                let p = prepared.classifier.predict(&s.z).map_err(|e| {
                    HarnessError::stage(Stage::Score, format!("{}: {e}", s.sample_id))
                })?;
                Ok(ScoreRow {
                    sample_id: s.sample_id,
                    generator: s.generator,
                    label: s.label,
                    score: p.score,
                })
            })
            .collect()
    }

    fn fingerprint(&self, prepared: &Prepared, eval: &Dataset) -> String {
        let v = &prepared.variant;
        let doc = json!({
            "params": {
                "token_strategy": v.strategy,
                "k": prepared.k,
                "selection": v.method,
                "reference_generators": self.cfg.reference_generators,
                "protocol": self.cfg.protocol.name,
                "probe": self.cfg.probe_config(),
                "eps": self.cfg.eps,
            },
            "reference": self.reference.fingerprint,
            "eval": eval.fingerprint,
            "ranking": prepared.ranking,
            "model": prepared.artifact,
        });
        digest(doc.to_string().as_bytes())
    }

    pub fn report(&self, prepared: &Prepared, eval: &Dataset, name: &str) -> Result<(EvalReport, Vec<ScoreRow>)> {
        let scores = self.score(prepared, eval)?;
        let grouped = grouped_report(&scores)?;
        let report = EvalReport {
            name: name.to_string(),
            token_strategy: prepared.variant.strategy.clone(),
            selection: prepared.variant.method.to_string(),
            k: prepared.k,
            protocol: self.cfg.protocol.name.clone(),
            token_indices: prepared.indices.clone(),
            n_reference: self.reference.len(),
            rows: grouped.rows,
            aggregate: grouped.aggregate,
            fingerprint: self.fingerprint(prepared, eval),
        };
        Ok((report, scores))
    }

    /// Prepares and reports one variant against `eval`, writing every
    /// artifact into `dir`.
    pub fn run_variant(&self, variant: &Variant, eval: &Dataset, name: &str, dir: &Path) -> Result<EvalReport> {
        let prepared = self.prepare(variant)?;
        let (report, scores) = self.report(&prepared, eval, name)?;
        save_artifacts(dir, &prepared, &scores)?;
        report.save(dir)?;
        Ok(report)
    }
}

fn save_artifacts(dir: &Path, prepared: &Prepared, scores: &[ScoreRow]) -> Result<()> {
    write_file(&dir.join("ranking.json"), &prepared.ranking.to_json())?;
    let model = serde_json::to_string_pretty(&prepared.artifact).expect("artifact serializes");
    write_file(&dir.join("model.json"), &model)?;
    write_file(&dir.join("scores.csv"), &scores_to_csv(scores))
}

fn variant_name(strategy: &TokenStrategy, layout: &fgts_core::TokenLayout, method: &SelectionMethod, k: KSpec, protocol: &str) -> String {
    format!("{} | {method} K={k} | {protocol}", strategy.table_label(layout))
}

/// Runs the configured experiment once and writes ranking, model, scores
/// and reports into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let pipeline = Pipeline::open(cfg)?;
    let eval = pipeline.load_eval(cfg.eval_manifest())?;
    let variant = Variant::from_config(cfg);
    let name = variant_name(
        &variant.strategy,
        &pipeline.reference.layout(),
        &variant.method,
        variant.k,
        &cfg.protocol.name,
    );
    pipeline.run_variant(&variant, &eval, &name, &cfg.output_dir)
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

/// Evaluates every standard token strategy with all of its tokens pooled,
/// in table order. Writes `tokens.csv` / `tokens.md`.
pub fn token_strategy_sweep(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    let pipeline = Pipeline::open(cfg)?;
    let eval = pipeline.load_eval(cfg.eval_manifest())?;
    let layout = pipeline.reference.layout();
    let mut table = ComparisonTable::new("Token-wise evaluation", "tokens");
    let mut reports = Vec::new();
    for strategy in TokenStrategy::TABLE_ORDER {
        let variant = Variant {
            strategy: strategy.clone(),
            k: KSpec::ALL,
            method: SelectionMethod::FisherTopk,
        };
        let label = strategy.table_label(&layout);
        let dir = cfg.output_dir.join("tokens").join(slug(&strategy.to_string()));
        let report = pipeline.run_variant(&variant, &eval, &label, &dir)?;
        table.push(label, report.clone());
        reports.push(report);
    }
    table.save(&cfg.output_dir, "tokens")?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopkRow {
    pub k: usize,
    pub fisher: EvalReport,
    /// One report per random seed.
    pub random: Vec<EvalReport>,
    pub random_mean: MetricTriple,
}

impl TopkRow {
    pub fn acc_gap(&self) -> f64 {
        self.fisher.aggregate.acc - self.random_mean.acc
    }
}

fn topk_csv(rows: &[TopkRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record([
            "k", "fisher_acc", "fisher_auc", "fisher_ap", "random_acc", "random_auc", "random_ap",
            "acc_gap", "random_acc_per_seed", "fisher_fingerprint",
        ])?;
        for r in rows {
            let per_seed: Vec<String> = r.random.iter().map(|x| x.aggregate.acc.to_string()).collect();
            w.write_record([
                r.k.to_string(),
                r.fisher.aggregate.acc.to_string(),
                r.fisher.aggregate.auc.to_string(),
                r.fisher.aggregate.ap.to_string(),
                r.random_mean.acc.to_string(),
                r.random_mean.auc.to_string(),
                r.random_mean.ap.to_string(),
                r.acc_gap().to_string(),
                per_seed.join(";"),
                r.fisher.fingerprint.clone(),
            ])?;
        }
        Ok(())
    };
    write(&mut w).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn topk_markdown(rows: &[TopkRow], n_seeds: usize) -> String {
    let mut s = format!(
        "## Top-K vs random-K\n\nRandom-K is the mean over {n_seeds} seeds.\n\n\
         | K | FGTS Avg-acc | Random-K Avg-acc | Gap |\n|---:|---:|---:|---:|\n"
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {:.2} | {:.2} | {:+.2} |\n",
            r.k,
            100.0 * r.fisher.aggregate.acc,
            100.0 * r.random_mean.acc,
            100.0 * r.acc_gap()
        ));
    }
    s
}

/// Fisher top-K against the random-K baseline for each K. Random seeds are
/// `selection_seed + i` for `i < selection.random_seeds`. Writes
/// `topk.csv` / `topk.md`.
pub fn topk_sweep(cfg: &ExperimentConfig, ks: &[usize]) -> Result<Vec<TopkRow>> {
    let pipeline = Pipeline::open(cfg)?;
    let eval = pipeline.load_eval(cfg.eval_manifest())?;
    let layout = pipeline.reference.layout();
    let n_seeds = cfg.selection.random_seeds;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let run = |method: SelectionMethod, sub: String| {
            let variant = Variant {
                strategy: cfg.token_strategy.clone(),
                k: KSpec::Count(k),
                method,
            };
            let name = variant_name(&variant.strategy, &layout, &method, variant.k, &cfg.protocol.name);
            let dir = cfg.output_dir.join("topk").join(format!("k{k}")).join(sub);
            pipeline.run_variant(&variant, &eval, &name, &dir)
        };
        let fisher = run(SelectionMethod::FisherTopk, "fisher".into())?;
        let random = (0..n_seeds as u64)
            .map(|i| {
                let seed = cfg.selection_seed().wrapping_add(i);
                run(SelectionMethod::RandomK { seed }, format!("random_seed{seed}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let random_mean = mean_triple(random.iter().map(|r| r.aggregate));
        rows.push(TopkRow {
            k,
            fisher,
            random,
            random_mean,
        });
    }
    write_file(&cfg.output_dir.join("topk.csv"), &topk_csv(&rows))?;
    write_file(&cfg.output_dir.join("topk.md"), &topk_markdown(&rows, n_seeds))?;
    Ok(rows)
}

/// Scores the clean eval split and each perturbed variant with one model
/// fitted on the clean reference split. Perturbed features must already be
/// extracted; `cfg.robustness.manifests` maps each spec to its manifest.
/// Rows come out clean first, then in table order. Writes
/// `robustness.csv` / `robustness.md`.
pub fn robustness_sweep(cfg: &ExperimentConfig, specs: &[PerturbSpec]) -> Result<Vec<EvalReport>> {
    let mut manifests = Vec::new();
    for (key, path) in &cfg.robustness.manifests {
        let spec: PerturbSpec = key.parse().invalid_at(Stage::Config)?;
        manifests.push((spec, path.clone()));
    }
    let mut ordered = specs.to_vec();
    ordered.sort_by(PerturbSpec::table_cmp);
    ordered.dedup();
    let mut sources = Vec::with_capacity(ordered.len());
    for spec in &ordered {
        let path = manifests
            .iter()
            .find(|(s, _)| s == spec)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| {
                HarnessError::stage(
                    Stage::Load,
                    format!("no pre-extracted features for {spec} and no extraction bridge is available"),
                )
            })?;
        sources.push((*spec, path));
    }

    let pipeline = Pipeline::open(cfg)?;
    let prepared = pipeline.prepare(&Variant::from_config(cfg))?;
    let root = cfg.output_dir.join("robustness");
    let mut table = ComparisonTable::new("Robustness under perturbations", "perturbation");
    let mut reports = Vec::new();

    let clean = pipeline.load_eval(cfg.eval_manifest())?;
    let mut run = |name: String, eval: &Dataset, dir: &Path| -> Result<()> {
        let (report, scores) = pipeline.report(&prepared, eval, &name)?;
        save_artifacts(dir, &prepared, &scores)?;
        report.save(dir)?;
        table.push(name, report.clone());
        reports.push(report);
        Ok(())
    };
    run("Clean".into(), &clean, &root.join("clean"))?;
    for (spec, path) in &sources {
        let eval = pipeline.load_eval(path)?;
        run(spec.label(), &eval, &root.join(slug(&spec.to_string())))?;
    }
    table.save(&cfg.output_dir, "robustness")?;
    Ok(reports)
}
