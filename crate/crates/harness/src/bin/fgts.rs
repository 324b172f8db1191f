use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fgts_core::classify::{NormMode, ProtocolRegistry};
use fgts_core::{load_manifest, Split, TokenStrategy};
use fgts_harness::dataset::Dataset;
use fgts_harness::experiment::{grouped_report, scores_from_csv, scores_to_csv, ScoreRow};
use fgts_harness::report::ComparisonTable;
use fgts_harness::{
    robustness_sweep, run_experiment, token_strategy_sweep, topk_sweep, EvalReport,
    ExperimentConfig, HarnessError, KSpec, Pipeline, Result, Stage, Variant,
};
use fgts_perturb::{derive_seed, spectrum, ImageBuffer, PerturbSpec};

#[derive(Parser)]
#[command(name = "fgts", version, about = "Fisher-guided token selection toolkit")]
struct Cli {
    /// Seed for every seeded step; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ExpArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest supplying the reference split.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Manifest supplying the eval split (defaults to --reference).
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long)]
    features_dir: Option<PathBuf>,
    /// Only these generators contribute reference fakes.
    #[arg(long, value_delimiter = ',')]
    reference_generators: Option<Vec<String>>,
    /// all, cls, reg, patch, cls+reg, cls+patch or indices:i,j,...
    #[arg(long)]
    strategy: Option<TokenStrategy>,
    /// Number of tokens, or "all".
    #[arg(long)]
    k: Option<KSpec>,
    /// fisher_topk or random_k.
    #[arg(long)]
    method: Option<String>,
    /// centroid or probe.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Probe input normalization: none, l2 or standardize.
    #[arg(long, value_parser = parse_norm)]
    norm: Option<NormMode>,
    #[arg(long)]
    eps: Option<f64>,
    /// Seeds averaged for the random-K baseline.
    #[arg(long)]
    random_seeds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn parse_norm(s: &str) -> std::result::Result<NormMode, String> {
    match s {
        "none" => Ok(NormMode::None),
        "l2" => Ok(NormMode::L2),
        "standardize" => Ok(NormMode::Standardize),
        _ => Err(format!("expected none, l2 or standardize, got {s:?}")),
    }
}

impl ExpArgs {
    fn into_config(self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.reference) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(reference)) => ExperimentConfig::new(reference, "fgts-out"),
            (None, None) => {
                return Err(HarnessError::invalid(
                    Stage::Config,
                    "either --config or --reference is required",
                ))
            }
        };
        if let Some(v) = self.reference {
            cfg.reference = v;
        }
        if self.eval.is_some() {
            cfg.eval = self.eval;
        }
        if self.features_dir.is_some() {
            cfg.features_dir = self.features_dir;
        }
        if let Some(v) = self.reference_generators {
            cfg.reference_generators = v;
        }
        if let Some(v) = self.strategy {
            cfg.token_strategy = v;
        }
        if let Some(v) = self.k {
            cfg.selection.k = v;
        }
        if let Some(v) = self.method {
            cfg.selection.method = v;
        }
        if let Some(v) = self.random_seeds {
            cfg.selection.random_seeds = v;
        }
        if let Some(v) = self.protocol {
            cfg.protocol.name = v;
        }
        if let Some(v) = self.epochs {
            cfg.protocol.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.protocol.lr = v;
        }
        if let Some(v) = self.batch_size {
            cfg.protocol.batch_size = v;
        }
        if let Some(v) = self.norm {
            cfg.protocol.norm = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        if self.cache_dir.is_some() {
            cfg.cache_dir = self.cache_dir;
        }
        if let Some(v) = seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check manifests and every feature file they reference.
    Validate {
        /// Manifests to check; defaults to those named by the experiment.
        #[arg(long)]
        manifest: Vec<PathBuf>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Compute the Fisher token ranking on the reference split.
    Rank {
        /// How many top tokens to print.
        #[arg(long, default_value_t = 10)]
        show: usize,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Rank, select and fit a classifier; writes ranking.json and model.json.
    Fit {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Score one split of a manifest with a saved model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// reference or eval.
        #[arg(long, default_value = "eval")]
        split: Split,
        #[arg(long)]
        features_dir: Option<PathBuf>,
        /// Scores CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment end to end and write its report.
    Eval {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Apply a perturbation to every image in a directory.
    Perturb {
        /// lowpass, highpass, mask, shuffle, cond_a, cond_b, cond_c, gaussian, jpeg or resize.
        #[arg(long)]
        kind: String,
        /// Parameters in order, e.g. `--param 0.5 --param 56` for cond_b.
        #[arg(long, allow_hyphen_values = true)]
        param: Vec<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the log-magnitude spectrum of an image as CSV or PNG.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output path ending in .csv or .png.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate every token strategy with all of its tokens.
    SweepTokens {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Fisher top-K against random-K for several K.
    SweepTopk {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 50])]
        ks: Vec<usize>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Clean and perturbed evaluation from pre-extracted features.
    SweepRobustness {
        /// Perturbations such as jpeg:70; defaults to the config's list.
        #[arg(long)]
        spec: Vec<String>,
        /// Eval manifest for a perturbation, as SPEC=PATH.
        #[arg(long)]
        perturbed: Vec<String>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Combine saved run reports into one comparison table.
    Report {
        /// Run directories containing report.json.
        #[arg(long, required_unless_present = "scores")]
        run: Vec<PathBuf>,
        /// Build a per-generator table from a scores CSV instead.
        #[arg(long, conflicts_with = "run")]
        scores: Option<PathBuf>,
        /// Directory for the combined CSV and Markdown.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic planted-signal benchmark.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Validate { manifest, exp } => validate(manifest, exp, seed),
        Command::Rank { show, exp } => {
            let cfg = exp.into_config(seed)?;
            let pipeline = Pipeline::open(&cfg)?;
            let ranking = pipeline.ranking(&cfg.token_strategy)?;
            write(&cfg.output_dir.join("ranking.json"), &ranking.to_json())?;
            println!("rank  token  score");
            for (i, &t) in ranking.sorted_indices.iter().take(show).enumerate() {
                println!("{:>4}  {t:>5}  {:.6e}", i + 1, ranking.score_of(t).unwrap_or(0.0));
            }
            Ok(())
        }
        Command::Fit { exp } => {
            let cfg = exp.into_config(seed)?;
            let pipeline = Pipeline::open(&cfg)?;
            let prepared = pipeline.prepare(&Variant::from_config(&cfg))?;
            write(&cfg.output_dir.join("ranking.json"), &prepared.ranking.to_json())?;
            let model = serde_json::to_string_pretty(&prepared.artifact).expect("artifact serializes");
            write(&cfg.output_dir.join("model.json"), &model)?;
            println!("fitted {} on tokens {:?}", cfg.protocol.name, prepared.indices);
            Ok(())
        }
        Command::Classify {
            model,
            manifest,
            split,
            features_dir,
            out,
        } => classify(&model, &manifest, split, features_dir.as_deref(), out.as_deref()),
        Command::Eval { exp } => {
            let cfg = exp.into_config(seed)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_markdown());
            Ok(())
        }
        Command::Perturb {
            kind,
            param,
            input,
            out,
        } => perturb(&kind, &param, seed.unwrap_or(0), &input, &out),
        Command::Spectrum { input, out } => {
            let img = ImageBuffer::load(&input).map_err(|e| HarnessError::invalid(Stage::Perturb, e))?;
            spectrum(&img)
                .save(&out)
                .map_err(|e| HarnessError::stage(Stage::Perturb, e))
        }
        Command::SweepTokens { exp } => {
            let cfg = exp.into_config(seed)?;
            token_strategy_sweep(&cfg)?;
            print_file(&cfg.output_dir.join("tokens.md"))
        }
        Command::SweepTopk { ks, exp } => {
            let cfg = exp.into_config(seed)?;
            topk_sweep(&cfg, &ks)?;
            print_file(&cfg.output_dir.join("topk.md"))
        }
        Command::SweepRobustness {
            spec,
            perturbed,
            exp,
        } => {
            let mut cfg = exp.into_config(seed)?;
            if !spec.is_empty() {
                cfg.robustness.specs = spec;
            }
            for pair in perturbed {
                let (s, path) = pair.split_once('=').ok_or_else(|| {
                    HarnessError::invalid(Stage::Config, format!("expected SPEC=PATH, got {pair:?}"))
                })?;
                cfg.robustness.manifests.insert(s.to_string(), PathBuf::from(path));
            }
            cfg.validate()?;
            robustness_sweep(&cfg, &cfg.perturbations()?)?;
            print_file(&cfg.output_dir.join("robustness.md"))
        }
        Command::Report { run, scores, out } => report(&run, scores.as_deref(), out.as_deref()),
        Command::Synth {
            out,
            per_class,
            dim,
        } => {
            let bench = fgts_harness::SyntheticBenchmark {
                dim,
                n_reference_per_class: per_class,
                n_eval_real: per_class,
                n_eval_per_generator: per_class,
                seed: seed.unwrap_or(0),
                ..Default::default()
            };
            let path = bench.write(&out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn print_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    print!("{text}");
    Ok(())
}

fn validate(manifests: Vec<PathBuf>, exp: ExpArgs, seed: Option<u64>) -> Result<()> {
    let (paths, features_dir) = if manifests.is_empty() {
        let cfg = exp.into_config(seed)?;
        cfg.validate()?;
        let mut paths = vec![cfg.reference.clone()];
        if let Some(e) = &cfg.eval {
            paths.push(e.clone());
        }
        paths.extend(cfg.robustness.manifests.values().cloned());
        (paths, cfg.features_dir)
    } else {
        (manifests, exp.features_dir)
    };
    let mut failed = false;
    for path in &paths {
        let manifest = match load_manifest(path) {
            Ok(m) => m,
            Err(e) => {
                println!("{}: invalid manifest: {e}", path.display());
                failed = true;
                continue;
            }
        };
        let report = fgts_core::validate::validate(&manifest, features_dir.as_deref());
        println!(
            "{}: {} files checked, {} errors, {} warnings",
            path.display(),
            report.checked,
            report.errors.len(),
            report.warnings.len()
        );
        for e in &report.errors {
            println!("  error: {e}");
        }
        for w in &report.warnings {
            println!("  warning: {w}");
        }
        failed |= !report.is_ok();
    }
    if failed {
        Err(HarnessError::invalid(Stage::Load, "validation failed"))
    } else {
        Ok(())
    }
}

fn classify(model: &Path, manifest: &Path, split: Split, features_dir: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(model).map_err(|e| HarnessError::io(model, e))?;
    let artifact: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::invalid(Stage::Fit, e))?;
    let classifier = ProtocolRegistry::default()
        .load(&artifact)
        .map_err(|e| HarnessError::invalid(Stage::Fit, e))?;
    let data = Dataset::load(manifest, split, features_dir, &[])?;
    let mut rows = Vec::with_capacity(data.len());
    for s in data.embed(classifier.token_indices())? {
        let p = classifier
            .predict(&s.z)
            .map_err(|e| HarnessError::stage(Stage::Score, format!("{}: {e}", s.sample_id)))?;
        rows.push(ScoreRow {
            sample_id: s.sample_id,
            generator: s.generator,
            label: s.label,
            score: p.score,
        });
    }
    let csv = scores_to_csv(&rows);
    match out {
        Some(path) => write(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

fn perturb(kind: &str, params: &[String], seed: u64, input: &Path, out: &Path) -> Result<()> {
    let spec: PerturbSpec = format!("{kind}:{}", params.join(","))
        .parse()
        .map_err(|e| HarnessError::invalid(Stage::Perturb, e))?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| HarnessError::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    files.sort();
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    for file in &files {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let img = ImageBuffer::load(file).map_err(|e| HarnessError::invalid(Stage::Perturb, e))?;
        let bytes = spec
            .encode_output(&img, derive_seed(seed, stem))
            .map_err(|e| HarnessError::stage(Stage::Perturb, format!("{}: {e}", file.display())))?;
        let target = out.join(format!("{stem}.{}", spec.output_format().extension()));
        std::fs::write(&target, bytes).map_err(|e| HarnessError::io(&target, e))?;
    }
    println!("{spec}: wrote {} images to {}", files.len(), out.display());
    Ok(())
}

fn report(runs: &[PathBuf], scores: Option<&Path>, out: Option<&Path>) -> Result<()> {
    if let Some(path) = scores {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let grouped = grouped_report(&scores_from_csv(&text)?)?;
        println!("| Generator | Real | Fake | Acc | AUC | AP |\n|---|---:|---:|---:|---:|---:|");
        for r in &grouped.rows {
            let m = r.metrics;
            println!(
                "| {} | {} | {} | {:.2} | {:.2} | {:.2} |",
                r.generator, r.n_real, r.n_fake, 100.0 * m.acc, 100.0 * m.auc, 100.0 * m.ap
            );
        }
        let a = grouped.aggregate;
        println!("| **Avg** | | | {:.2} | {:.2} | {:.2} |", 100.0 * a.acc, 100.0 * a.auc, 100.0 * a.ap);
        return Ok(());
    }
    let mut table = ComparisonTable::new("Comparison", "run");
    for dir in runs {
        let report = EvalReport::load(&dir.join("report.json"))?;
        table.push(report.name.clone(), report);
    }
    if let Some(out) = out {
        table.save(out, "comparison")?;
    }
    print!("{}", table.to_markdown());
    Ok(())
}
