mod common;

use common::{config, read, relocate_manifest, write_bench};
use fgts_core::TokenStrategy;
use fgts_harness::{robustness_sweep, token_strategy_sweep, topk_sweep, SyntheticBenchmark};
use fgts_perturb::PerturbSpec;

#[test]
fn token_sweep_covers_every_strategy_in_table_order() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let cfg = config(&manifest, &dir.path().join("out"));
    let reports = token_strategy_sweep(&cfg).unwrap();
    assert_eq!(reports.len(), 6);
    let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "All (201 tokens)",
            "CLS (1 token)",
            "REG (4 tokens)",
            "Patch (196 tokens)",
            "CLS + REG (5 tokens)",
            "CLS + Patch (197 tokens)"
        ]
    );
    let strategies: Vec<TokenStrategy> = reports.iter().map(|r| r.token_strategy.clone()).collect();
    assert_eq!(strategies, TokenStrategy::TABLE_ORDER);
    let acc = |s: TokenStrategy| reports.iter().find(|r| r.token_strategy == s).unwrap().aggregate.acc;
    assert!(acc(TokenStrategy::Patch) >= acc(TokenStrategy::Reg));
    let md = read(cfg.output_dir.join("tokens.md"));
    let pos = |s: &str| md.find(s).unwrap();
    assert!(pos("All (201") < pos("CLS (1") && pos("CLS (1") < pos("Patch (196"));
    assert_eq!(read(cfg.output_dir.join("tokens.csv")).lines().count(), 7);
}

#[test]
fn topk_sweep_pairs_fisher_and_random() {
    let dir = tempfile::tempdir().unwrap();
    // the gap shape needs the full-size benchmark; the small one is too noisy
    let manifest = SyntheticBenchmark::default().write(&dir.path().join("data")).unwrap();
    let cfg = config(&manifest, &dir.path().join("out"));
    let rows = topk_sweep(&cfg, &[10, 20, 30, 50]).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.random.len() == 5));
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), [10, 20, 30, 50]);
    let best = rows.iter().max_by(|a, b| a.acc_gap().total_cmp(&b.acc_gap())).unwrap();
    assert_eq!(best.k, 10, "gaps {:?}", rows.iter().map(|r| r.acc_gap()).collect::<Vec<_>>());
    let csv = read(cfg.output_dir.join("topk.csv"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn full_k_makes_fisher_and_random_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let mut cfg = config(&manifest, &dir.path().join("out"));
    cfg.selection.random_seeds = 1;
    let row = topk_sweep(&cfg, &[196]).unwrap().remove(0);
    let mut fisher = row.fisher.token_indices.clone();
    fisher.sort_unstable();
    assert_eq!(fisher, row.random[0].token_indices);
    assert_eq!(row.fisher.rows, row.random[0].rows);
    assert_eq!(row.acc_gap(), 0.0);
}

#[test]
fn robustness_without_specs_is_clean_only() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let cfg = config(&manifest, &dir.path().join("out"));
    let reports = robustness_sweep(&cfg, &[]).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].name, "Clean");
}

#[test]
fn robustness_rows_follow_table_order_and_identity_matches_clean() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let mut cfg = config(&manifest, &dir.path().join("out"));
    // every perturbed manifest points at the clean features, so all rows
    // must reproduce the clean metrics exactly
    let specs = ["resize:0.75", "jpeg:80", "gaussian:10", "resize:0.5", "jpeg:70", "gaussian:5", "resize:1"];
    for s in specs {
        let path = relocate_manifest(&manifest, &dir.path().join(format!("p/{s}.jsonl").replace(':', "_")), None);
        cfg.robustness.manifests.insert(s.to_string(), path);
    }
    let parsed: Vec<PerturbSpec> = specs.iter().map(|s| s.parse().unwrap()).collect();
    let reports = robustness_sweep(&cfg, &parsed).unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(
        names,
        ["Clean", "Gaussian (5)", "Gaussian (10)", "JPEG (70)", "JPEG (80)", "Resize (0.5)", "Resize (0.75)", "Resize (1)"]
    );
    for r in &reports[1..] {
        assert_eq!(r.rows, reports[0].rows);
        assert_eq!(r.aggregate, reports[0].aggregate);
    }
    assert!(read(cfg.output_dir.join("robustness.md")).contains("| JPEG (70) |"));
}

#[test]
fn robustness_without_features_fails() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let cfg = config(&manifest, &dir.path().join("out"));
    let err = robustness_sweep(&cfg, &["jpeg:70".parse().unwrap()]).unwrap_err();
    assert!(err.to_string().contains("no pre-extracted features for jpeg:70"), "{err}");
    assert_eq!(err.exit_code(), 3);
}
