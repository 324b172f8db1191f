mod common;

use std::path::Path;
use std::process::Command;

use common::{read, write_bench};

fn fgts(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fgts")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let (code, stdout, _) = fgts(&["validate", "--manifest", s(&manifest)]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("0 errors"));

    let victim = dir.path().join("data/features/eval-real-00000.fgts");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..bytes.len() - 3]).unwrap();
    let (code, stdout, _) = fgts(&["validate", "--manifest", s(&manifest)]);
    assert_eq!(code, 2);
    assert!(stdout.contains("truncated payload"), "{stdout}");
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "reference = \"data/manifest.jsonl\"\noutput_dir = \"runs/a\"\n[selection]\nk = 5\n").unwrap();
    let (code, stdout, stderr) = fgts(&["eval", "--config", s(&cfg), "--k", "7", "--seed", "3"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("K = 7"), "{stdout}");
    assert!(dir.path().join("runs/a/report.md").exists());
    let _ = manifest;
}

#[test]
fn bad_config_and_stage_failure_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let (code, _, stderr) = fgts(&["eval", "--reference", s(&manifest), "--protocol", "svm"]);
    assert_eq!(code, 2, "{stderr}");
    let out = dir.path().join("o");
    let (code, _, stderr) = fgts(&[
        "eval", "--reference", s(&manifest), "--out", s(&out), "--reference-generators", "gen_b",
    ]);
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("[rank]"));
}

#[test]
fn fit_then_classify_matches_eval_scores() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let out = dir.path().join("run");
    let (code, _, e) = fgts(&["eval", "--reference", s(&manifest), "--out", s(&out), "--protocol", "probe", "--epochs", "3"]);
    assert_eq!(code, 0, "{e}");
    let fit_out = dir.path().join("fit");
    let (code, _, e) = fgts(&["fit", "--reference", s(&manifest), "--out", s(&fit_out), "--protocol", "probe", "--epochs", "3"]);
    assert_eq!(code, 0, "{e}");
    assert_eq!(read(out.join("model.json")), read(fit_out.join("model.json")));
    let scores = dir.path().join("scores.csv");
    let (code, _, e) = fgts(&["classify", "--model", s(&fit_out.join("model.json")), "--manifest", s(&manifest), "--out", s(&scores)]);
    assert_eq!(code, 0, "{e}");
    assert_eq!(read(&scores), read(out.join("scores.csv")));
    let (code, table, _) = fgts(&["report", "--scores", s(&scores)]);
    assert_eq!(code, 0);
    assert!(table.contains("| gen_a |"));
}

#[test]
fn perturb_and_spectrum_commands() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    for name in ["a", "b"] {
        let img = image::RgbImage::from_fn(32, 32, |x, y| image::Rgb([(x * 8) as u8, (y * 8) as u8, 128]));
        img.save(input.join(format!("{name}.png"))).unwrap();
    }
    let run = |kind: &str, params: &[&str], out: &Path, seed: &str| {
        let mut args = vec!["perturb", "--kind", kind, "--in", s(&input), "--out", s(out), "--seed", seed];
        for p in params {
            args.extend(["--param", p]);
        }
        fgts(&args)
    };
    let o1 = dir.path().join("m1");
    let o2 = dir.path().join("m2");
    assert_eq!(run("mask", &["0.5"], &o1, "4").0, 0);
    assert_eq!(run("mask", &["0.5"], &o2, "4").0, 0);
    for name in ["a.png", "b.png"] {
        assert_eq!(std::fs::read(o1.join(name)).unwrap(), std::fs::read(o2.join(name)).unwrap());
    }
    // per-image streams differ
    let a = image::open(o1.join("a.png")).unwrap().to_rgb8();
    let b = image::open(o1.join("b.png")).unwrap().to_rgb8();
    assert_ne!(a, b);
    let oj = dir.path().join("j");
    assert_eq!(run("jpeg", &["70"], &oj, "0").0, 0);
    assert!(oj.join("a.jpg").exists());
    assert_eq!(run("blur", &["1"], &oj, "0").0, 2);

    let csv = dir.path().join("spec.csv");
    let (code, _, e) = fgts(&["spectrum", "--in", s(&input.join("a.png")), "--out", s(&csv)]);
    assert_eq!(code, 0, "{e}");
    assert_eq!(read(&csv).lines().count(), 32);
}

#[test]
fn sweep_commands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_bench(dir.path());
    let out = dir.path().join("o");
    let (code, stdout, e) = fgts(&["sweep-topk", "--reference", s(&manifest), "--out", s(&out), "--ks", "10,196", "--random-seeds", "2"]);
    assert_eq!(code, 0, "{e}");
    assert!(stdout.contains("| 196 |"));
    let (code, _, e) = fgts(&[
        "sweep-robustness", "--reference", s(&manifest), "--out", s(&out),
        "--spec", "resize:1", "--perturbed", &format!("resize:1={}", s(&manifest)),
    ]);
    assert_eq!(code, 0, "{e}");
    let (code, table, _) = fgts(&["report", "--run", s(&out.join("robustness/clean")), "--run", s(&out.join("robustness/resize_1"))]);
    assert_eq!(code, 0);
    assert!(table.contains("Resize (1)"), "{table}");
}
