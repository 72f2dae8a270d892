//! The command line, in-process through `execute` and as a child process.

use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use clap::Parser;
use gmvae_core::cli::{
    execute, Cli, EXIT_CRITERIA, EXIT_OK, EXIT_OPERATIONAL, GEOMETRY_CSV_HEADER,
    TRAVERSE_CSV_HEADER,
};
use gmvae_core::data::{read_gmimg, save_checkpoint, write_idx_file, IdxImageSet};
use gmvae_core::vae::TrainState;

fn exec(args: &[&str]) -> (gmvae_core::Result<i32>, String) {
    let cli = Cli::try_parse_from(std::iter::once("gmvae").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let code = execute(&cli.command, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Tiny 4×4 images and a run config pointing at them.
fn tiny_run(dir: &Path, extra_model: &str) -> PathBuf {
    let pix = |n: usize| {
        (0..n * 16)
            .map(|i| if (i / 16 + i) % 3 == 0 { 230 } else { 10 })
            .collect()
    };
    write_idx_file(
        dir.join("train.idx.gz"),
        &IdxImageSet::new(30, 4, 4, pix(30)).unwrap(),
        true,
    )
    .unwrap();
    write_idx_file(
        dir.join("test.idx"),
        &IdxImageSet::new(8, 4, 4, pix(8)).unwrap(),
        false,
    )
    .unwrap();
    let cfg = format!(
        r#"{{
  "model": {{"n_factors": 2, "curvature": 1.0, "hidden": 8, "input_dim": 16, "batch_size": 10, "epochs": 3, "seed": 5{extra_model}}},
  "data": {{"train_images": "train.idx.gz", "test_images": "test.idx"}},
  "output_dir": "out",
  "checkpoint_every": 2,
  "iwae_k": 5
}}"#
    );
    let p = dir.join("run.json");
    std::fs::write(&p, cfg).unwrap();
    p
}

#[test]
fn verify_geometry_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let (code, text) = exec(&[
        "verify-geometry",
        "--pairs",
        "10",
        "--curvatures",
        "1.0",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code.unwrap(), EXIT_OK, "{text}");
    let body = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], GEOMETRY_CSV_HEADER);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1,10,"));
}

#[test]
fn train_eval_traverse_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_run(dir.path(), "");
    let (code, _) = exec(&["train", "--config", s(&cfg)]);
    assert_eq!(code.unwrap(), EXIT_OK);
    let out = dir.path().join("out");
    let ck = out.join("checkpoints/checkpoint-0003.gmvae");
    assert!(ck.exists() && out.join("checkpoints/checkpoint-0002.gmvae").exists());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * 3);

    let report = dir.path().join("eval.json");
    let (code, text) = exec(&[
        "eval",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&ck),
        "--threads",
        "2",
        "--out",
        s(&report),
    ]);
    assert_eq!(code.unwrap(), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["examples"], 8);
    assert_eq!(v["iwae_k"], 5);
    assert!(v["nll"].as_f64().unwrap().is_finite() && v["nll"].as_f64().unwrap() > 0.0);
    assert!(report.exists());

    let tdir = dir.path().join("trav");
    let (code, _) = exec(&[
        "traverse",
        "--checkpoint",
        s(&ck),
        "--factor",
        "1",
        "--steps",
        "7",
        "--config",
        s(&cfg),
        "--index",
        "3",
        "--out",
        s(&tdir),
    ]);
    assert_eq!(code.unwrap(), EXIT_OK);
    let csv = std::fs::read_to_string(tdir.join("traverse.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(csv.lines().next(), Some(TRAVERSE_CSV_HEADER));
    assert_eq!(rows.len(), 7);
    assert!(
        rows.windows(2).all(|w| w[1][3] > w[0][3]),
        "σ must grow along the walk"
    );
    assert!(rows.iter().all(|r| (r[2] - rows[0][2]).abs() < 1e-9));
    let grid = read_gmimg(tdir.join("traverse.gmimg")).unwrap();
    assert_eq!((grid.rows, grid.height, grid.width), (7, 4, 4));
    assert!(exec(&["traverse", "--checkpoint", s(&ck), "--factor", "2"])
        .0
        .is_err());

    let img = dir.path().join("prior.gmimg");
    let (code, _) = exec(&[
        "sample-prior",
        "--checkpoint",
        s(&ck),
        "--n",
        "5",
        "--out",
        s(&img),
    ]);
    assert_eq!(code.unwrap(), EXIT_OK);
    let grid = read_gmimg(&img).unwrap();
    assert_eq!(grid.values.len(), 5 * 16);
    assert!(grid.values.iter().all(|&p| (0.0..=1.0).contains(&p)));

    // Resuming with a changed architecture is refused.
    let other = dir.path().join("other.json");
    std::fs::write(
        &other,
        std::fs::read_to_string(&cfg)
            .unwrap()
            .replace("\"hidden\": 8", "\"hidden\": 9"),
    )
    .unwrap();
    assert!(exec(&["train", "--config", s(&other), "--resume", s(&ck)])
        .0
        .is_err());
}

#[test]
fn untrained_checkpoint_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_run(dir.path(), r#", "kind": "euclidean""#);
    let run = gmvae_core::cli::RunConfigFile::load(&cfg).unwrap();
    let ck = dir.path().join("fresh.gmvae");
    save_checkpoint(&TrainState::new(run.model).unwrap(), &ck).unwrap();
    let (code, text) = exec(&["eval", "--config", s(&cfg), "--checkpoint", s(&ck)]);
    assert_eq!(code.unwrap(), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["nll"].as_f64().unwrap().is_finite());
}

#[test]
fn unknown_config_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_run(dir.path(), r#", "dropout": 0.1"#);
    assert!(exec(&["train", "--config", s(&cfg)]).0.is_err());
}

fn bin(args: &[&str]) -> i32 {
    Proc::new(env!("CARGO_BIN_EXE_gmvae"))
        .args(args)
        .env_remove("GMVAE_SEED")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn process_exit_codes() {
    assert_eq!(
        bin(&["verify-geometry", "--pairs", "5", "--curvatures", "0.5,2"]),
        EXIT_OK
    );
    assert_eq!(bin(&["--help"]), EXIT_OK);
    assert_eq!(bin(&["no-such-command"]), EXIT_OPERATIONAL);
    assert_eq!(
        bin(&["verify-geometry", "--pairs", "many"]),
        EXIT_OPERATIONAL
    );
    assert_eq!(
        bin(&["train", "--config", "/nonexistent/run.json"]),
        EXIT_OPERATIONAL
    );
    assert_ne!(EXIT_CRITERIA, EXIT_OPERATIONAL);
}
