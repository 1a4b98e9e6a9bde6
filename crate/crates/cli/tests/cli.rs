use std::path::{Path, PathBuf};
use std::process::Command;

use finesdf_cli::stages::{cmd_gen, cmd_pretrain, cmd_probe, cmd_report, cmd_sdf, stage_dir};
use finesdf_cli::{CliError, PipelineConfig, Stage};

fn tiny_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::crash_box_mini();
    cfg.grid.levels = 2;
    cfg.grid.test_fraction = 0.25;
    cfg.sampling.n_points = 2_000;
    cfg.training.iterations = 0;
    cfg.training.checkpoint_every = 0;
    cfg.eval.recon_resolution = 16;
    cfg.downstream.n_nodes = 20;
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn write_config(cfg: &PipelineConfig, dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn finesdf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_finesdf"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("FINESDF_THREADS")
        .output()
        .unwrap()
}

fn count_with_suffix(dir: &Path, suffix: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(suffix))
        .count()
}

#[test]
fn shipped_configs_match_the_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, preset) in [
        ("crash_box_mini.json", PipelineConfig::crash_box_mini()),
        ("bottle_mini.json", PipelineConfig::bottle_mini()),
    ] {
        assert_eq!(PipelineConfig::load(&root.join(file)).unwrap(), preset, "{file}");
    }
}

#[test]
fn gen_with_two_levels_writes_sixteen_geometries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let manifest = cmd_gen(&cfg).unwrap();
    let dir = stage_dir(&cfg, Stage::Gen);
    assert_eq!(count_with_suffix(&dir, ".obj"), 16);
    assert_eq!(count_with_suffix(&dir, ".graph.json"), 16);
    assert!(dir.join("manifest.json").exists());
    assert!(dir.join("config.json").exists());
    assert_eq!(manifest.config_hash, cfg.stage_hash(Stage::Gen));
}

#[test]
fn probe_runs_on_an_untrained_checkpoint_and_report_checks_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    cmd_gen(&cfg).unwrap();
    cmd_sdf(&cfg).unwrap();
    cmd_pretrain(&cfg).unwrap();
    cmd_probe(&cfg).unwrap();
    let probe = stage_dir(&cfg, Stage::Probe);
    for f in ["probe.json", "scatter.csv", "r2.csv", "latents.csv"] {
        assert!(probe.join(f).exists(), "{f}");
    }
    let summary = cmd_report(&cfg).unwrap().join("summary.md");
    assert!(std::fs::read_to_string(summary).unwrap().contains("Linear probe"));

    let mut changed = cfg.clone();
    changed.training.learning_rate *= 2.0;
    let err = cmd_report(&changed).unwrap_err();
    assert!(
        matches!(err, CliError::ConfigMismatch { ref stage, .. } if stage == "pretrain"),
        "{err}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn later_stages_require_earlier_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let err = cmd_sdf(&cfg).unwrap_err();
    assert!(matches!(err, CliError::MissingArtifact(_)), "{err}");
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(finesdf(&["--help"]).status.code(), Some(0));
    assert_eq!(finesdf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        finesdf(&["gen", "--config", "/nonexistent/config.json"]).status.code(),
        Some(1)
    );

    let cfg = tiny_config(&tmp.path().join("run"));
    let path = write_config(&cfg, tmp.path());
    let p = path.to_str().unwrap();
    assert_eq!(finesdf(&["probe", "--config", p]).status.code(), Some(2));
    assert_eq!(
        finesdf(&["gen", "--config", p, "--threads", "0"]).status.code(),
        Some(1)
    );

    let mut bad = cfg.clone();
    bad.training.n_random = bad.training.n_coords + 1;
    let bad_path = tmp.path().join("bad.json");
    std::fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
    assert_eq!(
        finesdf(&["gen", "--config", bad_path.to_str().unwrap()]).status.code(),
        Some(1)
    );

    let mut diverge = cfg.clone();
    diverge.training.iterations = 50;
    diverge.training.learning_rate = 1e30;
    std::fs::write(&path, serde_json::to_string(&diverge).unwrap()).unwrap();
    for stage in ["gen", "sdf"] {
        assert_eq!(
            finesdf(&[stage, "--config", p, "--threads", "1"]).status.code(),
            Some(0),
            "{stage}"
        );
    }
    let out = finesdf(&["pretrain", "--config", p, "--threads", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seed_and_out_flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&tmp.path().join("ignored"));
    let path = write_config(&cfg, tmp.path());
    let out = tmp.path().join("elsewhere");
    let status = finesdf(&[
        "gen",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ])
    .status;
    assert_eq!(status.code(), Some(0));
    let stored = PipelineConfig::load(&out.join("geometry").join("config.json")).unwrap();
    assert_eq!(stored.grid.seed, 9);
    assert_eq!(stored.training.seed, 9);
    assert!(!tmp.path().join("ignored").exists());
}
