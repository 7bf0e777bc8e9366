use std::path::Path;
use std::process::Command;

fn copg(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_copg"))
        .current_dir(dir)
        .args(args)
        .env_remove("COPG_WORKDIR")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SMALL: &str = r#"{
  "paths": { "workdir": "work" },
  "synthetic": {
    "graph": { "kind": "planted_partition", "n": 150, "clusters": 2, "p_in": 0.3, "p_out": 0.02 },
    "features": { "mode": "cluster_signal", "dim": 8, "noise": 0.3 },
    "seed": 4
  },
  "train": { "epochs": 3, "seeds": [0] }
}"#;

#[test]
fn bad_usage_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(copg(dir.path(), &["no-such-command"]).0, 1);
    assert_eq!(copg(dir.path(), &["train", "--model", "transformer"]).0, 1);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{ "split": { "ratio": 1.5 } }"#,
    )
    .unwrap();
    let (code, err) = copg(dir.path(), &["--config", "c.json", "validate-config"]);
    assert_eq!(code, 2, "{err}");
    std::fs::write(
        dir.path().join("c.json"),
        r#"{ "train": { "lr": "fast" } }"#,
    )
    .unwrap();
    assert_eq!(
        copg(dir.path(), &["--config", "c.json", "validate-config"]).0,
        2
    );
}

#[test]
fn stage_without_inputs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), SMALL).unwrap();
    let (code, err) = copg(
        dir.path(),
        &["--config", "c.json", "train", "--model", "sage"],
    );
    assert_eq!(code, 2, "{err}");
}

#[test]
fn stages_chain_and_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), SMALL).unwrap();
    for args in [
        &["synth"][..],
        &["split"],
        &["train", "--model", "sage"],
        &["evaluate", "--model", "sage"],
        &["report"],
    ] {
        let mut full = vec!["--config", "c.json"];
        full.extend_from_slice(args);
        let (code, err) = copg(dir.path(), &full);
        assert_eq!(code, 0, "{args:?}: {err}");
    }
    let metrics = std::fs::read_to_string(dir.path().join("work/report/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    assert!(metrics.lines().nth(1).unwrap().starts_with("sage,"));
}

#[test]
fn transductive_split_prints_banner() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), SMALL).unwrap();
    assert_eq!(copg(dir.path(), &["--config", "c.json", "synth"]).0, 0);
    let (code, err) = copg(
        dir.path(),
        &["--config", "c.json", "split", "--transductive"],
    );
    assert_eq!(code, 0);
    assert!(err.contains(copg::cli::stages::LEAKAGE_BANNER));
}

#[test]
fn version_lists_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_copg"))
        .arg("--version")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("COPG1"));
}
