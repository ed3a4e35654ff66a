use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lbm-lab"));
    cmd.env_remove("LBM_CACHE_DIR");
    cmd
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn gamma_zero_suite_passes() {
    let out = tempfile::tempdir().unwrap();
    let run = lab()
        .args(["gamma-zero-suite", "--config"])
        .arg(configs().join("gamma-zero-suite.toml"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert_eq!(run.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("PASS exit-moments/mean exit r=1"));
    assert!(!stdout.contains("FAIL"));
    for file in ["gamma-zero-suite.summary.json", "gamma-zero-suite.timing.json", "gamma-zero-suite.kernel.csv"] {
        assert!(out.path().join(file).is_file(), "missing {file}");
    }
}

#[test]
fn out_of_range_gamma_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "campaign = \"field-sample\"\ngamma = 2.5\n").unwrap();
    let run = lab().args(["field-sample", "--config"]).arg(&config).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("0 <= gamma < 2"));
}

#[test]
fn unknown_config_key_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "gamma = 0.5\nlayers = 3\n").unwrap();
    let run = lab().args(["ondiag", "--config"]).arg(&config).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn csv_only_output() {
    let out = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(
        &config,
        "fields = 2\n[grid]\nhalf_width = 2.0\nn = 32\n[schedule]\nkind = \"dyadic\"\nlayers = 2\n",
    )
    .unwrap();
    let run = lab()
        .args(["field-sample", "--format", "csv", "--seed", "7", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(matches!(run.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&run.stderr));
    let names: Vec<String> = std::fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".csv")));
    assert!(!names.iter().any(|n| n.ends_with(".json") && !n.ends_with(".summary.json") && !n.ends_with(".timing.json")));
}
