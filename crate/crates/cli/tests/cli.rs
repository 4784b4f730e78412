use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[msa]
trials = 10
l0_grid_units = 6
k_max = 1
mass_per_grid_unit = 0.3
"#;

fn mpmsa(dir: &Path, args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mpmsa"));
    cmd.current_dir(dir).args(args).env_remove("MPMSA_SEED");
    if let Some(s) = seed_env {
        cmd.env("MPMSA_SEED", s);
    }
    cmd.output().unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = setup("[msa]\ntrials = \"many\"\n");
    let out = mpmsa(dir.path(), &["msa-run", "--config", "c.toml", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());

    let dir = setup("[msa]\nunknown_key = 1\n");
    let out = mpmsa(dir.path(), &["msa-run", "--config", "c.toml", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = setup(SMALL);
    assert_eq!(mpmsa(dir.path(), &["no-such-command"], None).status.code(), Some(2));
    assert_eq!(mpmsa(dir.path(), &["msa-run", "--trials", "x"], None).status.code(), Some(2));
    assert_eq!(mpmsa(dir.path(), &["msa-run", "--config", "c.toml", "--trials", "0", "--out", "o"], None).status.code(), Some(2));
}

#[test]
fn msa_run_writes_records_and_manifest() {
    let dir = setup(SMALL);
    let out = mpmsa(dir.path(), &["msa-run", "--config", "c.toml", "--out", "o", "--seed", "5"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    let jsonl = std::fs::read_to_string(o.join("msa.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    for key in ["op", "L", "n", "N", "h", "mass", "p", "trials", "successes", "point", "ci_lo", "ci_hi", "seed", "config_hash"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["seed"], 5);
    assert!(std::fs::read_to_string(o.join("msa.csv")).unwrap().starts_with("# config_hash="));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "msa-run");
    assert_eq!(manifest["config_hash"], first["config_hash"]);
    assert!(o.join("config.resolved.toml").exists());
}

#[test]
fn seed_environment_variable_is_used_and_overridden() {
    let seed_of = |dir: &Path, extra: &[&str], env: Option<&str>| {
        let mut args = vec!["msa-run", "--config", "c.toml", "--out", "o"];
        args.extend_from_slice(extra);
        let out = mpmsa(dir, &args, env);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.join("o/msa.jsonl")).unwrap();
        serde_json::from_str::<serde_json::Value>(text.lines().next().unwrap()).unwrap()["seed"].as_u64().unwrap()
    };
    let dir = setup(SMALL);
    assert_eq!(seed_of(dir.path(), &[], None), 0);
    assert_eq!(seed_of(dir.path(), &[], Some("17")), 17);
    assert_eq!(seed_of(dir.path(), &["--seed", "3"], Some("17")), 3);
    let out = mpmsa(dir.path(), &["msa-run", "--config", "c.toml", "--out", "o"], Some("abc"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = setup(SMALL);
    for (o, threads) in [("a", "1"), ("b", "3")] {
        let out = mpmsa(dir.path(), &["wegner", "--config", "c.toml", "--out", o, "--threads", threads, "--half-sides", "6,8"], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["wegner.jsonl", "wegner.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(file)).unwrap(), std::fs::read(dir.path().join("b").join(file)).unwrap());
    }
}
