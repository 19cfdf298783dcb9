use std::fs;
use std::path::Path;

use clap::Parser;
use probqual::cli::{execute, run, Cli, RunManifest};
use tempfile::TempDir;

fn go(out: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["probqual".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.push("--out-dir".into());
    full.push(out.display().to_string());
    run(full)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Header plus records, split on commas (no field here contains one).
fn table(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn metric(path: &Path, name: &str) -> String {
    table(path).into_iter().find(|r| r[0] == name).unwrap()[1].clone()
}

#[test]
fn toy_default_writes_tables_and_manifest() {
    let d = TempDir::new().unwrap();
    assert_eq!(go(d.path(), &["toy"]), 0);
    for f in ["toy_strings.csv", "toy_corpora.csv", "toy_summary.csv", "manifest.json"] {
        assert!(d.path().join(f).exists(), "{f} missing");
    }
    let m = manifest(d.path());
    assert_eq!(m.command, "toy");
    assert_eq!(m.outputs.len(), 3);
    assert_eq!(table(&d.path().join("toy_strings.csv")).len(), 1001);
    assert_eq!(metric(&d.path().join("toy_summary.csv"), "verdict"), "paradox");
}

#[test]
fn toy_is_deterministic_under_a_seed() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["toy", "--seed", "7", "--corpora", "40", "--corpus-size", "500"];
    assert_eq!(go(a.path(), &args), 0);
    assert_eq!(go(b.path(), &args), 0);
    assert_eq!(manifest(a.path()).outputs, manifest(b.path()).outputs);
    assert_eq!(manifest(a.path()).seed, 7);
}

#[test]
fn toy_row_count_follows_corpora() {
    let d = TempDir::new().unwrap();
    assert_eq!(go(d.path(), &["toy", "--corpora", "200", "--corpus-size", "10000"]), 0);
    assert_eq!(table(&d.path().join("toy_corpora.csv")).len(), 201);
}

#[test]
fn toy_rejects_invalid_settings() {
    let d = TempDir::new().unwrap();
    assert_eq!(go(d.path(), &["toy", "--tau=-1"]), 2);
    assert_eq!(go(d.path(), &["toy", "--corpus-size", "10"]), 2);
    assert_eq!(go(d.path(), &["toy", "--no-such-flag"]), 2);
}

#[test]
fn flags_override_config_and_manifest_replays() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("toy.toml");
    fs::write(&cfg, "tau = 3.0\ncorpora = 20\ncorpus_size = 300\nseed = 4\n").unwrap();
    let first = d.path().join("first");
    assert_eq!(go(&first, &["toy", "--config", cfg.to_str().unwrap(), "--corpora", "30"]), 0);
    let m = manifest(&first);
    assert_eq!(m.config["corpora"], 30);
    assert_eq!(m.config["tau"], 3.0);
    assert_eq!(m.seed, 4);

    let again = d.path().join("again");
    let replay = first.join("manifest.json");
    assert_eq!(go(&again, &["toy", "--config", replay.to_str().unwrap()]), 0);
    assert_eq!(manifest(&again).outputs, m.outputs);
    assert_eq!(go(&again, &["sweep", "--config", replay.to_str().unwrap()]), 2);
}

#[test]
fn sweep_rows_and_order() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["sweep", "--corpus-size", "2000", "--resamples", "3"];
    assert_eq!(go(a.path(), &args), 0);
    assert_eq!(go(b.path(), &args), 0);
    let rows = table(&a.path().join("sweep.csv"));
    assert_eq!(rows.len(), 27);
    assert_eq!(rows[1][0], "ancestral");
    assert_eq!(rows[1][4], "1");
    assert_eq!(manifest(a.path()).outputs, manifest(b.path()).outputs);
}

#[test]
fn sweep_names_the_bad_adaptor() {
    let d = TempDir::new().unwrap();
    let out = d.path().display().to_string();
    let cli = Cli::try_parse_from(["probqual", "sweep", "--adaptor", "nucleus:pi=1.5", "--out-dir", &out]).unwrap();
    let err = execute(cli).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("nucleus:pi=1.5"), "{err}");
    assert_eq!(
        go(
            d.path(),
            &[
                "sweep",
                "--adaptor",
                "nucleus:pi=0.95",
                "--temperatures",
                "1",
                "--resamples",
                "2",
                "--corpus-size",
                "500"
            ]
        ),
        0
    );
    assert_eq!(table(&d.path().join("sweep.csv")).len(), 3);
}

#[test]
fn aep_table_contract() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["aep", "--epsilons", "0.1,0.5", "--sizes", "50,200", "--trials", "100", "--seed", "3"];
    assert_eq!(go(a.path(), &args), 0);
    assert_eq!(go(b.path(), &args), 0);
    assert_eq!(table(&a.path().join("aep.csv")).len(), 5);
    assert_eq!(manifest(a.path()).outputs, manifest(b.path()).outputs);
    assert_eq!(go(a.path(), &["aep", "--trials", "0"]), 2);
}

#[test]
fn aep_chernoff_column_only_when_certified() {
    let d = TempDir::new().unwrap();
    let model = d.path().join("geo.toml");
    fs::write(&model, "kind = \"autoregressive\"\nalphabet = [\"a\"]\neos = \"$\"\norder = 0\n[[row]]\ncontext = []\nprobs = { a = 0.5, \"$\" = 0.5 }\n").unwrap();
    let args = ["aep", "--model", model.to_str().unwrap(), "--epsilons", "0.5", "--sizes", "100", "--trials", "50"];
    assert_eq!(go(d.path(), &args), 0);
    assert_eq!(table(&d.path().join("aep.csv"))[0].last().unwrap(), "chernoff");
    assert_eq!(manifest(d.path()).inputs.len(), 1);

    assert_eq!(go(d.path(), &["aep", "--epsilons", "0.5", "--sizes", "100", "--trials", "50"]), 0);
    assert_eq!(table(&d.path().join("aep.csv"))[0].last().unwrap(), "chebyshev");
    assert!(!manifest(d.path()).notes.is_empty());
}

fn last_step(dir: &Path, order: &str) -> (f64, f64) {
    let rows = table(&dir.join("inspect.csv"));
    let r = rows.iter().rfind(|r| r[0] == order).unwrap();
    (r[8].parse::<f64>().unwrap().exp(), r[9].parse::<f64>().unwrap().exp())
}

#[test]
fn inspect_reversal_example() {
    let d = TempDir::new().unwrap();
    assert_eq!(go(d.path(), &["inspect", "--adaptor", "topk:k=2", "--string", "aaa"]), 0);
    let (local, global) = last_step(d.path(), "scale-first");
    assert!((local - 0.0625).abs() < 1e-9);
    assert!((global - 0.032).abs() < 1e-9);

    assert_eq!(go(d.path(), &["inspect", "--adaptor", "topk:k=2", "--string", "bbb", "--both-orders"]), 0);
    let (local, global) = last_step(d.path(), "truncate-first");
    assert!((local - 24.0 / 343.0).abs() < 1e-9);
    assert!((global - 0.024).abs() < 1e-9);
}

#[test]
fn inspect_ancestral_matches_prior() {
    let d = TempDir::new().unwrap();
    assert_eq!(go(d.path(), &["inspect", "--adaptor", "ancestral", "--string", "abca"]), 0);
    let (local, global) = last_step(d.path(), "scale-first");
    let prior = 0.5 * 0.1 * 0.2 * 0.4 * 0.4;
    assert!((local - prior).abs() < 1e-12);
    assert!((global - prior).abs() < 1e-12);
    assert_eq!(go(d.path(), &["inspect", "--string", "abz"]), 2);
    assert_eq!(go(d.path(), &["inspect"]), 2);
}

#[test]
fn imha_runs_and_flags_degenerate_adaptors() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["imha", "--steps", "5000", "--write-chain"];
    assert_eq!(go(a.path(), &args), 0);
    assert_eq!(go(b.path(), &args), 0);
    assert_eq!(manifest(a.path()).outputs, manifest(b.path()).outputs);
    assert_eq!(table(&a.path().join("imha_chain.csv")).len(), 5001);

    assert_eq!(go(a.path(), &["imha", "--adaptor", "ancestral", "--steps", "2000"]), 0);
    assert_eq!(metric(&a.path().join("imha_summary.csv"), "acceptance_rate"), "1");
    // top-1 follows `a` forever and never emits EOS
    assert_eq!(go(a.path(), &["imha", "--adaptor", "topk:k=1"]), 3);
}
