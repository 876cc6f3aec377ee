use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use advmod::cli::RunManifest;
use advmod::nn::checkpoint::to_json;
use advmod::nn::Role;
use advmod::train::{Parties, TrainingConfig};

const TINY: &str = r#"{
  "n": 8, "train_symbols": 256, "test_symbols": 100, "batch_size": 32,
  "epochs": 4, "key_to_data_ratio": 0.1, "channel": "awgn", "train_snr_db": 20.0,
  "learning_rate": 0.003
}"#;

fn advmod(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_advmod"));
    cmd.args(args).env_remove("ADVMOD_SEED_OVERRIDE");
    if let Some(s) = env_seed {
        cmd.env("ADVMOD_SEED_OVERRIDE", s);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn train(config: &Path, out: &Path) -> Output {
    advmod(&["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], None)
}

#[test]
fn train_writes_all_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", TINY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&train(&cfg, &a)), 0);
    for f in ["alice.json", "bob.json", "eve.json", "loss_history.csv", "manifest.json"] {
        assert!(a.join(f).is_file(), "{f} missing");
    }
    let m = RunManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(m.files.len(), 4);
    assert!(m.stale_files(&a).is_empty());
    assert_eq!(m.seeds.init, 3);

    assert_eq!(code(&train(&cfg, &b)), 0);
    let history = fs::read(a.join("loss_history.csv")).unwrap();
    assert_eq!(history, fs::read(b.join("loss_history.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&history).lines().count(), 5);
    assert_eq!(fs::read(a.join("eve.json")).unwrap(), fs::read(b.join("eve.json")).unwrap());

    // rerunning into the same directory overwrites deterministically
    assert_eq!(code(&train(&cfg, &a)), 0);
    assert_eq!(history, fs::read(a.join("loss_history.csv")).unwrap());
}

#[test]
fn zero_epochs_write_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let json = TINY.replace("\"epochs\": 4", "\"epochs\": 0");
    let cfg = write_config(dir.path(), "zero.json", &json);
    let out = dir.path().join("out");
    assert_eq!(code(&train(&cfg, &out)), 0);
    let fresh = Parties::initialize(&TrainingConfig::from_json(&json).unwrap()).unwrap();
    for role in Role::ALL {
        let on_disk = fs::read_to_string(out.join(format!("{}.json", role.name()))).unwrap();
        assert_eq!(on_disk, to_json(fresh.network(role)).unwrap());
    }
    let history = fs::read_to_string(out.join("loss_history.csv")).unwrap();
    assert_eq!(history, "epoch,loss_bob,loss_eve,loss_eve_norm,joint\n");
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", TINY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| vec!["train".to_string(), "--config".into(), cfg.display().to_string(), "--out".into(), out.display().to_string()];
    let aa = args(&a);
    let ba = args(&b);
    assert_eq!(code(&advmod(&aa.iter().map(String::as_str).collect::<Vec<_>>(), Some("77"))), 0);
    assert_eq!(code(&advmod(&ba.iter().map(String::as_str).collect::<Vec<_>>(), None)), 0);
    let m = RunManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(m.seeds.overridden_by, Some(77));
    assert_eq!((m.seeds.data, m.seeds.key, m.seeds.init), (77, 77, 77));
    assert_ne!(
        fs::read(a.join("loss_history.csv")).unwrap(),
        fs::read(b.join("loss_history.csv")).unwrap()
    );
    let bad = advmod(&aa.iter().map(String::as_str).collect::<Vec<_>>(), Some("seven"));
    assert_eq!(code(&bad), 2);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, json) in [("odd.json", r#"{"n": 15}"#), ("junk.json", "not json")] {
        let cfg = write_config(dir.path(), name, json);
        assert_eq!(code(&train(&cfg, &out)), 2, "{name}");
    }
    assert_eq!(code(&train(&dir.path().join("missing.json"), &out)), 2);
    assert_eq!(code(&advmod(&["train"], None)), 2);
    assert_eq!(code(&advmod(&["frobnicate"], None)), 2);
}

#[test]
fn diverging_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let json = TINY.replace("\"learning_rate\": 0.003", "\"learning_rate\": 1e300");
    let cfg = write_config(dir.path(), "boom.json", &json);
    let o = train(&cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch"));
}

#[test]
fn eval_sweeps_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", TINY);
    let model = dir.path().join("model");
    assert_eq!(code(&train(&cfg, &model)), 0);
    let out = dir.path().join("eval");
    let m = model.to_str().unwrap();
    let o = advmod(&["eval", "--model", m, "--snr", "0:40:5", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ber = fs::read_to_string(out.join("ber_sweep.csv")).unwrap();
    assert_eq!(ber.lines().count(), 10);
    assert!(ber.starts_with("snr_db,ber_bob,ber_eve_trained,ber_eve_hard_decision\n"));
    for f in ["constellation.csv", "hist_bob.csv", "hist_eve.csv", "hist_cipher.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let hist = fs::read_to_string(out.join("hist_bob.csv")).unwrap();
    assert_eq!(hist.lines().count(), 51);
    let em = RunManifest::load(&out.join("eval_manifest.json")).unwrap();
    assert_eq!(em.files.len(), 5);
    assert!(em.stale_files(&out).is_empty());

    // clear channel ignores the SNR list
    let clear = dir.path().join("clear");
    let o = advmod(&["eval", "--model", m, "--channel", "clear", "--snr", "0:40:5", "--out", clear.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(clear.join("ber_sweep.csv")).unwrap().lines().count(), 2);

    // deterministic
    let again = dir.path().join("again");
    advmod(&["eval", "--model", m, "--out", again.to_str().unwrap()], None);
    assert_eq!(ber, fs::read_to_string(again.join("ber_sweep.csv")).unwrap());

    let o = advmod(&["eval", "--model", m, "--snr", "0:40", "--out", again.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_rejects_missing_or_corrupt_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", TINY);
    let model = dir.path().join("model");
    assert_eq!(code(&train(&cfg, &model)), 0);
    let out = dir.path().join("eval");
    let run = |model: &Path| code(&advmod(&["eval", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap()], None));

    assert_eq!(run(&dir.path().join("nowhere")), 4);

    let broken = dir.path().join("broken");
    fs::create_dir(&broken).unwrap();
    for f in ["alice.json", "bob.json", "eve.json", "manifest.json"] {
        fs::copy(model.join(f), broken.join(f)).unwrap();
    }
    fs::write(broken.join("bob.json"), "{\"role\": \"bob\", \"n\": 8").unwrap();
    assert_eq!(run(&broken), 4);

    fs::copy(model.join("alice.json"), broken.join("bob.json")).unwrap();
    assert_eq!(run(&broken), 4);

    fs::remove_file(broken.join("eve.json")).unwrap();
    fs::copy(model.join("bob.json"), broken.join("bob.json")).unwrap();
    assert_eq!(run(&broken), 4);
}

#[test]
fn gradcheck_exit_codes() {
    let ok = advmod(&["gradcheck"], None);
    assert_eq!(code(&ok), 0);
    let text = String::from_utf8_lossy(&ok.stdout);
    for kind in ["fc", "conv1d(4,1,2,1)", "conv1d(2,2,4,2)", "conv1d(1,4,4,1)", "conv1d(1,4,1,1)", "sigmoid", "tanh ", "relu", "tanh_discrete"] {
        assert!(text.contains(kind), "{kind} not reported");
    }
    let bad = advmod(&["gradcheck", "--inject-fault", "conv1d(1,4,4,1)"], None);
    assert_eq!(code(&bad), 5);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("conv1d(1,4,4,1)"));
}

#[test]
fn sweep_levels_matches_standalone_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tiny.json", TINY);
    let out = dir.path().join("sweep");
    let o = advmod(
        &["sweep-levels", "--config", cfg.to_str().unwrap(), "--levels", "3,13", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("levels_sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "L,final_loss_bob,final_loss_eve,ber_bob,ber_eve");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,") && lines[2].starts_with("13,"));

    // the config is AWGN, so a standalone run already uses 13 levels
    let solo = dir.path().join("solo");
    assert_eq!(code(&train(&cfg, &solo)), 0);
    for f in ["alice.json", "loss_history.csv"] {
        assert_eq!(fs::read(solo.join(f)).unwrap(), fs::read(out.join("L13").join(f)).unwrap(), "{f}");
    }
    let m = RunManifest::load(&out.join("manifest.json")).unwrap();
    assert!(m.stale_files(&out).is_empty());
    assert_eq!(m.files.len(), 9);

    let bad = advmod(&["sweep-levels", "--config", cfg.to_str().unwrap(), "--levels", "1", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&bad), 2);
}
