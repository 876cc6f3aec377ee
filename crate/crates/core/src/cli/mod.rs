//! The `advmod` command line: train, eval, gradcheck and sweep-levels.

mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use manifest::{sha256_hex, FileEntry, RunManifest, Seeds};

use crate::channel::{ChannelFamily, ChannelKind};
use crate::error::{Error, Result};
use crate::eval::{
    correctness_mask, hard_decision_eve, harden_predictions, observe, parse_snr_spec, snr_sweep,
    write_constellation, Histogram, CIPHER_RANGE, DEFAULT_BINS, PREDICTION_RANGE,
};
use crate::gradcheck::{run_gradcheck, GradcheckOptions, TOLERANCE};
use crate::nn::{load_network, save_network, Role};
use crate::numerics::{streams, RngStream};
use crate::train::{test_set, AliceOutput, LossHistory, Parties, Trainer, TrainingConfig};

pub const SEED_OVERRIDE_VAR: &str = "ADVMOD_SEED_OVERRIDE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_CHECKPOINT: i32 = 4;
pub const EXIT_GRADCHECK: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "advmod", version, about = "Adversarially trained secure modulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train Alice, Bob and Eve and write checkpoints plus the loss history.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep SNR on the held-out test set and export BER, histograms and the constellation.
    Eval {
        /// Directory holding alice.json, bob.json, eve.json and the training manifest.
        #[arg(long)]
        model: PathBuf,
        /// Channel family; defaults to the one the model was trained on.
        #[arg(long)]
        channel: Option<ChannelFamily>,
        /// `start:stop:step` in dB, inclusive.
        #[arg(long, default_value = "0:40:5")]
        snr: String,
        /// Config overriding the one recorded in the model's manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every layer's backward pass against central finite differences.
    Gradcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Train one system per quantization level count.
    SweepLevels {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Maps a library error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFiniteLoss { .. } => EXIT_NON_FINITE,
        Error::Checkpoint { .. } => EXIT_CHECKPOINT,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train { config, out } => cmd_train(&config, &out).map(|_| EXIT_OK),
        Command::Eval {
            model,
            channel,
            snr,
            config,
            out,
        } => cmd_eval(&model, channel, &snr, config.as_deref(), &out).map(|_| EXIT_OK),
        Command::Gradcheck { inject_fault } => cmd_gradcheck(inject_fault),
        Command::SweepLevels { config, levels, out } => {
            cmd_sweep_levels(&config, &levels, &out).map(|_| EXIT_OK)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_OVERRIDE_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_OVERRIDE_VAR} must be an integer, got {v:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{SEED_OVERRIDE_VAR}: {e}"))),
    }
}

/// Loads and validates a config, applying the seed override if set.
pub fn resolve_config(path: &Path) -> Result<(TrainingConfig, Option<u64>)> {
    let mut config = TrainingConfig::load(path)?;
    let seed = seed_override()?;
    if let Some(s) = seed {
        config.override_seeds(s);
    }
    Ok((config, seed))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn checkpoint_name(role: Role) -> String {
    format!("{}.json", role.name())
}

fn save_parties(parties: &Parties, dir: &Path, prefix: &str, written: &mut Vec<String>) -> Result<()> {
    for role in Role::ALL {
        let rel = format!("{prefix}{}", checkpoint_name(role));
        save_network(parties.network(role), &dir.join(&rel))?;
        written.push(rel);
    }
    Ok(())
}

fn load_parties(dir: &Path) -> Result<Parties> {
    let load = |role: Role| -> Result<_> {
        let path = dir.join(checkpoint_name(role));
        let net = load_network(&path)?;
        if net.role() != role {
            return Err(Error::Checkpoint {
                path: path.clone(),
                reason: format!("holds a {} network", net.role()),
            });
        }
        Ok(net)
    };
    let parties = Parties {
        alice: load(Role::Alice)?,
        bob: load(Role::Bob)?,
        eve: load(Role::Eve)?,
    };
    if parties.bob.n() != parties.alice.n() || parties.eve.n() != parties.alice.n() {
        return Err(Error::Checkpoint {
            path: dir.to_path_buf(),
            reason: format!(
                "block lengths differ: alice {}, bob {}, eve {}",
                parties.alice.n(),
                parties.bob.n(),
                parties.eve.n()
            ),
        });
    }
    Ok(parties)
}

fn train_with_progress(config: &TrainingConfig, label: &str) -> Result<(Parties, LossHistory)> {
    let epochs = config.resolved_epochs();
    let every = (epochs / 10).max(1);
    let mut trainer = Trainer::new(config)?;
    let history = trainer.run(epochs, |r| {
        if r.epoch % every == 0 || r.epoch == epochs {
            eprintln!(
                "{label}epoch {:>5}/{epochs}  L_B {:.4}  L_E {:.4}  L_E_N {:.4}  joint {:.4}",
                r.epoch, r.loss_bob, r.loss_eve, r.loss_eve_norm, r.joint
            );
        }
    })?;
    Ok((trainer.into_parties(), history))
}

pub fn cmd_train(config_path: &Path, out: &Path) -> Result<()> {
    let started = manifest::timestamp();
    let (config, overridden) = resolve_config(config_path)?;
    create_dir(out)?;
    let (parties, history) = train_with_progress(&config, "")?;
    let mut written = Vec::new();
    save_parties(&parties, out, "", &mut written)?;
    history.write_csv(&out.join("loss_history.csv"))?;
    written.push("loss_history.csv".into());
    RunManifest::new("train", &config, overridden, started).finish(out, "manifest.json", &written)?;
    println!("wrote {} files to {}", written.len() + 1, out.display());
    Ok(())
}

/// Config for evaluating `model`: an explicit file, else the training
/// manifest stored beside the checkpoints.
fn eval_config(model: &Path, config: Option<&Path>) -> Result<(TrainingConfig, Option<u64>)> {
    if let Some(path) = config {
        return resolve_config(path);
    }
    let path = model.join("manifest.json");
    let m = RunManifest::load(&path).map_err(|e| Error::Checkpoint {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    m.config.validate()?;
    Ok((m.config, m.seeds.overridden_by))
}

pub fn cmd_eval(
    model: &Path,
    channel: Option<ChannelFamily>,
    snr_spec: &str,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let started = manifest::timestamp();
    let (config, overridden) = eval_config(model, config)?;
    let parties = load_parties(model)?;
    if parties.alice.n() != config.n {
        return Err(Error::Checkpoint {
            path: model.to_path_buf(),
            reason: format!("networks have N={}, config N={}", parties.alice.n(), config.n),
        });
    }
    let family = channel.unwrap_or(config.channel);
    let snrs = if family == ChannelFamily::Clear {
        Vec::new()
    } else {
        parse_snr_spec(snr_spec)?
    };
    let test = test_set(&config)?;
    let fading = config.fading();
    let table = snr_sweep(&parties, family, &snrs, &test, &fading, config.test_data_seed)?;

    create_dir(out)?;
    let mut written = Vec::new();
    let mut put = |name: &str| -> PathBuf {
        written.push(name.to_string());
        out.join(name)
    };
    table.write_csv(&put("ber_sweep.csv"))?;

    // Distributions at the training SNR.
    let kind: ChannelKind = family.at_snr(config.train_snr_db);
    let mut rng = RngStream::derive(config.test_data_seed, streams::CHANNEL, u32::MAX as u64);
    let o = observe(&parties, &test, kind, &fading, &mut rng)?;
    write_constellation(&o.cipher, &put("constellation.csv"))?;
    let p = &test.plaintext;
    let bob_mask = correctness_mask(&harden_predictions(&o.p_bob), p)?;
    Histogram::build(o.p_bob.data(), &bob_mask, DEFAULT_BINS, PREDICTION_RANGE)?
        .write_csv(&put("hist_bob.csv"))?;
    let eve_mask = correctness_mask(&harden_predictions(&o.p_eve), p)?;
    Histogram::build(o.p_eve.data(), &eve_mask, DEFAULT_BINS, PREDICTION_RANGE)?
        .write_csv(&put("hist_eve.csv"))?;
    let cipher_mask = correctness_mask(&hard_decision_eve(&o.cipher), p)?;
    Histogram::build(o.cipher.data(), &cipher_mask, DEFAULT_BINS, CIPHER_RANGE)?
        .write_csv(&put("hist_cipher.csv"))?;

    let mut m = RunManifest::new("eval", &config, overridden, started);
    m.command = format!("eval {} snr {snr_spec}", family.name());
    m.finish(out, "eval_manifest.json", &written)?;

    println!("{:>8}  {:>8}  {:>12}  {:>17}", "snr_db", "ber_bob", "ber_eve", "ber_hard_decision");
    for r in &table.rows {
        let snr = r.snr_db.map_or("-".to_string(), |s| s.to_string());
        println!(
            "{snr:>8}  {:>8.4}  {:>12.4}  {:>17.4}",
            r.ber_bob, r.ber_eve_trained, r.ber_eve_hard_decision
        );
    }
    Ok(())
}

pub fn cmd_gradcheck(inject_fault: Option<String>) -> Result<i32> {
    let report = run_gradcheck(&GradcheckOptions {
        fault: inject_fault,
        seed: 0,
    })?;
    for r in &report.results {
        println!("{r}");
    }
    if report.passed() {
        println!("all {} checks below {TOLERANCE:e}", report.results.len());
        Ok(EXIT_OK)
    } else {
        for r in report.failures() {
            eprintln!(
                "gradcheck failed: {} at {} (rel err {:.3e})",
                r.layer, r.coordinate, r.worst_rel_error
            );
        }
        Ok(EXIT_GRADCHECK)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelsRow {
    #[serde(rename = "L")]
    pub levels: usize,
    pub final_loss_bob: Option<f64>,
    pub final_loss_eve: Option<f64>,
    pub ber_bob: f64,
    pub ber_eve: f64,
}

/// Config for one sweep leg: Alice always quantizes, with `levels` levels.
pub fn levels_leg_config(base: &TrainingConfig, levels: usize) -> TrainingConfig {
    TrainingConfig {
        levels,
        alice_output: AliceOutput::TanhDiscrete,
        ..base.clone()
    }
}

pub fn cmd_sweep_levels(config_path: &Path, levels: &[usize], out: &Path) -> Result<()> {
    let started = manifest::timestamp();
    let (base, overridden) = resolve_config(config_path)?;
    if let Some(&bad) = levels.iter().find(|&&l| l < 2) {
        return Err(Error::Config(format!("levels must all be >= 2, got {bad}")));
    }
    create_dir(out)?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for &l in levels {
        let config = levels_leg_config(&base, l);
        config.validate()?;
        let (parties, history) = train_with_progress(&config, &format!("[L={l}] "))?;
        let leg = format!("L{l}");
        create_dir(&out.join(&leg))?;
        save_parties(&parties, out, &format!("{leg}/"), &mut written)?;
        let rel = format!("{leg}/loss_history.csv");
        history.write_csv(&out.join(&rel))?;
        written.push(rel);

        let test = test_set(&config)?;
        let mut rng = RngStream::derive(config.test_data_seed, streams::CHANNEL, 0);
        let o = observe(&parties, &test, config.train_channel(), &config.fading(), &mut rng)?;
        rows.push(LevelsRow {
            levels: l,
            final_loss_bob: history.last().map(|r| r.loss_bob),
            final_loss_eve: history.last().map(|r| r.loss_eve),
            ber_bob: o.ber_bob,
            ber_eve: o.ber_eve_trained,
        });
    }
    let mut w = csv::Writer::from_path(out.join("levels_sweep.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&out.join("levels_sweep.csv"), e))?;
    drop(w);
    written.push("levels_sweep.csv".into());
    RunManifest::new("sweep-levels", &base, overridden, started).finish(out, "manifest.json", &written)?;
    for r in &rows {
        println!("L={:>3}  ber_bob {:.4}  ber_eve {:.4}", r.levels, r.ber_bob, r.ber_eve);
    }
    Ok(())
}
