use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, ChannelFamily, ChannelKind, FadingOptions};
use crate::error::{Error, Result};
use crate::eval::{ber, hard_decision_eve, harden_predictions};
use crate::nn::Role;
use crate::numerics::{streams, RngStream, Tensor};
use crate::train::{Batch, Parties};

/// Everything produced by one pass of a test set through the system.
#[derive(Debug, Clone)]
pub struct Observation {
    pub cipher: Tensor,
    pub received: Tensor,
    pub p_bob: Tensor,
    pub p_eve: Tensor,
    pub ber_bob: f64,
    pub ber_eve_trained: f64,
    pub ber_eve_hard_decision: f64,
}

fn check_parties(parties: &Parties, n: usize) -> Result<()> {
    for role in Role::ALL {
        let net = parties.network(role);
        if net.role() != role || net.n() != n {
            return Err(Error::InvalidArgument(format!(
                "{role} slot holds a {} network with N={}, test set has N={n}",
                net.role(),
                net.n()
            )));
        }
    }
    Ok(())
}

/// Runs `test` through Alice, the channel, Bob, trained Eve and the
/// hard-decision Eve.
pub fn observe(
    parties: &Parties,
    test: &Batch,
    kind: ChannelKind,
    fading: &FadingOptions,
    rng: &mut RngStream,
) -> Result<Observation> {
    let n = test.plaintext.row_len();
    check_parties(parties, n)?;
    let cipher = parties.alice.infer(&test.alice_input()?)?;
    let link = transmit(&cipher, kind, fading, rng)?;
    let p_bob = parties
        .bob
        .infer(&Tensor::concat_cols(&link.received, &test.key)?)?;
    let p_eve = parties.eve.infer(&link.received)?;
    Ok(Observation {
        ber_bob: ber(&harden_predictions(&p_bob), &test.plaintext)?,
        ber_eve_trained: ber(&harden_predictions(&p_eve), &test.plaintext)?,
        ber_eve_hard_decision: ber(&hard_decision_eve(&link.received), &test.plaintext)?,
        cipher,
        received: link.received,
        p_bob,
        p_eve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    /// Empty for the clear channel.
    pub snr_db: Option<f64>,
    pub ber_bob: f64,
    pub ber_eve_trained: f64,
    pub ber_eve_hard_decision: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BerTable {
    pub rows: Vec<BerRow>,
}

impl BerTable {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["snr_db", "ber_bob", "ber_eve_trained", "ber_eve_hard_decision"])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { rows })
    }
}

/// Evaluates the test set at each SNR. Point `i` draws its channel from an
/// independent stream derived from `(seed, i)`. The clear channel has no SNR
/// and yields a single row.
pub fn snr_sweep(
    parties: &Parties,
    family: ChannelFamily,
    snrs_db: &[f64],
    test: &Batch,
    fading: &FadingOptions,
    seed: u64,
) -> Result<BerTable> {
    let mut rows = Vec::new();
    if family == ChannelFamily::Clear {
        let mut rng = RngStream::derive(seed, streams::CHANNEL, 0);
        let o = observe(parties, test, ChannelKind::Clear, fading, &mut rng)?;
        rows.push(BerRow {
            snr_db: None,
            ber_bob: o.ber_bob,
            ber_eve_trained: o.ber_eve_trained,
            ber_eve_hard_decision: o.ber_eve_hard_decision,
        });
        return Ok(BerTable { rows });
    }
    if snrs_db.is_empty() {
        return Err(Error::InvalidArgument("empty SNR list".into()));
    }
    if snrs_db.windows(2).any(|w| w[1] <= w[0]) || snrs_db.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "SNR list must be finite and strictly increasing: {snrs_db:?}"
        )));
    }
    for (i, &snr) in snrs_db.iter().enumerate() {
        let mut rng = RngStream::derive(seed, streams::CHANNEL, i as u64);
        let o = observe(parties, test, family.at_snr(snr), fading, &mut rng)?;
        rows.push(BerRow {
            snr_db: Some(snr),
            ber_bob: o.ber_bob,
            ber_eve_trained: o.ber_eve_trained,
            ber_eve_hard_decision: o.ber_eve_hard_decision,
        });
    }
    Ok(BerTable { rows })
}

/// Parses `start:stop:step` into an inclusive, increasing SNR list.
pub fn parse_snr_spec(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("SNR spec must be start:stop:step, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
