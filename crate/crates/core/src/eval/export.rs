use std::path::Path;

use serde::Serialize;

use crate::channel::modulate_batch;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const DEFAULT_BINS: usize = 50;
pub const PREDICTION_RANGE: (f64, f64) = (0.0, 1.0);
pub const CIPHER_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count_correct: u64,
    pub count_incorrect: u64,
}

/// Uniform-bin histogram with counts split by a correctness mask. Values
/// outside the range land in the nearest edge bin; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn build(values: &[f64], correct: &[bool], bins: usize, range: (f64, f64)) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if values.len() != correct.len() {
            return Err(Error::shape(
                "Histogram::build",
                format!("{} values vs {} mask entries", values.len(), correct.len()),
            ));
        }
        let (lo, hi) = range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad histogram range {lo}..{hi}")));
        }
        let width = (hi - lo) / bins as f64;
        let mut out: Vec<HistogramBin> = (0..bins)
            .map(|i| HistogramBin {
                bin_left: lo + i as f64 * width,
                bin_right: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
                count_correct: 0,
                count_incorrect: 0,
            })
            .collect();
        for (&v, &ok) in values.iter().zip(correct) {
            if v.is_nan() {
                return Err(Error::InvalidArgument("NaN in histogram input".into()));
            }
            let idx = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            if ok {
                out[idx].count_correct += 1;
            } else {
                out[idx].count_incorrect += 1;
            }
        }
        Ok(Self { bins: out })
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count_correct + b.count_incorrect).sum()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for b in &self.bins {
            w.serialize(b)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Per-entry correctness of hardened bits against the plaintext.
pub fn correctness_mask(bits: &Tensor, plaintext: &Tensor) -> Result<Vec<bool>> {
    bits.expect_same_shape(plaintext, "correctness_mask")?;
    Ok(bits.data().iter().zip(plaintext.data()).map(|(a, b)| a == b).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct ConstellationPoint {
    re: f64,
    im: f64,
}

/// The complex points a `[batch, N]` cipher modulates to, as `re,im` CSV.
pub fn constellation_csv(cipher: &Tensor) -> Result<String> {
    if cipher.is_empty() {
        return Err(Error::InvalidArgument("empty cipher batch".into()));
    }
    let x = modulate_batch(cipher)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (re, im) in x.iter() {
        w.serialize(ConstellationPoint { re, im })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_constellation(cipher: &Tensor, path: &Path) -> Result<()> {
    std::fs::write(path, constellation_csv(cipher)?).map_err(|e| Error::io(path, e))
}
