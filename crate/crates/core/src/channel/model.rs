use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ComplexVec;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Wiretap channel shared by Bob and Eve.
///
/// * `Clear`: `y = x`
/// * `Awgn`: `y = x + n`, `n ~ CN(0, σ²)`
/// * `Rayleigh`: `y = h·x + n` with flat fading gains `h`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelKind {
    Clear,
    Awgn { snr_db: f64 },
    Rayleigh { snr_db: f64 },
}

impl ChannelKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            ChannelKind::Awgn { snr_db } | ChannelKind::Rayleigh { snr_db }
                if !snr_db.is_finite() =>
            {
                Err(Error::InvalidArgument(format!("snr_db must be finite, got {snr_db}")))
            }
            k => Ok(k),
        }
    }

    pub fn is_noisy(self) -> bool {
        !matches!(self, ChannelKind::Clear)
    }

    pub fn snr_db(self) -> Option<f64> {
        match self {
            ChannelKind::Clear => None,
            ChannelKind::Awgn { snr_db } | ChannelKind::Rayleigh { snr_db } => Some(snr_db),
        }
    }

    /// Same family at a different SNR; `Clear` is returned unchanged.
    pub fn at_snr(self, snr_db: f64) -> Self {
        match self {
            ChannelKind::Clear => ChannelKind::Clear,
            ChannelKind::Awgn { .. } => ChannelKind::Awgn { snr_db },
            ChannelKind::Rayleigh { .. } => ChannelKind::Rayleigh { snr_db },
        }
    }

    pub fn family(self) -> ChannelFamily {
        match self {
            ChannelKind::Clear => ChannelFamily::Clear,
            ChannelKind::Awgn { .. } => ChannelFamily::Awgn,
            ChannelKind::Rayleigh { .. } => ChannelFamily::Rayleigh,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.snr_db() {
            None => f.write_str(self.family().name()),
            Some(s) => write!(f, "{}@{s}dB", self.family().name()),
        }
    }
}

/// Channel family without an SNR, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    Clear,
    Awgn,
    Rayleigh,
}

impl ChannelFamily {
    pub fn at_snr(self, snr_db: f64) -> ChannelKind {
        match self {
            ChannelFamily::Clear => ChannelKind::Clear,
            ChannelFamily::Awgn => ChannelKind::Awgn { snr_db },
            ChannelFamily::Rayleigh => ChannelKind::Rayleigh { snr_db },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Clear => "clear",
            ChannelFamily::Awgn => "awgn",
            ChannelFamily::Rayleigh => "rayleigh",
        }
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clear" => Ok(ChannelFamily::Clear),
            "awgn" | "gaussian" => Ok(ChannelFamily::Awgn),
            "rayleigh" => Ok(ChannelFamily::Rayleigh),
            other => Err(Error::InvalidArgument(format!("unknown channel {other:?}"))),
        }
    }
}

/// Whether a Rayleigh gain is drawn per complex sample or once per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingGranularity {
    #[default]
    PerSample,
    PerBlock,
}

/// `√(2/π)`: the Rayleigh scale for which `E[|h|] = 1`.
pub const UNIT_MEAN_RAYLEIGH_SCALE: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingOptions {
    pub rayleigh_scale: f64,
    pub granularity: FadingGranularity,
    /// Complex samples per block; only consulted for `PerBlock`.
    pub block_symbols: usize,
}

impl Default for FadingOptions {
    fn default() -> Self {
        Self {
            rayleigh_scale: UNIT_MEAN_RAYLEIGH_SCALE,
            granularity: FadingGranularity::PerSample,
            block_symbols: 1,
        }
    }
}

/// A frozen draw of gains and noise. Immutable once drawn, so a forward pass
/// and its backward pass always see the same `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gain: ComplexVec,
    noise: ComplexVec,
    noise_variance: f64,
}

impl ChannelRealization {
    /// Builds a realization from explicit gains and noise (tests, custom channels).
    pub fn from_parts(gain: ComplexVec, noise: ComplexVec, noise_variance: f64) -> Result<Self> {
        if gain.len() != noise.len() {
            return Err(Error::shape(
                "ChannelRealization::from_parts",
                format!("{} gains vs {} noise samples", gain.len(), noise.len()),
            ));
        }
        Ok(Self {
            gain,
            noise,
            noise_variance,
        })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            gain: ComplexVec::new(vec![1.0; len], vec![0.0; len]).expect("equal lengths"),
            noise: ComplexVec::zeros(len),
            noise_variance: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    pub fn gain(&self) -> &ComplexVec {
        &self.gain
    }

    pub fn noise(&self) -> &ComplexVec {
        &self.noise
    }

    /// Total complex noise variance σ² (σ²/2 per real dimension).
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Mean `|x|²` over all samples.
pub fn measure_signal_power(x: &ComplexVec) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("signal power of an empty batch".into()));
    }
    Ok(x.iter().map(|(r, i)| r * r + i * i).sum::<f64>() / x.len() as f64)
}

/// Noise variance giving `snr_db` against `signal_power`.
pub fn noise_variance_for(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Draws gains and noise for `symbols` complex samples.
pub fn draw_channel(
    kind: ChannelKind,
    symbols: usize,
    signal_power: f64,
    fading: &FadingOptions,
    rng: &mut RngStream,
) -> Result<ChannelRealization> {
    let kind = kind.validate()?;
    let snr_db = match kind.snr_db() {
        None => return Ok(ChannelRealization::identity(symbols)),
        Some(s) => s,
    };
    if !(signal_power > 0.0 && signal_power.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{kind} needs a positive signal power, got {signal_power}"
        )));
    }

    let mut gain = ComplexVec::new(vec![1.0; symbols], vec![0.0; symbols])?;
    if let ChannelKind::Rayleigh { .. } = kind {
        let scale = fading.rayleigh_scale;
        let block = match fading.granularity {
            FadingGranularity::PerSample => 1,
            FadingGranularity::PerBlock => fading.block_symbols.max(1),
        };
        let mut i = 0;
        while i < symbols {
            // σ·(g₁ + j·g₂): Rayleigh(σ) magnitude with uniform phase.
            let hr = scale * rng.standard_normal();
            let hi = scale * rng.standard_normal();
            for k in i..(i + block).min(symbols) {
                gain.re[k] = hr;
                gain.im[k] = hi;
            }
            i += block;
        }
    }

    let noise_variance = noise_variance_for(signal_power, snr_db);
    let per_dim = (noise_variance / 2.0).sqrt();
    let mut noise = ComplexVec::zeros(symbols);
    for k in 0..symbols {
        noise.re[k] = per_dim * rng.standard_normal();
        noise.im[k] = per_dim * rng.standard_normal();
    }
    ChannelRealization::from_parts(gain, noise, noise_variance)
}

/// `y_m = h_m·x_m + n_m`.
pub fn apply_channel(x: &ComplexVec, r: &ChannelRealization) -> Result<ComplexVec> {
    if x.len() != r.len() {
        return Err(Error::shape(
            "apply_channel",
            format!("{} samples vs realization of {}", x.len(), r.len()),
        ));
    }
    let mut y = ComplexVec::zeros(x.len());
    for k in 0..x.len() {
        let (xr, xi) = (x.re[k], x.im[k]);
        let (hr, hi) = (r.gain.re[k], r.gain.im[k]);
        y.re[k] = hr * xr - hi * xi + r.noise.re[k];
        y.im[k] = hi * xr + hr * xi + r.noise.im[k];
    }
    Ok(y)
}

/// Gradient with respect to `x` of [`apply_channel`] under the same realization.
///
/// Per sample, `(re, im)` maps through `[[hr, −hi], [hi, hr]]`; its transpose
/// applied to the upstream gradient is multiplication by `conj(h)`. Noise is
/// additive and contributes nothing.
pub fn channel_backward(upstream: &ComplexVec, r: &ChannelRealization) -> Result<ComplexVec> {
    if upstream.len() != r.len() {
        return Err(Error::StaleRealization(format!(
            "upstream has {} samples, realization {}",
            upstream.len(),
            r.len()
        )));
    }
    let mut g = ComplexVec::zeros(upstream.len());
    for k in 0..upstream.len() {
        let (gr, gi) = (upstream.re[k], upstream.im[k]);
        let (hr, hi) = (r.gain.re[k], r.gain.im[k]);
        g.re[k] = hr * gr + hi * gi;
        g.im[k] = -hi * gr + hr * gi;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, Tensor};

    fn cv(re: &[f64], im: &[f64]) -> ComplexVec {
        ComplexVec::new(re.to_vec(), im.to_vec()).unwrap()
    }

    #[test]
    fn clear_is_identity() {
        let mut rng = RngStream::new(0);
        let r = draw_channel(ChannelKind::Clear, 5, 0.0, &FadingOptions::default(), &mut rng).unwrap();
        assert!(r.gain().re.iter().all(|&v| v == 1.0));
        assert!(r.gain().im.iter().all(|&v| v == 0.0));
        assert!(r.noise().re.iter().chain(&r.noise().im).all(|&v| v == 0.0));
        let x = cv(&[0.3, -0.1, 2.0, 0.0, 1.0], &[1.0, 0.5, -0.25, 0.0, 7.0]);
        assert_eq!(apply_channel(&x, &r).unwrap(), x);
    }

    #[test]
    fn additive_and_multiplicative_definitions() {
        let x = cv(&[1.0, -2.0], &[0.5, 0.25]);
        let r = ChannelRealization::from_parts(cv(&[1.0, 1.0], &[0.0, 0.0]), cv(&[0.1, 0.1], &[0.0, 0.0]), 0.0)
            .unwrap();
        let y = apply_channel(&x, &r).unwrap();
        assert_eq!(y.re, vec![1.1, -1.9]);
        assert_eq!(y.im, x.im);

        let r = ChannelRealization::from_parts(cv(&[2.0, 2.0], &[0.0, 0.0]), ComplexVec::zeros(2), 0.0).unwrap();
        let y = apply_channel(&x, &r).unwrap();
        assert_eq!(y.re, vec![2.0, -4.0]);
        assert_eq!(y.im, vec![1.0, 0.5]);
    }

    #[test]
    fn nonpositive_power_rejected_for_noisy_kinds() {
        let mut rng = RngStream::new(0);
        let opts = FadingOptions::default();
        for kind in [ChannelKind::Awgn { snr_db: 10.0 }, ChannelKind::Rayleigh { snr_db: 10.0 }] {
            assert!(draw_channel(kind, 4, 0.0, &opts, &mut rng).is_err());
            assert!(draw_channel(kind, 4, -1.0, &opts, &mut rng).is_err());
        }
        assert!(draw_channel(ChannelKind::Awgn { snr_db: f64::NAN }, 4, 1.0, &opts, &mut rng).is_err());
    }

    #[test]
    fn signal_power() {
        assert_eq!(measure_signal_power(&cv(&[1.0; 4], &[0.0; 4])).unwrap(), 1.0);
        assert_eq!(measure_signal_power(&cv(&[1.0, -1.0, 1.0], &[1.0, 1.0, -1.0])).unwrap(), 2.0);
        assert_eq!(measure_signal_power(&ComplexVec::zeros(3)).unwrap(), 0.0);
        assert!(measure_signal_power(&ComplexVec::zeros(0)).is_err());
    }

    #[test]
    fn backward_identity_and_scaling() {
        let g = cv(&[0.5, -1.0], &[2.0, 0.25]);
        assert_eq!(channel_backward(&g, &ChannelRealization::identity(2)).unwrap(), g);
        let r = ChannelRealization::from_parts(cv(&[2.0, 2.0], &[0.0, 0.0]), ComplexVec::zeros(2), 0.0).unwrap();
        let d = channel_backward(&g, &r).unwrap();
        assert_eq!(d.re, vec![1.0, -2.0]);
        assert_eq!(d.im, vec![4.0, 0.5]);
        assert!(matches!(
            channel_backward(&ComplexVec::zeros(3), &r),
            Err(Error::StaleRealization(_))
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = RngStream::new(77);
        let opts = FadingOptions::default();
        for _ in 0..100 {
            let m = 3;
            let r = draw_channel(ChannelKind::Rayleigh { snr_db: 5.0 }, m, 1.0, &opts, &mut rng).unwrap();
            let w: Vec<f64> = (0..2 * m).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x0 = Tensor::new(vec![2 * m], (0..2 * m).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
            // scalar objective: <w, real-vector form of y>
            let f = |t: &Tensor| {
                let d = t.data();
                let x = cv(&d[..m], &d[m..]);
                let y = apply_channel(&x, &r).unwrap();
                y.re.iter().chain(&y.im).zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            let fd = finite_diff_grad(f, &x0, 1e-5).unwrap();
            let up = cv(&w[..m], &w[m..]);
            let g = channel_backward(&up, &r).unwrap();
            for (a, b) in g.re.iter().chain(&g.im).zip(fd.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn linear_in_x_for_fixed_realization() {
        let mut rng = RngStream::new(5);
        let r = draw_channel(ChannelKind::Rayleigh { snr_db: 3.0 }, 6, 1.0, &FadingOptions::default(), &mut rng)
            .unwrap();
        let x1 = cv(&[0.1, 0.2, 0.3, -0.4, 0.5, 0.6], &[0.6, -0.5, 0.4, 0.3, 0.2, 0.1]);
        let x2 = cv(&[1.0, -1.0, 0.5, 0.25, 0.0, 2.0], &[0.0, 0.5, -1.5, 1.0, 0.75, -0.2]);
        let alpha = 1.7;
        let combo = cv(
            &x1.re.iter().zip(&x2.re).map(|(a, b)| alpha * a + b).collect::<Vec<_>>(),
            &x1.im.iter().zip(&x2.im).map(|(a, b)| alpha * a + b).collect::<Vec<_>>(),
        );
        let y = apply_channel(&combo, &r).unwrap();
        let y1 = apply_channel(&x1, &r).unwrap();
        let y2 = apply_channel(&x2, &r).unwrap();
        for k in 0..6 {
            let er = alpha * y1.re[k] + y2.re[k] - r.noise().re[k] * alpha;
            let ei = alpha * y1.im[k] + y2.im[k] - r.noise().im[k] * alpha;
            assert!((y.re[k] - er).abs() < 1e-12);
            assert!((y.im[k] - ei).abs() < 1e-12);
        }
    }

    #[test]
    fn per_block_fading_shares_gain() {
        let opts = FadingOptions {
            granularity: FadingGranularity::PerBlock,
            block_symbols: 4,
            ..FadingOptions::default()
        };
        let r = draw_channel(ChannelKind::Rayleigh { snr_db: 20.0 }, 12, 1.0, &opts, &mut RngStream::new(3))
            .unwrap();
        for b in 0..3 {
            let first = (r.gain().re[4 * b], r.gain().im[4 * b]);
            for k in 4 * b..4 * b + 4 {
                assert_eq!((r.gain().re[k], r.gain().im[k]), first);
            }
        }
        assert_ne!(r.gain().re[0], r.gain().re[4]);
    }

    #[test]
    fn serde_shape() {
        let k = ChannelKind::Awgn { snr_db: 25.0 };
        assert_eq!(serde_json::to_string(&k).unwrap(), r#"{"type":"awgn","snr_db":25.0}"#);
        let c: ChannelKind = serde_json::from_str(r#"{"type":"clear"}"#).unwrap();
        assert_eq!(c, ChannelKind::Clear);
    }
}
