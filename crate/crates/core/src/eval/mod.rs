//! Hard decisions, bit error rates, SNR sweeps and CSV exports.

mod export;
mod metrics;
mod sweep;

pub use export::{
    constellation_csv, correctness_mask, write_constellation, Histogram, HistogramBin, CIPHER_RANGE,
    DEFAULT_BINS, PREDICTION_RANGE,
};
pub use metrics::{ber, ber_slices, hard_decision_eve, harden, harden_predictions};
pub use sweep::{observe, parse_snr_spec, snr_sweep, BerRow, BerTable, Observation};
