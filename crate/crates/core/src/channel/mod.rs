//! Real/complex modulation and the clear, AWGN and Rayleigh wiretap channels.

mod link;
mod model;
mod modem;

pub use link::{transmit, transmit_backward, Transmission};
pub use model::{
    apply_channel, channel_backward, draw_channel,
    ChannelFamily, measure_signal_power, noise_variance_for,
    ChannelKind, ChannelRealization, FadingGranularity, FadingOptions, UNIT_MEAN_RAYLEIGH_SCALE,
};
pub use modem::{
    demodulate, demodulate_batch, modulate, modulate_batch, symbols_per_block, ComplexVec,
};
