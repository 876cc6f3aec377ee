use crate::channel::{
    apply_channel, channel_backward, demodulate_batch, draw_channel, measure_signal_power,
    modulate_batch, ChannelKind, ChannelRealization, FadingOptions,
};
use crate::error::Result;
use crate::numerics::{RngStream, Tensor};

/// Output of one pass over the air: the recovered cipher `C'` and the
/// realization it was drawn under.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub received: Tensor,
    pub realization: ChannelRealization,
}

/// Modulates a `[batch, N]` cipher, passes it through a fresh draw of `kind`
/// and demodulates. The SNR reference is the mean `|x|²` of this batch.
pub fn transmit(
    cipher: &Tensor,
    kind: ChannelKind,
    fading: &FadingOptions,
    rng: &mut RngStream,
) -> Result<Transmission> {
    let x = modulate_batch(cipher)?;
    let power = if kind.is_noisy() {
        measure_signal_power(&x)?.max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    let realization = draw_channel(kind, x.len(), power, fading, rng)?;
    let y = apply_channel(&x, &realization)?;
    let received = demodulate_batch(&y, cipher.rows(), cipher.row_len())?;
    Ok(Transmission {
        received,
        realization,
    })
}

/// Maps a gradient with respect to `C'` back to the cipher `C` under the
/// realization used in the forward pass.
pub fn transmit_backward(upstream: &Tensor, realization: &ChannelRealization) -> Result<Tensor> {
    let g = modulate_batch(upstream)?;
    let g = channel_backward(&g, realization)?;
    demodulate_batch(&g, upstream.rows(), upstream.row_len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_grad;

    #[test]
    fn clear_link_is_identity() {
        let c = Tensor::new(vec![2, 4], vec![0.1, -0.5, 0.3, 0.9, -1.0, 0.0, 0.2, 0.4]).unwrap();
        let t = transmit(&c, ChannelKind::Clear, &FadingOptions::default(), &mut RngStream::new(1)).unwrap();
        assert_eq!(t.received, c);
        assert_eq!(transmit_backward(&c, &t.realization).unwrap(), c);
    }

    #[test]
    fn rayleigh_link_gradient_matches_finite_differences() {
        let c = Tensor::new(vec![2, 4], vec![0.1, -0.5, 0.3, 0.9, -1.0, 0.25, 0.2, 0.4]).unwrap();
        let w = Tensor::new(vec![2, 4], vec![0.3, 1.0, -0.7, 0.2, 0.5, -0.1, 0.9, 0.6]).unwrap();
        let kind = ChannelKind::Rayleigh { snr_db: 10.0 };
        let t = transmit(&c, kind, &FadingOptions::default(), &mut RngStream::new(5)).unwrap();
        let r = t.realization.clone();
        let objective = |x: &Tensor| {
            let y = apply_channel(&modulate_batch(x).unwrap(), &r).unwrap();
            let y = demodulate_batch(&y, 2, 4).unwrap();
            y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum::<f64>()
        };
        let fd = finite_diff_grad(objective, &c, 1e-6).unwrap();
        let g = transmit_backward(&w, &r).unwrap();
        for (a, b) in g.data().iter().zip(fd.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
