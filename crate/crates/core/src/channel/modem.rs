use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Complex samples stored as parallel real/imaginary arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::shape(
                "ComplexVec::new",
                format!("re has {}, im has {}", re.len(), im.len()),
            ));
        }
        Ok(Self { re, im })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.re.iter().copied().zip(self.im.iter().copied())
    }
}

/// Complex symbols per block of `n` reals.
pub fn symbols_per_block(n: usize) -> usize {
    n.div_ceil(2)
}

/// Packs consecutive reals into complex samples: `x_m = c_{2m} + j·c_{2m+1}`
/// (zero-based). An odd trailing value gets a zero imaginary part.
pub fn modulate(c: &[f64]) -> ComplexVec {
    let m = symbols_per_block(c.len());
    let mut out = ComplexVec::zeros(m);
    for (i, pair) in c.chunks(2).enumerate() {
        out.re[i] = pair[0];
        out.im[i] = pair.get(1).copied().unwrap_or(0.0);
    }
    out
}

/// Inverse of [`modulate`]; the zero pad of an odd `n` is dropped.
pub fn demodulate(y: &ComplexVec, n: usize) -> Result<Tensor> {
    if n == 0 || y.len() != symbols_per_block(n) {
        return Err(Error::shape(
            "demodulate",
            format!("{} symbols cannot carry N={n}", y.len()),
        ));
    }
    let mut out = Vec::with_capacity(2 * y.len());
    for (re, im) in y.iter() {
        out.push(re);
        out.push(im);
    }
    out.truncate(n);
    Tensor::new(vec![n], out)
}

/// Row-wise [`modulate`] of a `[batch, N]` tensor into `batch·⌈N/2⌉` samples.
pub fn modulate_batch(c: &Tensor) -> Result<ComplexVec> {
    if c.rank() != 2 {
        return Err(Error::shape(
            "modulate_batch",
            format!("expected [batch, N], got {:?}", c.shape()),
        ));
    }
    let mut out = ComplexVec::zeros(0);
    for i in 0..c.rows() {
        let x = modulate(c.row(i));
        out.re.extend(x.re);
        out.im.extend(x.im);
    }
    Ok(out)
}

/// Row-wise [`demodulate`] back to `[batch, N]`.
pub fn demodulate_batch(y: &ComplexVec, batch: usize, n: usize) -> Result<Tensor> {
    let m = symbols_per_block(n);
    if batch == 0 || y.len() != batch * m {
        return Err(Error::shape(
            "demodulate_batch",
            format!("{} symbols for batch {batch} x N={n}", y.len()),
        ));
    }
    let mut data = Vec::with_capacity(batch * n);
    for b in 0..batch {
        let block = ComplexVec {
            re: y.re[b * m..(b + 1) * m].to_vec(),
            im: y.im[b * m..(b + 1) * m].to_vec(),
        };
        data.extend(demodulate(&block, n)?.into_data());
    }
    Tensor::new(vec![batch, n], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_pairs() {
        let x = modulate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.re, vec![1.0, 3.0]);
        assert_eq!(x.im, vec![2.0, 4.0]);
    }

    #[test]
    fn zeros_stay_zero() {
        let x = modulate(&[0.0; 6]);
        assert_eq!(x, ComplexVec::zeros(3));
    }

    #[test]
    fn odd_length_zero_pads() {
        let x = modulate(&[1.0, 2.0, 3.0]);
        assert_eq!(x.re, vec![1.0, 3.0]);
        assert_eq!(x.im, vec![2.0, 0.0]);
        let y = ComplexVec::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(demodulate(&y, 1).unwrap().data(), &[1.0]);
        assert_eq!(demodulate(&y, 2).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let y = ComplexVec::zeros(3);
        assert!(demodulate(&y, 4).is_err());
        assert!(demodulate_batch(&y, 2, 4).is_err());
    }

    #[test]
    fn batch_roundtrip() {
        let c = Tensor::new(vec![2, 4], vec![0.1, -0.2, 0.3, 0.4, 0.5, 0.6, -0.7, 0.8]).unwrap();
        let x = modulate_batch(&c).unwrap();
        assert_eq!(x.len(), 4);
        assert_eq!(demodulate_batch(&x, 2, 4).unwrap(), c);
    }
}
