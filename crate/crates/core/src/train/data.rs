use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numerics::{streams, RngStream, Tensor};
use crate::train::{DataMode, TrainingConfig};

/// Plaintext and key bits, one block per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub plaintext: Tensor,
    pub key: Tensor,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.plaintext.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Alice's input `[P | K]`.
    pub fn alice_input(&self) -> Result<Tensor> {
        Tensor::concat_cols(&self.plaintext, &self.key)
    }
}

/// A fixed set of distinct keys shared by Alice and Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPool {
    n: usize,
    keys: Vec<Vec<f64>>,
}

impl KeyPool {
    pub fn generate(size: usize, n: usize, rng: &mut RngStream) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("empty key pool".into()));
        }
        if n < 64 && size as f64 > 2f64.powi(n as i32) {
            return Err(Error::InvalidArgument(format!(
                "cannot draw {size} distinct {n}-bit keys"
            )));
        }
        let mut seen = HashSet::with_capacity(size);
        let mut keys = Vec::with_capacity(size);
        while keys.len() < size {
            let key: Vec<f64> = (0..n).map(|_| rng.bit()).collect();
            let bits: Vec<bool> = key.iter().map(|&b| b == 1.0).collect();
            if seen.insert(bits) {
                keys.push(key);
            }
        }
        Ok(Self { n, keys })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &[f64] {
        &self.keys[i]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Draws `size` rows: i.i.d. uniform plaintext bits from `rng_data`, keys
/// picked uniformly from `pool` with `rng_key`.
pub fn gen_batch(
    size: usize,
    n: usize,
    rng_data: &mut RngStream,
    rng_key: &mut RngStream,
    pool: &KeyPool,
) -> Result<Batch> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty key pool".into()));
    }
    if pool.n() != n {
        return Err(Error::shape(
            "gen_batch",
            format!("{}-bit keys for N={n}", pool.n()),
        ));
    }
    let plaintext: Vec<f64> = (0..size * n).map(|_| rng_data.bit()).collect();
    let mut key = Vec::with_capacity(size * n);
    for _ in 0..size {
        key.extend_from_slice(pool.key(rng_key.index(pool.len())));
    }
    Ok(Batch {
        plaintext: Tensor::new(vec![size, n], plaintext)?,
        key: Tensor::new(vec![size, n], key)?,
    })
}

/// Minibatch source for training: the key pool is generated once from the
/// key stream, then plaintext is either resampled or cycled.
#[derive(Debug, Clone)]
pub struct DataSource {
    n: usize,
    pool: KeyPool,
    rng_data: RngStream,
    rng_key: RngStream,
    fixed: Option<Batch>,
    cursor: usize,
}

impl DataSource {
    pub fn training(config: &TrainingConfig) -> Result<Self> {
        let mut rng_data = RngStream::with_stream(config.data_seed, streams::DATA);
        let mut rng_key = RngStream::with_stream(config.key_seed, streams::KEY);
        let pool = KeyPool::generate(
            config.key_pool_size(config.train_symbols),
            config.n,
            &mut rng_key,
        )?;
        let fixed = match config.data_mode {
            DataMode::Resample => None,
            DataMode::Cycle => Some(gen_batch(
                config.train_symbols,
                config.n,
                &mut rng_data,
                &mut rng_key,
                &pool,
            )?),
        };
        Ok(Self {
            n: config.n,
            pool,
            rng_data,
            rng_key,
            fixed,
            cursor: 0,
        })
    }

    pub fn key_pool(&self) -> &KeyPool {
        &self.pool
    }

    pub fn next_batch(&mut self, size: usize) -> Result<Batch> {
        let Some(fixed) = &self.fixed else {
            return gen_batch(size, self.n, &mut self.rng_data, &mut self.rng_key, &self.pool);
        };
        let total = fixed.len();
        let n = self.n;
        let mut p = Vec::with_capacity(size * n);
        let mut k = Vec::with_capacity(size * n);
        for _ in 0..size {
            p.extend_from_slice(fixed.plaintext.row(self.cursor));
            k.extend_from_slice(fixed.key.row(self.cursor));
            self.cursor = (self.cursor + 1) % total;
        }
        Ok(Batch {
            plaintext: Tensor::new(vec![size, n], p)?,
            key: Tensor::new(vec![size, n], k)?,
        })
    }
}

/// The held-out test set: `test_symbols` blocks from the test seeds, with its
/// own key pool at the same key-to-data ratio.
pub fn test_set(config: &TrainingConfig) -> Result<Batch> {
    let mut rng_data = RngStream::with_stream(config.test_data_seed, streams::DATA);
    let mut rng_key = RngStream::with_stream(config.test_key_seed, streams::KEY);
    let pool = KeyPool::generate(config.test_key_pool_size(), config.n, &mut rng_key)?;
    gen_batch(config.test_symbols, config.n, &mut rng_data, &mut rng_key, &pool)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            n: 16,
            train_symbols: 20_000,
            batch_size: 64,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn full_scale_ratio_gives_hundred_keys() {
        let src = DataSource::training(&small_config()).unwrap();
        assert_eq!(src.key_pool().len(), 100);
        let distinct: HashSet<Vec<u64>> = (0..100)
            .map(|i| src.key_pool().key(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 100);
    }

    #[test]
    fn one_time_pad_regime() {
        let cfg = TrainingConfig {
            key_to_data_ratio: 1.0,
            train_symbols: 500,
            batch_size: 50,
            ..small_config()
        };
        let src = DataSource::training(&cfg).unwrap();
        assert_eq!(src.key_pool().len(), 500);
    }

    #[test]
    fn entries_are_bits_and_keys_come_from_pool() {
        let mut src = DataSource::training(&small_config()).unwrap();
        let b = src.next_batch(64).unwrap();
        assert!(b.plaintext.data().iter().chain(b.key.data()).all(|&v| v == 0.0 || v == 1.0));
        for i in 0..b.len() {
            let k = b.key.row(i);
            assert!((0..src.key_pool().len()).any(|j| src.key_pool().key(j) == k));
        }
        assert_ne!(b.plaintext, b.key);
    }

    #[test]
    fn deterministic_under_seeds() {
        let mut a = DataSource::training(&small_config()).unwrap();
        let mut b = DataSource::training(&small_config()).unwrap();
        for _ in 0..3 {
            assert_eq!(a.next_batch(32).unwrap(), b.next_batch(32).unwrap());
        }
        let other = TrainingConfig {
            data_seed: 99,
            ..small_config()
        };
        let mut c = DataSource::training(&other).unwrap();
        let mut a = DataSource::training(&small_config()).unwrap();
        assert_ne!(a.next_batch(32).unwrap().plaintext, c.next_batch(32).unwrap().plaintext);
    }

    #[test]
    fn cycle_mode_wraps() {
        let cfg = TrainingConfig {
            train_symbols: 10,
            batch_size: 4,
            key_to_data_ratio: 0.5,
            data_mode: DataMode::Cycle,
            ..small_config()
        };
        let mut src = DataSource::training(&cfg).unwrap();
        let first = src.next_batch(10).unwrap();
        let again = src.next_batch(10).unwrap();
        assert_eq!(first, again);
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(KeyPool::generate(0, 8, &mut RngStream::new(0)).is_err());
        assert!(KeyPool::generate(5, 2, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn test_set_uses_its_own_seeds() {
        let cfg = TrainingConfig {
            test_symbols: 1000,
            ..small_config()
        };
        let t = test_set(&cfg).unwrap();
        assert_eq!(t.plaintext.shape(), &[1000, 16]);
        let mut train = DataSource::training(&cfg).unwrap();
        assert_ne!(train.next_batch(1000).unwrap().plaintext, t.plaintext);
    }
}
