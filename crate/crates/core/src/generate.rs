//! Seeded Rademacher instance generation.
//!
//! Entries come from ChaCha8 keyed on `(seed, row)`: the seed selects the key,
//! the row index selects the stream, and column `c` is bit `c % 64` of the
//! `c / 64`-th output word. Rows are therefore independent and can be filled
//! in parallel without changing the result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub model: ModelKind,
    pub n: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl GenConfig {
    /// Row count `⌊αn⌋`.
    pub fn rows(&self) -> usize {
        (self.alpha * self.n as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.rows() == 0 {
            return Err(Error::InvalidConfig(format!("floor(alpha * n) = 0 for alpha={}, n={}", self.alpha, self.n)));
        }
        Ok(())
    }
}

pub fn sample_instance(cfg: &GenConfig) -> Result<Instance> {
    cfg.validate()?;
    sample_with_rows(cfg.model, cfg.rows(), cfg.n, cfg.kappa, cfg.seed)
}

/// Like [`sample_instance`] with an explicit row count.
pub fn sample_with_rows(model: ModelKind, m: usize, n: usize, kappa: f64, seed: u64) -> Result<Instance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidConfig(format!("need m ≥ 1 and n ≥ 1, got m={m}, n={n}")));
    }
    let mut entries = vec![0i8; m * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(r, row)| fill_row(seed, r as u64, row));
    Instance::new(model, m, n, kappa, entries, seed)
}

fn fill_row(seed: u64, row: u64, out: &mut [i8]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    for chunk in out.chunks_mut(64) {
        let word = rng.next_u64();
        for (b, v) in chunk.iter_mut().enumerate() {
            *v = if (word >> b) & 1 == 1 { -1 } else { 1 };
        }
    }
}
