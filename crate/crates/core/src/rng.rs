//! Deterministic, portable random streams.
//!
//! All randomness in a run is drawn from named ChaCha12 streams derived from
//! a single master seed:
//!
//! ```text
//! stream_seed = SHA-256( LE64(master_seed) || label_utf8 )   (32 bytes)
//! ```
//!
//! Labels follow the convention `"ep:<episode>/<purpose>"` so that episodes
//! and purposes (population sampling, audit selection, verification draws,
//! detection draws, entry process) never share state. Two runs with the same
//! master seed replay bit-identically regardless of thread scheduling, and
//! the derivation is simple enough to reproduce in any language. Reference
//! test vectors live in `docs/rng.md` and are frozen in this module's tests.
//!
//! Distribution transforms are spelled out here rather than delegated to a
//! library so that the exact draw sequence is part of the contract:
//!
//! * `uniform01`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `standard_normal`: Box-Muller, `sqrt(-2 ln(1-u1)) * cos(2*pi*u2)`,
//!   consuming exactly two uniforms per draw (no caching).
//! * `log_normal(mu, sigma)`: `exp(mu + sigma * standard_normal())`.
//! * `poisson(lambda)`: Knuth's product-of-uniforms method.
//! * `index(n)`: `floor(uniform01() * n)`, exact for `n < 2^53`.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// A named deterministic random stream.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha12Rng,
}

/// Derive the 32-byte ChaCha12 seed for `(master_seed, label)`.
pub fn derive_seed(master_seed: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

/// Derive an independent stream for `(master_seed, label)`.
pub fn derive_rng(master_seed: u64, label: &str) -> SimRng {
    SimRng {
        inner: ChaCha12Rng::from_seed(derive_seed(master_seed, label)),
    }
}

impl SimRng {
    /// Next raw 64-bit output of the generator.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on `[0, 1)` with 53-bit resolution.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// `true` with probability `p`. Always consumes exactly one draw.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform01() < p
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform01(); // in (0, 1], keeps ln finite
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Log-normal draw with location `mu` and scale `sigma`.
    pub fn log_normal(&mut self, mu: f64, sigma: f64) -> f64 {
        (mu + sigma * self.standard_normal()).exp()
    }

    /// Poisson draw by Knuth's method; exact for the small rates used here.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        let limit = (-lambda).exp();
        let mut count = 0u32;
        let mut product = 1.0;
        loop {
            product *= self.uniform01();
            if product <= limit {
                return count;
            }
            count += 1;
        }
    }

    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.uniform01() * n as f64) as usize;
        i.min(n - 1)
    }

    /// Uniform sample of `k` distinct items from `items`, via partial
    /// Fisher-Yates over a copy. Order of the result is the shuffle order.
    pub fn sample_without_replacement<T: Copy>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let k = k.min(items.len());
        let mut pool: Vec<T> = items.to_vec();
        for i in 0..k {
            let j = i + self.index(pool.len() - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Label for an episode-scoped stream, e.g. `ep:17/audit`.
pub fn episode_label(episode: u32, purpose: &str) -> String {
    format!("ep:{episode}/{purpose}")
}
