//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`GaussianStream`]: a
//! ChaCha20 generator (`rand_chacha`, seeded with `seed_from_u64`) feeding a
//! basic Box–Muller transform. Both pieces are platform independent, so a
//! seed fully determines every noise sample, CMA-ES candidate and synthetic
//! corpus. [`PRNG_ID`] names this combination in output metadata.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const PRNG_ID: &str = "chacha20(seed_from_u64)+box-muller/v1";

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a window index and a stream tag:
/// `splitmix64(splitmix64(master ^ splitmix64(index)) ^ tag)`.
pub fn mix_seed(master: u64, index: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(index)) ^ tag)
}

pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a = GaussianStream::new(7).normals(100);
        let b = GaussianStream::new(7).normals(100);
        assert_eq!(a, b);
        assert_ne!(a, GaussianStream::new(8).normals(100));
    }

    #[test]
    fn mixing_separates_windows_and_tags() {
        let s = mix_seed(1, 0, 0);
        assert_ne!(s, mix_seed(1, 1, 0));
        assert_ne!(s, mix_seed(1, 0, 1));
        assert_ne!(s, mix_seed(2, 0, 0));
    }
}
