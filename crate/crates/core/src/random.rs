//! Seedable, portable pseudo-random streams and Gaussian matrix sampling.
//!
//! The generator is xoshiro256** (period 2²⁵⁶ − 1). Its 256-bit state is
//! filled from the 64-bit seed with SplitMix64:
//!
//! ```text
//! splitmix64(x):  x += 0x9E3779B97F4A7C15
//!                 z = x
//!                 z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                 return z ^ (z >> 31)
//!
//! next():         result = rotl(s1 * 5, 7) * 9
//!                 t = s1 << 17
//!                 s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3
//!                 s2 ^= t;  s3 = rotl(s3, 45)
//! ```
//!
//! All arithmetic is wrapping `u64`, so a given seed yields the same sequence
//! on every platform. Uniforms take the top 53 bits: `(next() >> 11) · 2⁻⁵³`.
//!
//! Per-trial substreams are seeded with `mix64(master ^ (index · 0x9E3779B97F4A7C15))`
//! where `mix64` is the SplitMix64 finalizer (the last three lines above).
//! Both maps are bijections on `u64`, so distinct indices give distinct seeds.

use thiserror::Error;

use crate::linalg::Matrix;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandomError {
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    mix64(*state)
}

/// A single-owner random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RngStream {
    s: [u64; 4],
    origin_seed: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        RngStream {
            s,
            origin_seed: seed,
            spare_normal: None,
        }
    }

    /// Stream for trial `index` of an experiment keyed by `master`.
    pub fn derive(master: u64, index: u64) -> Self {
        RngStream::new(mix64(master ^ index.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn origin_seed(&self) -> u64 {
        self.origin_seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal draw by the polar Box–Muller method. Each accepted
    /// pair yields two variates; the second is returned by the next call.
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

pub fn stream_new(seed: u64) -> RngStream {
    RngStream::new(seed)
}

pub fn derive_substream(master: u64, index: u64) -> RngStream {
    RngStream::derive(master, index)
}

/// `rows × cols` matrix of independent `N(0, sigma²)` entries, drawn in
/// row-major order. Each entry is `sigma · z` for the stream's next standard
/// normal `z`.
pub fn gaussian_matrix(
    stream: &mut RngStream,
    rows: usize,
    cols: usize,
    sigma: f64,
) -> Result<Matrix, RandomError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(RandomError::BadSigma(sigma));
    }
    if rows == 0 || cols == 0 {
        return Err(RandomError::BadShape { rows, cols });
    }
    let data = (0..rows * cols)
        .map(|_| sigma * stream.next_standard_normal())
        .collect();
    Ok(Matrix::new(rows, cols, data).expect("finite gaussian entries"))
}
