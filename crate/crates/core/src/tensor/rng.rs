#[allow(unused_imports)]
use num_traits::Float as _;
use core::f64::consts::PI;

use super::RealGrid;
use crate::error::{shape_err, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based 64-bit generator: draw `i` is `mix64(key + i·γ)`.
///
/// Child streams are keyed from the parent seed and a tag, so splitting never
/// consumes parent draws.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    key: u64,
    counter: u64,
    spare: Option<u64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            key: mix64(seed ^ 0x6A09_E667_F3BC_C908),
            counter: 0,
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Independent child stream identified by `tag`.
    pub fn split(&self, tag: u64) -> Self {
        Self::new(mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; the bias is < n / 2^64.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal draw (Box-Muller, second variate cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(bits) = self.spare.take() {
            return f64::from_bits(bits);
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some((r * s).to_bits());
        r * c
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Grid of standard normal draws; advances `stream`.
pub fn gaussian(stream: &mut RandomStream, shape: &[usize]) -> Result<RealGrid> {
    if shape.is_empty() {
        return Err(shape_err("gaussian needs at least one dimension"));
    }
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| stream.normal()).collect();
    RealGrid::from_vec(shape, data)
}
