//! ConvDecoder generator `G(w)`: fixed noise in, complex VFA series out.
//!
//! Each block is bilinear upsample → 3×3 conv (+bias) → ReLU → per-channel
//! normalization with learned gain/shift. The final block skips the
//! upsample and is followed by a linear 3×3 head producing `2·K` channels
//! (real/imaginary per flip angle). Gradients are hand-written reverse mode.

mod adam;
mod kernels;
mod model;
mod weights;

pub use adam::{adam_step, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_STEP_SIZE};
pub use model::{backward, forward, Tape};
pub use weights::{BlockLayout, NetworkWeights, ParamLayout};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{domain_err, Result};
use crate::tensor::{gaussian, RandomStream, RealGrid};

pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub n_blocks: usize,
    pub latent_channels: usize,
    pub input_h: usize,
    pub input_w: usize,
    pub input_channels: usize,
    pub out_angles: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub seed: u64,
}

impl NetworkConfig {
    /// Six blocks, 128 channels, 64×16×16 noise, 224×224 output.
    pub fn paper(out_angles: usize, seed: u64) -> Self {
        Self {
            n_blocks: 6,
            latent_channels: 128,
            input_h: 16,
            input_w: 16,
            input_channels: 64,
            out_angles,
            out_h: 224,
            out_w: 224,
            seed,
        }
    }

    /// Four blocks, 32 channels, 32×8×8 noise.
    pub fn desk(out_angles: usize, out_h: usize, out_w: usize, seed: u64) -> Self {
        Self {
            n_blocks: 4,
            latent_channels: 32,
            input_h: 8,
            input_w: 8,
            input_channels: 32,
            out_angles,
            out_h,
            out_w,
            seed,
        }
    }

    /// A single block has no upsampling step, so it needs equal input and
    /// output sizes.
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 || self.latent_channels == 0 || self.input_channels == 0 {
            return Err(domain_err("network needs at least one block and one channel"));
        }
        if self.out_angles == 0 || self.input_h == 0 || self.input_w == 0 {
            return Err(domain_err("network dimensions must be positive"));
        }
        if self.out_h < self.input_h || self.out_w < self.input_w {
            return Err(domain_err("output must be at least as large as the input"));
        }
        if self.n_blocks == 1 && (self.out_h, self.out_w) != (self.input_h, self.input_w) {
            return Err(domain_err("a one-block network cannot change spatial size"));
        }
        Ok(())
    }

    pub fn noise_input(&self) -> RealGrid {
        let mut stream = RandomStream::new(self.seed).split(1);
        gaussian(&mut stream, &[self.input_channels, self.input_h, self.input_w])
            .expect("shape is non-empty")
    }
}

/// `ceil(in·(out/in)^(k/(B−1)))` for `k = 1..B−1`.
pub fn plan_axis(input: usize, output: usize, n_blocks: usize) -> Vec<usize> {
    if n_blocks < 2 {
        return Vec::new();
    }
    let steps = n_blocks - 1;
    let ratio = output as f64 / input as f64;
    (1..=steps)
        .map(|k| {
            if k == steps {
                return output;
            }
            let v = input as f64 * ratio.powf(k as f64 / steps as f64);
            // Guard values that land on an integer up to rounding.
            let r = v.round();
            if (v - r).abs() <= 1e-9 * v {
                r as usize
            } else {
                v.ceil() as usize
            }
        })
        .collect()
}

/// Spatial size after each upsampling block; the final block keeps
/// `(out_h, out_w)`.
pub fn plan_sizes(cfg: &NetworkConfig) -> Vec<(usize, usize)> {
    let hs = plan_axis(cfg.input_h, cfg.out_h, cfg.n_blocks);
    let ws = plan_axis(cfg.input_w, cfg.out_w, cfg.n_blocks);
    hs.into_iter().zip(ws).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sizes() {
        assert_eq!(plan_axis(16, 224, 6), alloc::vec![28, 46, 78, 133, 224]);
    }

    #[test]
    fn equal_sizes_stay_put() {
        assert_eq!(plan_axis(16, 16, 4), alloc::vec![16, 16, 16]);
        assert!(plan_axis(4, 4, 1).is_empty());
    }

    #[test]
    fn desk_sizes() {
        let cfg = NetworkConfig::desk(9, 64, 64, 0);
        assert_eq!(plan_sizes(&cfg), alloc::vec![(16, 16), (32, 32), (64, 64)]);
    }

    #[test]
    fn validation() {
        let mut cfg = NetworkConfig::desk(9, 64, 64, 0);
        assert!(cfg.validate().is_ok());
        cfg.n_blocks = 1;
        assert!(cfg.validate().is_err());
        cfg.out_h = 8;
        cfg.out_w = 8;
        assert!(cfg.validate().is_ok());
        cfg.out_h = 4;
        assert!(cfg.validate().is_err());
    }
}
