use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};
#[allow(unused_imports)]
use num_traits::Float as _;

use super::NetworkConfig;
use crate::error::{shape_err, Result};
use crate::tensor::RandomStream;

/// Offsets of one block's parameters inside the flat vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub cin: usize,
    pub cout: usize,
    /// `[cout, cin, 3, 3]`
    pub kernel: usize,
    pub bias: usize,
    pub gain: usize,
    pub shift: usize,
}

/// Flat parameter layout derived from a [`NetworkConfig`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub blocks: Vec<BlockLayout>,
    pub head_cin: usize,
    pub head_cout: usize,
    pub head_kernel: usize,
    pub head_bias: usize,
    pub len: usize,
}

impl ParamLayout {
    pub fn new(cfg: &NetworkConfig) -> Self {
        let mut off = 0;
        let mut blocks = Vec::with_capacity(cfg.n_blocks);
        for b in 0..cfg.n_blocks {
            let cin = if b == 0 { cfg.input_channels } else { cfg.latent_channels };
            let cout = cfg.latent_channels;
            let kernel = off;
            off += cout * cin * 9;
            let bias = off;
            off += cout;
            let gain = off;
            off += cout;
            let shift = off;
            off += cout;
            blocks.push(BlockLayout {
                cin,
                cout,
                kernel,
                bias,
                gain,
                shift,
            });
        }
        let head_cin = cfg.latent_channels;
        let head_cout = 2 * cfg.out_angles;
        let head_kernel = off;
        off += head_cout * head_cin * 9;
        let head_bias = off;
        off += head_cout;
        Self {
            blocks,
            head_cin,
            head_cout,
            head_kernel,
            head_bias,
            len: off,
        }
    }
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// All learnable parameters as one flat vector.
///
/// Every mutation takes a fresh process-wide generation number, which tapes
/// record so a backward pass against changed weights is detected.
#[derive(Clone, Debug)]
pub struct NetworkWeights {
    cfg: NetworkConfig,
    layout: ParamLayout,
    params: Vec<f64>,
    generation: u64,
}

impl PartialEq for NetworkWeights {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg && self.params == other.params
    }
}

impl NetworkWeights {
    /// He-scaled Gaussian kernels `N(0, 2/(9·cin))`, zero biases and shifts,
    /// unit gains. Drawn from child stream 0 of `cfg.seed`.
    pub fn init(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(cfg);
        let mut params = vec![0.0; layout.len];
        let mut rng = RandomStream::new(cfg.seed).split(0);
        let mut fill = |params: &mut [f64], start: usize, cout: usize, cin: usize| {
            let std = (2.0 / (9.0 * cin as f64)).sqrt();
            for p in &mut params[start..start + cout * cin * 9] {
                *p = std * rng.normal();
            }
        };
        for b in &layout.blocks {
            fill(&mut params, b.kernel, b.cout, b.cin);
            for g in &mut params[b.gain..b.gain + b.cout] {
                *g = 1.0;
            }
        }
        fill(&mut params, layout.head_kernel, layout.head_cout, layout.head_cin);
        Ok(Self {
            cfg: cfg.clone(),
            layout,
            params,
            generation: next_generation(),
        })
    }

    pub fn zeros(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(cfg);
        Ok(Self {
            cfg: cfg.clone(),
            params: vec![0.0; layout.len],
            layout,
            generation: next_generation(),
        })
    }

    pub fn from_params(cfg: &NetworkConfig, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(cfg);
        if params.len() != layout.len {
            return Err(shape_err(alloc::format!(
                "network expects {} parameters, got {}",
                layout.len,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(crate::error::domain_err("non-finite network parameter"));
        }
        Ok(Self {
            cfg: cfg.clone(),
            layout,
            params,
            generation: next_generation(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn kernel(&self, b: usize) -> &[f64] {
        let l = &self.layout.blocks[b];
        &self.params[l.kernel..l.kernel + l.cout * l.cin * 9]
    }

    pub(crate) fn slice(&self, start: usize, len: usize) -> &[f64] {
        &self.params[start..start + len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts() {
        let cfg = NetworkConfig::desk(9, 64, 64, 0);
        let l = ParamLayout::new(&cfg);
        let block = |cin: usize| 32 * cin * 9 + 3 * 32;
        assert_eq!(l.len, 4 * block(32) + 18 * 32 * 9 + 18);
    }

    #[test]
    fn init_is_seeded_and_mutation_bumps_generation() {
        let cfg = NetworkConfig::desk(3, 16, 16, 4);
        let a = NetworkWeights::init(&cfg).unwrap();
        let b = NetworkWeights::init(&cfg).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.generation(), b.generation());
        let mut c = a.clone();
        let g = c.generation();
        c.params_mut()[0] += 1.0;
        assert_ne!(c.generation(), g);
        assert!(NetworkWeights::from_params(&cfg, alloc::vec![0.0; 3]).is_err());
    }
}
