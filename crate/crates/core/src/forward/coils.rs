#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{shape_err, Result};
use crate::tensor::{RandomStream, C64};

/// Complex receive sensitivities, `[n_coils, h, w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoilSensitivities {
    n_coils: usize,
    h: usize,
    w: usize,
    maps: Vec<C64>,
}

impl CoilSensitivities {
    pub fn from_vec(n_coils: usize, h: usize, w: usize, maps: Vec<C64>) -> Result<Self> {
        if maps.len() != n_coils * h * w || n_coils == 0 {
            return Err(shape_err("sensitivity data length does not match [coils, h, w]"));
        }
        Ok(Self { n_coils, h, w, maps })
    }

    /// Single coil with unit sensitivity everywhere.
    pub fn uniform(h: usize, w: usize) -> Self {
        Self {
            n_coils: 1,
            h,
            w,
            maps: vec![C64::new(1.0, 0.0); h * w],
        }
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_coils, self.h, self.w)
    }

    pub fn data(&self) -> &[C64] {
        &self.maps
    }

    pub fn map(&self, c: usize) -> &[C64] {
        let n = self.h * self.w;
        &self.maps[c * n..(c + 1) * n]
    }

    /// Per-voxel `Σ_c |S_c|²`.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        let n = self.h * self.w;
        (0..n)
            .map(|v| (0..self.n_coils).map(|c| self.maps[c * n + v].norm_sqr()).sum())
            .collect()
    }

    /// Apply a virtual-coil projection `S' = P·S` to the coil dimension.
    pub fn project(&self, p: &crate::tensor::CMatrix) -> Result<Self> {
        if p.cols != self.n_coils {
            return Err(shape_err("projection columns must equal coil count"));
        }
        let n = self.h * self.w;
        let mut maps = vec![C64::new(0.0, 0.0); p.rows * n];
        for r in 0..p.rows {
            for c in 0..self.n_coils {
                let a = p.get(r, c);
                for v in 0..n {
                    maps[r * n + v] += a * self.maps[c * n + v];
                }
            }
        }
        Ok(Self {
            n_coils: p.rows,
            h: self.h,
            w: self.w,
            maps,
        })
    }
}

/// Smooth Gaussian-lobe coil profiles around the field-of-view perimeter,
/// normalized to unit sum-of-squares at every voxel.
pub fn simulate_sensitivities(h: usize, w: usize, n_coils: usize, seed: u64) -> Result<CoilSensitivities> {
    if n_coils == 0 || h == 0 || w == 0 {
        return Err(shape_err("need at least one coil and a non-empty grid"));
    }
    if n_coils == 1 {
        return Ok(CoilSensitivities::uniform(h, w));
    }
    let mut rng = RandomStream::new(seed);
    let size = h.max(w) as f64;
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let ring = 0.55 * size;
    let sigma = 0.45 * size;
    let n = h * w;
    let mut maps = vec![C64::new(0.0, 0.0); n_coils * n];
    for c in 0..n_coils {
        let angle = 2.0 * PI * (c as f64 + 0.25 * (rng.uniform() - 0.5)) / n_coils as f64;
        let (py, px) = (cy + ring * angle.sin(), cx + ring * angle.cos());
        let phase0 = 2.0 * PI * rng.uniform();
        for y in 0..h {
            for x in 0..w {
                let d2 = (y as f64 - py).powi(2) + (x as f64 - px).powi(2);
                let mag = (-d2 / (2.0 * sigma * sigma)).exp();
                let phase = phase0 + 0.5 * PI * d2.sqrt() / size;
                maps[c * n + y * w + x] = C64::from_polar(mag, phase);
            }
        }
    }
    for v in 0..n {
        let sos: f64 = (0..n_coils).map(|c| maps[c * n + v].norm_sqr()).sum::<f64>().sqrt();
        for c in 0..n_coils {
            maps[c * n + v] /= sos;
        }
    }
    CoilSensitivities::from_vec(n_coils, h, w, maps)
}
