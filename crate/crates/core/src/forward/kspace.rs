use alloc::vec::Vec;

use crate::error::{shape_err, Result};
use crate::tensor::{ComplexGrid, C64};

/// Multi-coil k-space `[coils, angles, h, w]` with the normalization factor
/// applied so far (`norm_scale · samples` is the original data).
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData {
    samples: ComplexGrid,
    pub norm_scale: f64,
}

impl KSpaceData {
    pub fn zeros(coils: usize, angles: usize, h: usize, w: usize) -> Self {
        Self {
            samples: ComplexGrid::zeros(&[coils, angles, h, w]),
            norm_scale: 1.0,
        }
    }

    pub fn from_grid(samples: ComplexGrid) -> Result<Self> {
        if samples.ndim() != 4 {
            return Err(shape_err(alloc::format!(
                "k-space must be [coils, angles, h, w], got {:?}",
                samples.shape()
            )));
        }
        Ok(Self {
            samples,
            norm_scale: 1.0,
        })
    }

    pub fn from_vec(coils: usize, angles: usize, h: usize, w: usize, data: Vec<C64>) -> Result<Self> {
        Self::from_grid(ComplexGrid::from_vec(&[coils, angles, h, w], data)?)
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let s = self.samples.shape();
        (s[0], s[1], s[2], s[3])
    }

    pub fn n_coils(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.samples
    }

    pub fn data(&self) -> &[C64] {
        self.samples.data()
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        self.samples.data_mut()
    }

    /// Plane for coil `c`, angle `k`.
    pub fn plane(&self, c: usize, k: usize) -> &[C64] {
        let (_, na, _, _) = self.dims();
        self.samples.plane(c * na + k)
    }

    pub fn plane_mut(&mut self, c: usize, k: usize) -> &mut [C64] {
        let (_, na, _, _) = self.dims();
        self.samples.plane_mut(c * na + k)
    }

    pub fn norm(&self) -> f64 {
        self.samples.norm()
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        self.samples.same_shape(&other.samples)
    }
}
