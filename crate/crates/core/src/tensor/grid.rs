#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;

use super::{norm_sqr, C64};
use crate::error::{shape_err, Result};

/// Row-major complex N-D array.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexGrid {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err(alloc::format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(crate::error::domain_err("non-finite value in grid"));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.data).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// Contiguous trailing 2-D plane `index` (all leading axes flattened).
    pub fn plane(&self, index: usize) -> &[C64] {
        let n = self.plane_len();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn plane_mut(&mut self, index: usize) -> &mut [C64] {
        let n = self.plane_len();
        &mut self.data[index * n..(index + 1) * n]
    }

    fn plane_len(&self) -> usize {
        let d = self.shape.len();
        match d {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[d - 2] * self.shape[d - 1],
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_err(alloc::format!(
                "shapes {:?} and {:?} differ",
                self.shape,
                other.shape
            )));
        }
        Ok(())
    }
}

/// Row-major real N-D array.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err(alloc::format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}
