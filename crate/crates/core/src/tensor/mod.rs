//! Numerical foundation shared by every other module.

mod fft;
mod grid;
mod linalg;
mod rng;

pub use fft::{fft2_centered, ifft2_centered, Fft1, Fft2Plan};
pub use grid::{ComplexGrid, RealGrid};
pub use linalg::{cholesky, solve_lower, svd, CMatrix, Svd};
pub use rng::{gaussian, RandomStream};

pub type C64 = num_complex::Complex<f64>;

/// `Σ conj(a)·b`, the inner product used for every adjoint identity.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b)
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
