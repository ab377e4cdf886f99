//! Physics-regularized untrained-decoder reconstruction of accelerated
//! variable-flip-angle (VFA) MRI.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the filesystem, clocks or threads lives in the `cdr` companion crate.
//!
//! Module map:
//! - [`tensor`]: complex grids, centered orthonormal FFT, small dense linear
//!   algebra (Jacobi SVD, Cholesky), counter-based random streams.
//! - [`signal`]: the spoiled gradient-echo signal equation, T1 dictionaries
//!   and dictionary matching.
//! - [`forward`]: sampling masks, coil sensitivities, the encoding operator
//!   and its adjoint, prewhitening, coil compression, normalization.
//! - [`phantom`]: reference T1/S0 phantoms and noisy dataset synthesis.
//! - [`net`]: the ConvDecoder generator with hand-written reverse mode and Adam.
//! - [`training`]: CD / CD+r loops, Savitzky-Golay smoothing, stop selection.
//! - [`baselines`]: L1-wavelet FISTA and locally-low-rank reconstructions.
//! - [`metrics`]: NRMSE, SSIM, CCC and the Wilcoxon rank-sum test.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod forward;
pub mod metrics;
pub mod net;
pub mod phantom;
pub mod signal;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{ComplexGrid, RandomStream, RealGrid, C64};
