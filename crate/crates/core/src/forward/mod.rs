//! Image ↔ k-space: sampling masks, coil sensitivities, the encoding operator
//! `A = M·F·S` with its adjoint, and k-space preprocessing.

mod coils;
mod kspace;
mod mask;
mod operator;
mod preprocess;

pub use coils::{simulate_sensitivities, CoilSensitivities};
pub use kspace::KSpaceData;
pub use mask::{default_calib, generate_poisson_mask, SamplingMask};
pub use operator::ForwardOperator;
pub use preprocess::{coil_compress, normalize_dataset, prewhiten, CoilCompression, NORM_TARGET};
