use alloc::vec;

use super::KSpaceData;
use crate::error::{domain_err, shape_err, Error, Result};
use crate::tensor::{cholesky, solve_lower, svd, CMatrix, C64};

/// Dataset norm after [`normalize_dataset`].
pub const NORM_TARGET: f64 = 1000.0;

/// Decorrelate coil noise: `y ← L⁻¹·y` with `noise_cov = L·L^H`.
pub fn prewhiten(y: &KSpaceData, noise_cov: &CMatrix) -> Result<KSpaceData> {
    let nc = y.n_coils();
    if noise_cov.rows != nc || noise_cov.cols != nc {
        return Err(shape_err(alloc::format!(
            "noise covariance must be {nc}×{nc}, got {}×{}",
            noise_cov.rows,
            noise_cov.cols
        )));
    }
    let l = cholesky(noise_cov)?;
    let per_coil = y.data().len() / nc;
    let mut out = y.clone();
    let data = out.data_mut();
    let mut v = vec![C64::new(0.0, 0.0); nc];
    for i in 0..per_coil {
        for c in 0..nc {
            v[c] = data[c * per_coil + i];
        }
        solve_lower(&l, &mut v);
        for c in 0..nc {
            data[c * per_coil + i] = v[c];
        }
    }
    Ok(out)
}

/// SVD-based virtual-coil projection.
#[derive(Clone, Debug)]
pub struct CoilCompression {
    /// `kept × coils`, rows orthonormal.
    projection: CMatrix,
    pub singular_values: alloc::vec::Vec<f64>,
}

impl CoilCompression {
    /// Keep the fewest virtual coils whose cumulative squared singular values
    /// reach `energy` of the total.
    pub fn fit(y: &KSpaceData, energy: f64) -> Result<Self> {
        if !(energy > 0.0 && energy <= 1.0) {
            return Err(domain_err("energy fraction must lie in (0, 1]"));
        }
        let nc = y.n_coils();
        let per_coil = y.data().len() / nc;
        let m = CMatrix::from_vec(nc, per_coil, y.data().to_vec());
        let dec = svd(&m);
        let total: f64 = dec.sigma.iter().map(|s| s * s).sum();
        let mut kept = dec.sigma.len();
        if energy < 1.0 && total > 0.0 {
            let mut acc = 0.0;
            for (i, s) in dec.sigma.iter().enumerate() {
                acc += s * s;
                if acc >= energy * total {
                    kept = i + 1;
                    break;
                }
            }
        }
        let mut projection = CMatrix::zeros(kept, nc);
        for r in 0..kept {
            for c in 0..nc {
                projection.set(r, c, dec.u.get(c, r).conj());
            }
        }
        Ok(Self {
            projection,
            singular_values: dec.sigma,
        })
    }

    pub fn kept(&self) -> usize {
        self.projection.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.projection
    }

    pub fn apply(&self, y: &KSpaceData) -> Result<KSpaceData> {
        let (nc, na, h, w) = y.dims();
        if nc != self.projection.cols {
            return Err(shape_err("coil count differs from the fitted compression"));
        }
        let per_coil = na * h * w;
        let kept = self.kept();
        let mut out = KSpaceData::zeros(kept, na, h, w);
        out.norm_scale = y.norm_scale;
        let src = y.data();
        let dst = out.data_mut();
        for r in 0..kept {
            for c in 0..nc {
                let a = self.projection.get(r, c);
                let s = &src[c * per_coil..(c + 1) * per_coil];
                let d = &mut dst[r * per_coil..(r + 1) * per_coil];
                for (o, v) in d.iter_mut().zip(s) {
                    *o += a * v;
                }
            }
        }
        Ok(out)
    }
}

pub fn coil_compress(y: &KSpaceData, energy: f64) -> Result<KSpaceData> {
    CoilCompression::fit(y, energy)?.apply(y)
}

/// Scale to `‖y‖₂ = 1000`; `norm_scale` accumulates the factor removed.
pub fn normalize_dataset(y: &KSpaceData) -> Result<KSpaceData> {
    let n = y.norm();
    if n == 0.0 {
        return Err(Error::AllZero("k-space data"));
    }
    let s = n / NORM_TARGET;
    let mut out = y.clone();
    for z in out.data_mut() {
        *z /= s;
    }
    out.norm_scale = y.norm_scale * s;
    Ok(out)
}
