use alloc::vec::Vec;

use super::{CoilSensitivities, KSpaceData, SamplingMask};
use crate::error::{shape_err, Result};
use crate::signal::VfaImageSeries;
use crate::tensor::{Fft2Plan, C64};

/// The encoding operator `A = M·F·S`.
#[derive(Clone, Debug)]
pub struct ForwardOperator {
    mask: SamplingMask,
    sens: CoilSensitivities,
    plan: Fft2Plan,
}

impl ForwardOperator {
    pub fn new(mask: SamplingMask, sens: CoilSensitivities) -> Result<Self> {
        let (_, mh, mw) = mask.dims();
        let (_, sh, sw) = sens.dims();
        if (mh, mw) != (sh, sw) {
            return Err(shape_err(alloc::format!(
                "mask plane {mh}×{mw} does not match sensitivities {sh}×{sw}"
            )));
        }
        Ok(Self {
            plan: Fft2Plan::new(mh, mw),
            mask,
            sens,
        })
    }

    /// Operator with every k-space sample acquired.
    pub fn fully_sampled(sens: CoilSensitivities, n_angles: usize) -> Self {
        let (_, h, w) = sens.dims();
        Self::new(SamplingMask::full(n_angles, h, w), sens).expect("shapes agree by construction")
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn sens(&self) -> &CoilSensitivities {
        &self.sens
    }

    pub fn with_mask(&self, mask: SamplingMask) -> Result<Self> {
        Self::new(mask, self.sens.clone())
    }

    fn check_image(&self, x: &VfaImageSeries) -> Result<()> {
        if x.dims() != self.mask.dims() {
            return Err(shape_err(alloc::format!(
                "image series {:?} does not match operator {:?}",
                x.dims(),
                self.mask.dims()
            )));
        }
        Ok(())
    }

    fn check_kspace(&self, y: &KSpaceData) -> Result<()> {
        let (k, h, w) = self.mask.dims();
        if y.dims() != (self.sens.n_coils(), k, h, w) {
            return Err(shape_err(alloc::format!(
                "k-space {:?} does not match operator ({}, {k}, {h}, {w})",
                y.dims(),
                self.sens.n_coils()
            )));
        }
        Ok(())
    }

    /// `y_{c,k} = M_k ⊙ F(S_c ⊙ x_k)`
    pub fn apply_forward(&self, x: &VfaImageSeries) -> Result<KSpaceData> {
        self.check_image(x)?;
        let (na, h, w) = x.dims();
        let nc = self.sens.n_coils();
        let mut y = KSpaceData::zeros(nc, na, h, w);
        let mut scratch = Vec::new();
        for c in 0..nc {
            let s = self.sens.map(c);
            for k in 0..na {
                let xk = x.plane(k);
                let mk = self.mask.plane(k);
                let out = y.plane_mut(c, k);
                for ((o, a), b) in out.iter_mut().zip(s).zip(xk) {
                    *o = a * b;
                }
                self.plan.forward(out, &mut scratch);
                apply_mask(out, mk);
            }
        }
        Ok(y)
    }

    /// `x_k = Σ_c conj(S_c) ⊙ F⁻¹(M_k ⊙ y_{c,k})`
    pub fn apply_adjoint(&self, y: &KSpaceData) -> Result<VfaImageSeries> {
        self.check_kspace(y)?;
        let (nc, na, h, w) = y.dims();
        let mut x = VfaImageSeries::zeros(na, h, w);
        let mut buf = alloc::vec![C64::new(0.0, 0.0); h * w];
        let mut scratch = Vec::new();
        for k in 0..na {
            let mk = self.mask.plane(k);
            for c in 0..nc {
                buf.copy_from_slice(y.plane(c, k));
                apply_mask(&mut buf, mk);
                self.plan.inverse(&mut buf, &mut scratch);
                let s = self.sens.map(c);
                for ((o, a), b) in x.plane_mut(k).iter_mut().zip(s).zip(&buf) {
                    *o += a.conj() * b;
                }
            }
        }
        Ok(x)
    }

    /// Zero out unsampled entries of `y` (retrospective undersampling).
    pub fn undersample(&self, y: &KSpaceData) -> Result<KSpaceData> {
        self.check_kspace(y)?;
        let (nc, na, _, _) = y.dims();
        let mut out = y.clone();
        for c in 0..nc {
            for k in 0..na {
                apply_mask(out.plane_mut(c, k), self.mask.plane(k));
            }
        }
        Ok(out)
    }

    /// `A^H A x`.
    pub fn normal(&self, x: &VfaImageSeries) -> Result<VfaImageSeries> {
        self.apply_adjoint(&self.apply_forward(x)?)
    }
}

fn apply_mask(plane: &mut [C64], mask: &[u8]) {
    for (z, &m) in plane.iter_mut().zip(mask) {
        if m == 0 {
            *z = C64::new(0.0, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::simulate_sensitivities;

    #[test]
    fn zero_in_zero_out() {
        let op = ForwardOperator::fully_sampled(simulate_sensitivities(8, 8, 2, 0).unwrap(), 3);
        let y = op.apply_forward(&VfaImageSeries::zeros(3, 8, 8)).unwrap();
        assert_eq!(y.norm(), 0.0);
        let x = op.apply_adjoint(&KSpaceData::zeros(2, 3, 8, 8)).unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let op = ForwardOperator::fully_sampled(CoilSensitivities::uniform(8, 8), 3);
        assert!(op.apply_forward(&VfaImageSeries::zeros(2, 8, 8)).is_err());
        assert!(op.apply_adjoint(&KSpaceData::zeros(2, 3, 8, 8)).is_err());
        let mask = SamplingMask::full(3, 4, 4);
        assert!(ForwardOperator::new(mask, CoilSensitivities::uniform(8, 8)).is_err());
    }
}
