//! Piecewise-constant T1/S0 phantoms and noisy model-consistent datasets.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{domain_err, shape_err, Result};
use crate::forward::{normalize_dataset, CoilSensitivities, ForwardOperator, KSpaceData};
use crate::signal::{
    snap_t1, spgr_signal, AcquisitionParams, QuantitativeMaps, VfaImageSeries, DEFAULT_T1_COUNT,
    DEFAULT_T1_MAX, DEFAULT_T1_MIN,
};
use crate::tensor::{RandomStream, C64};

/// Ellipse in pixel coordinates, rotated by `angle` radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub cy: f64,
    pub cx: f64,
    pub ry: f64,
    pub rx: f64,
    pub angle: f64,
}

impl Ellipse {
    pub fn contains(&self, y: f64, x: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dy, dx) = (y - self.cy, x - self.cx);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.rx).powi(2) + (v / self.ry).powi(2) <= 1.0
    }

    pub fn area(&self) -> f64 {
        core::f64::consts::PI * self.rx * self.ry
    }

    fn inside_plane(&self, h: usize, w: usize) -> bool {
        // Bounding half-extents of the rotated ellipse.
        let (s, c) = self.angle.sin_cos();
        let ey = ((self.rx * s).powi(2) + (self.ry * c).powi(2)).sqrt();
        let ex = ((self.rx * c).powi(2) + (self.ry * s).powi(2)).sqrt();
        self.cy - ey >= -0.5
            && self.cy + ey <= h as f64 - 0.5
            && self.cx - ex >= -0.5
            && self.cx + ex <= w as f64 - 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub shape: Ellipse,
    pub t1: f64,
    pub s0: f64,
}

/// Later regions paint over earlier ones; uncovered pixels are background
/// (s0 = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub h: usize,
    pub w: usize,
    pub regions: Vec<Region>,
    pub noise_snr: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Three nested ellipses: T1 ≈ 800 / 1400 / 3000 ms, s0 = 1 / 0.8 / 0.9.
    pub fn brain_like(h: usize, w: usize, noise_snr: f64, seed: u64) -> Self {
        let (hf, wf) = (h as f64, w as f64);
        let (cy, cx) = ((hf - 1.0) / 2.0, (wf - 1.0) / 2.0);
        let region = |dy: f64, dx: f64, ry: f64, rx: f64, angle: f64, t1: f64, s0: f64| Region {
            shape: Ellipse {
                cy: cy + dy * hf,
                cx: cx + dx * wf,
                ry: ry * hf,
                rx: rx * wf,
                angle,
            },
            t1,
            s0,
        };
        Self {
            h,
            w,
            regions: alloc::vec![
                region(0.0, 0.0, 0.42, 0.34, 0.0, 800.0, 1.0),
                region(0.03, -0.02, 0.26, 0.20, 0.3, 1400.0, 0.8),
                region(-0.02, 0.03, 0.10, 0.06, -0.2, 3000.0, 0.9),
            ],
            noise_snr,
            seed,
        }
    }
}

/// Rasterize the spec by pixel-center sampling. T1 values are snapped to the
/// default dictionary grid; background T1 is the first grid entry.
pub fn make_reference_phantom(spec: &PhantomSpec) -> Result<QuantitativeMaps> {
    if spec.h == 0 || spec.w == 0 {
        return Err(shape_err("phantom plane must be non-empty"));
    }
    for r in &spec.regions {
        if !(r.t1 >= DEFAULT_T1_MIN && r.t1 <= DEFAULT_T1_MAX) {
            return Err(domain_err(alloc::format!(
                "region T1 {} ms outside [{DEFAULT_T1_MIN}, {DEFAULT_T1_MAX}]",
                r.t1
            )));
        }
        if !(r.s0 >= 0.0) {
            return Err(domain_err("region s0 must be non-negative"));
        }
        if !(r.shape.rx > 0.0 && r.shape.ry > 0.0) || !r.shape.inside_plane(spec.h, spec.w) {
            return Err(domain_err("ellipse must be non-degenerate and inside the plane"));
        }
    }
    let mut maps = QuantitativeMaps::zeros(spec.h, spec.w, DEFAULT_T1_MIN);
    for r in &spec.regions {
        let t1 = snap_t1(r.t1, DEFAULT_T1_MIN, DEFAULT_T1_MAX, DEFAULT_T1_COUNT);
        for y in 0..spec.h {
            for x in 0..spec.w {
                if r.shape.contains(y as f64, x as f64) {
                    maps.t1[y * spec.w + x] = t1;
                    maps.s0[y * spec.w + x] = r.s0;
                }
            }
        }
    }
    Ok(maps)
}

/// Noise-free SPGR series for the maps (zero phase).
pub fn model_series(maps: &QuantitativeMaps, params: &AcquisitionParams) -> Result<VfaImageSeries> {
    let n = maps.h * maps.w;
    if maps.t1.len() != n || maps.s0.len() != n {
        return Err(shape_err("map planes do not match h×w"));
    }
    let k = params.n_angles();
    let mut x = VfaImageSeries::zeros(k, maps.h, maps.w);
    for (a, &theta) in params.flip_angles().iter().enumerate() {
        let plane = x.plane_mut(a);
        for v in 0..n {
            plane[v] = C64::new(spgr_signal(theta, params.tr(), maps.t1[v], maps.s0[v])?, 0.0);
        }
    }
    Ok(x)
}

/// Add complex Gaussian noise with per-component standard deviation `sigma`.
pub fn add_noise(y: &mut KSpaceData, sigma: f64, stream: &mut RandomStream) {
    for z in y.data_mut() {
        let re = stream.normal();
        let im = stream.normal();
        *z += C64::new(sigma * re, sigma * im);
    }
}

/// Fully sampled noisy k-space and the matching ground-truth series.
///
/// Noise has per-component std `‖y‖/(snr·√(2·N))` so that `‖y‖/‖noise‖ ≈ snr`
/// (`snr = ∞` adds none). The data are then normalized to norm 1000 and the
/// returned `x_gt` is scaled by the same factor, so `A·x_gt` is the noise-free
/// part of the returned k-space.
pub fn synthesize_dataset(
    maps: &QuantitativeMaps,
    params: &AcquisitionParams,
    sens: &CoilSensitivities,
    snr: f64,
    seed: u64,
) -> Result<(KSpaceData, VfaImageSeries)> {
    if !(snr > 0.0) {
        return Err(domain_err("snr must be positive (or infinite)"));
    }
    let (_, sh, sw) = sens.dims();
    if (sh, sw) != (maps.h, maps.w) {
        return Err(shape_err("sensitivity plane does not match the maps"));
    }
    let mut x = model_series(maps, params)?;
    let op = ForwardOperator::fully_sampled(sens.clone(), params.n_angles());
    let mut y = op.apply_forward(&x)?;
    if snr.is_finite() {
        let count = y.data().len() as f64;
        let sigma = y.norm() / (snr * (2.0 * count).sqrt());
        add_noise(&mut y, sigma, &mut RandomStream::new(seed));
    }
    let y = normalize_dataset(&y)?;
    for z in x.data_mut() {
        *z /= y.norm_scale;
    }
    Ok((y, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_gives_zero_maps() {
        let spec = PhantomSpec {
            h: 8,
            w: 8,
            regions: Vec::new(),
            noise_snr: f64::INFINITY,
            seed: 0,
        };
        let m = make_reference_phantom(&spec).unwrap();
        assert!(m.s0.iter().all(|&v| v == 0.0));
        assert!(m.t1.iter().all(|&v| v == DEFAULT_T1_MIN));
    }

    #[test]
    fn out_of_range_t1_is_rejected() {
        let mut spec = PhantomSpec::brain_like(32, 32, 20.0, 0);
        spec.regions[1].t1 = 4500.0;
        assert!(make_reference_phantom(&spec).is_err());
        spec.regions[1].t1 = 10.0;
        assert!(make_reference_phantom(&spec).is_err());
    }

    #[test]
    fn ellipse_outside_plane_is_rejected() {
        let mut spec = PhantomSpec::brain_like(32, 32, 20.0, 0);
        spec.regions[0].shape.cx = 30.0;
        assert!(make_reference_phantom(&spec).is_err());
    }

    #[test]
    fn default_phantom_values_are_snapped() {
        let m = make_reference_phantom(&PhantomSpec::brain_like(64, 64, 20.0, 0)).unwrap();
        let mut distinct: Vec<f64> = m.t1.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
        for t in distinct {
            assert_eq!(t, snap_t1(t, DEFAULT_T1_MIN, DEFAULT_T1_MAX, DEFAULT_T1_COUNT));
        }
    }

    #[test]
    fn zero_signal_cannot_be_normalized() {
        let maps = QuantitativeMaps::zeros(8, 8, DEFAULT_T1_MIN);
        let p = AcquisitionParams::vfa_protocol();
        let sens = CoilSensitivities::uniform(8, 8);
        assert!(synthesize_dataset(&maps, &p, &sens, 20.0, 1).is_err());
    }
}
