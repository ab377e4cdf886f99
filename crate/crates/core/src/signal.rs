//! Spoiled gradient-echo (SPGR) signal model, T1 dictionaries and
//! matched-filter dictionary matching.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

use crate::error::{domain_err, shape_err, Result};
use crate::tensor::{ComplexGrid, C64};

/// Flip angles (radians, ascending) and repetition time (ms).
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionParams {
    flip_angles: Vec<f64>,
    tr: f64,
}

impl AcquisitionParams {
    pub fn new(flip_angles: Vec<f64>, tr: f64) -> Result<Self> {
        if flip_angles.len() < 2 {
            return Err(domain_err("need at least two flip angles"));
        }
        if !(tr > 0.0) {
            return Err(domain_err("repetition time must be positive"));
        }
        let half_pi = core::f64::consts::FRAC_PI_2;
        if flip_angles.iter().any(|&t| !(t > 0.0 && t <= half_pi + 1e-12)) {
            return Err(domain_err("flip angles must lie in (0, π/2]"));
        }
        if flip_angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain_err("flip angles must be strictly ascending"));
        }
        Ok(Self { flip_angles, tr })
    }

    pub fn from_degrees(degrees: &[f64], tr: f64) -> Result<Self> {
        Self::new(degrees.iter().map(|d| d.to_radians()).collect(), tr)
    }

    /// Nine angles 4°..20° in 2° steps, TR = 6.10 ms.
    pub fn vfa_protocol() -> Self {
        let deg: Vec<f64> = (0..9).map(|i| 4.0 + 2.0 * i as f64).collect();
        Self::from_degrees(&deg, 6.10).expect("protocol constants are valid")
    }

    pub fn flip_angles(&self) -> &[f64] {
        &self.flip_angles
    }

    pub fn tr(&self) -> f64 {
        self.tr
    }

    pub fn n_angles(&self) -> usize {
        self.flip_angles.len()
    }
}

/// `S0·sin θ·(1 − E)/(1 − cos θ·E)` with `E = exp(−TR/T1)`.
pub fn spgr_signal(theta: f64, tr: f64, t1: f64, s0: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(domain_err("T1 must be positive"));
    }
    if !(tr > 0.0) {
        return Err(domain_err("TR must be positive"));
    }
    let e = (-tr / t1).exp();
    Ok(s0 * theta.sin() * (1.0 - e) / (1.0 - theta.cos() * e))
}

/// Unit-norm SPGR atoms over a linear T1 grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpgrDictionary {
    t1_grid: Vec<f64>,
    n_angles: usize,
    /// Row-major `[n_t1 × n_angles]`.
    atoms: Vec<f64>,
}

pub const DEFAULT_T1_MIN: f64 = 50.0;
pub const DEFAULT_T1_MAX: f64 = 4000.0;
pub const DEFAULT_T1_COUNT: usize = 2000;

fn grid_value(t1_min: f64, t1_max: f64, n: usize, i: usize) -> f64 {
    if i == n - 1 {
        t1_max
    } else {
        t1_min + (t1_max - t1_min) / (n - 1) as f64 * i as f64
    }
}

/// Nearest value of the linear grid `build(_, t1_min, t1_max, n)` would
/// produce, bit-identical to the dictionary's own entry.
pub fn snap_t1(t1: f64, t1_min: f64, t1_max: f64, n: usize) -> f64 {
    let step = (t1_max - t1_min) / (n - 1) as f64;
    let i = ((t1 - t1_min) / step).round().clamp(0.0, (n - 1) as f64) as usize;
    grid_value(t1_min, t1_max, n, i)
}

impl SpgrDictionary {
    pub fn build(params: &AcquisitionParams, t1_min: f64, t1_max: f64, n: usize) -> Result<Self> {
        if !(t1_min > 0.0 && t1_min < t1_max) || n < 2 {
            return Err(domain_err("dictionary needs 0 < t1_min < t1_max and n ≥ 2"));
        }
        let t1_grid: Vec<f64> = (0..n).map(|i| grid_value(t1_min, t1_max, n, i)).collect();
        let k = params.n_angles();
        let mut atoms = Vec::with_capacity(n * k);
        for &t1 in &t1_grid {
            let start = atoms.len();
            for &theta in params.flip_angles() {
                atoms.push(spgr_signal(theta, params.tr(), t1, 1.0)?);
            }
            let norm = atoms[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut atoms[start..] {
                *v /= norm;
            }
        }
        Ok(Self {
            t1_grid,
            n_angles: k,
            atoms,
        })
    }

    /// 2000 atoms over [50, 4000] ms.
    pub fn with_defaults(params: &AcquisitionParams) -> Self {
        Self::build(params, DEFAULT_T1_MIN, DEFAULT_T1_MAX, DEFAULT_T1_COUNT)
            .expect("default dictionary range is valid")
    }

    pub fn t1_grid(&self) -> &[f64] {
        &self.t1_grid
    }

    pub fn len(&self) -> usize {
        self.t1_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t1_grid.is_empty()
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.n_angles..(i + 1) * self.n_angles]
    }

    /// Index of the grid value nearest to `t1`.
    pub fn nearest_index(&self, t1: f64) -> usize {
        let (lo, hi) = (self.t1_grid[0], self.t1_grid[self.len() - 1]);
        let step = (hi - lo) / (self.len() - 1) as f64;
        let i = ((t1 - lo) / step).round();
        i.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Best atom for a magnitude signal vector: `(index, correlation)`.
    /// Ties resolve to the lowest index.
    pub fn best_atom(&self, s: &[f64]) -> (usize, f64) {
        let k = self.n_angles;
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, atom) in self.atoms.chunks_exact(k).enumerate() {
            let c: f64 = atom.iter().zip(s).map(|(a, b)| a * b).sum();
            if c > best.1 {
                best = (i, c);
            }
        }
        best
    }
}

/// Per-voxel T1 (ms) and equilibrium signal S0.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantitativeMaps {
    pub h: usize,
    pub w: usize,
    pub t1: Vec<f64>,
    pub s0: Vec<f64>,
}

impl QuantitativeMaps {
    pub fn zeros(h: usize, w: usize, t1_fill: f64) -> Self {
        Self {
            h,
            w,
            t1: alloc::vec![t1_fill; h * w],
            s0: alloc::vec![0.0; h * w],
        }
    }
}

/// Coil-combined complex images, shape `[n_angles, h, w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VfaImageSeries(ComplexGrid);

impl VfaImageSeries {
    pub fn zeros(n_angles: usize, h: usize, w: usize) -> Self {
        Self(ComplexGrid::zeros(&[n_angles, h, w]))
    }

    pub fn from_grid(grid: ComplexGrid) -> Result<Self> {
        if grid.ndim() != 3 {
            return Err(shape_err(alloc::format!(
                "image series must be [angles, h, w], got {:?}",
                grid.shape()
            )));
        }
        Ok(Self(grid))
    }

    pub fn from_vec(n_angles: usize, h: usize, w: usize, data: Vec<C64>) -> Result<Self> {
        Ok(Self(ComplexGrid::from_vec(&[n_angles, h, w], data)?))
    }

    pub fn n_angles(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn h(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn w(&self) -> usize {
        self.0.shape()[2]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_angles(), self.h(), self.w())
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.0
    }

    pub fn into_grid(self) -> ComplexGrid {
        self.0
    }

    pub fn data(&self) -> &[C64] {
        self.0.data()
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        self.0.data_mut()
    }

    pub fn plane(&self, k: usize) -> &[C64] {
        self.0.plane(k)
    }

    pub fn plane_mut(&mut self, k: usize) -> &mut [C64] {
        self.0.plane_mut(k)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        self.0.same_shape(&other.0)
    }
}

/// Fit every voxel to the dictionary.
///
/// Returns the T1/S0 maps and the model-consistent series `x_m` whose voxel
/// series is `s0·atom` carrying the phase of the first flip-angle sample.
pub fn dictionary_match(
    x: &VfaImageSeries,
    dict: &SpgrDictionary,
) -> Result<(QuantitativeMaps, VfaImageSeries)> {
    let (k, h, w) = x.dims();
    if k != dict.n_angles() {
        return Err(shape_err(alloc::format!(
            "series has {k} flip angles, dictionary atoms have {}",
            dict.n_angles()
        )));
    }
    let n = h * w;
    let mut maps = QuantitativeMaps::zeros(h, w, dict.t1_grid()[0]);
    let mut xm = VfaImageSeries::zeros(k, h, w);
    let data = x.data();
    let mut s = alloc::vec![0.0; k];
    for v in 0..n {
        for (a, sa) in s.iter_mut().enumerate() {
            *sa = data[a * n + v].norm();
        }
        let (idx, corr) = dict.best_atom(&s);
        let s0 = corr.max(0.0);
        maps.t1[v] = dict.t1_grid()[idx];
        maps.s0[v] = s0;
        let first = data[v];
        let phase = if first.norm() > 0.0 {
            first / first.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let atom = dict.atom(idx);
        let out = xm.data_mut();
        for a in 0..k {
            out[a * n + v] = phase * (s0 * atom[a]);
        }
    }
    Ok((maps, xm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flip_angle_gives_zero() {
        assert_eq!(spgr_signal(0.0, 6.1, 1000.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn long_tr_limit_is_s0_sin_theta() {
        let theta = 0.3f64;
        let v = spgr_signal(theta, 1e6, 1.0, 2.5).unwrap();
        assert!((v - 2.5 * theta.sin()).abs() <= 1e-12);
    }

    #[test]
    fn non_positive_t1_is_domain_error() {
        assert!(spgr_signal(0.1, 6.1, 0.0, 1.0).is_err());
        assert!(spgr_signal(0.1, 6.1, -5.0, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(AcquisitionParams::from_degrees(&[10.0], 6.1).is_err());
        assert!(AcquisitionParams::from_degrees(&[10.0, 5.0], 6.1).is_err());
        assert!(AcquisitionParams::from_degrees(&[10.0, 95.0], 6.1).is_err());
        assert!(AcquisitionParams::from_degrees(&[4.0, 8.0], 0.0).is_err());
        assert_eq!(AcquisitionParams::vfa_protocol().n_angles(), 9);
    }

    #[test]
    fn dictionary_grid_and_norms() {
        let p = AcquisitionParams::vfa_protocol();
        let d = SpgrDictionary::with_defaults(&p);
        assert_eq!(d.len(), 2000);
        let step = (4000.0 - 50.0) / 1999.0;
        assert!((d.t1_grid()[1] - d.t1_grid()[0] - step).abs() < 1e-12);
        for i in 0..d.len() {
            let n: f64 = d.atom(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-12);
        }
        let d2 = SpgrDictionary::build(&p, 50.0, 4000.0, 2).unwrap();
        assert_eq!(d2.t1_grid(), &[50.0, 4000.0]);
        assert!(SpgrDictionary::build(&p, 100.0, 50.0, 10).is_err());
        assert!(SpgrDictionary::build(&p, 50.0, 100.0, 1).is_err());
    }

    #[test]
    fn zero_voxel_takes_first_grid_entry() {
        let p = AcquisitionParams::vfa_protocol();
        let d = SpgrDictionary::build(&p, 50.0, 4000.0, 100).unwrap();
        let x = VfaImageSeries::zeros(9, 1, 1);
        let (maps, xm) = dictionary_match(&x, &d).unwrap();
        assert_eq!(maps.t1[0], 50.0);
        assert_eq!(maps.s0[0], 0.0);
        assert!(xm.data().iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn mismatched_angle_count_is_shape_error() {
        let p = AcquisitionParams::vfa_protocol();
        let d = SpgrDictionary::build(&p, 50.0, 4000.0, 10).unwrap();
        let x = VfaImageSeries::zeros(3, 2, 2);
        assert!(matches!(dictionary_match(&x, &d), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn phase_of_first_angle_is_carried() {
        let p = AcquisitionParams::vfa_protocol();
        let d = SpgrDictionary::build(&p, 50.0, 4000.0, 50).unwrap();
        let phase = C64::new(0.0, 1.0);
        let atom = d.atom(20).to_vec();
        let data: Vec<C64> = atom.iter().map(|a| phase * (3.0 * a)).collect();
        let x = VfaImageSeries::from_vec(9, 1, 1, data.clone()).unwrap();
        let (maps, xm) = dictionary_match(&x, &d).unwrap();
        assert_eq!(maps.t1[0], d.t1_grid()[20]);
        for (a, b) in xm.data().iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
