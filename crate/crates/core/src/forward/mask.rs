#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain_err, shape_err, Error, Result};
use crate::tensor::RandomStream;

/// Binary k-space sampling pattern, one plane per flip angle.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    n_angles: usize,
    h: usize,
    w: usize,
    /// `[n_angles, h, w]`, values 0 or 1.
    grid: Vec<u8>,
    pub target_r: f64,
    pub calib: usize,
    pub seed: u64,
}

/// Calibration side scaled from 25 px at 224 px, never below 8.
pub fn default_calib(h: usize) -> usize {
    let scaled = (25.0 * h as f64 / 224.0).round() as usize;
    scaled.max(8).min(h)
}

const ROUNDS: usize = 30;
const TOLERANCE: f64 = 0.10;

impl SamplingMask {
    pub fn full(n_angles: usize, h: usize, w: usize) -> Self {
        Self {
            n_angles,
            h,
            w,
            grid: vec![1; n_angles * h * w],
            target_r: 1.0,
            calib: h.min(w),
            seed: 0,
        }
    }

    /// Wrap explicit planes (e.g. loaded from disk). Values must be 0 or 1.
    pub fn from_planes(
        n_angles: usize,
        h: usize,
        w: usize,
        grid: Vec<u8>,
        target_r: f64,
        calib: usize,
        seed: u64,
    ) -> Result<Self> {
        if grid.len() != n_angles * h * w {
            return Err(shape_err("mask data length does not match [angles, h, w]"));
        }
        if grid.iter().any(|&v| v > 1) {
            return Err(domain_err("mask values must be binary"));
        }
        Ok(Self {
            n_angles,
            h,
            w,
            grid,
            target_r,
            calib,
            seed,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_angles, self.h, self.w)
    }

    pub fn data(&self) -> &[u8] {
        &self.grid
    }

    pub fn plane(&self, k: usize) -> &[u8] {
        let n = self.h * self.w;
        &self.grid[k * n..(k + 1) * n]
    }

    pub fn sampled(&self) -> usize {
        self.grid.iter().map(|&v| v as usize).sum()
    }

    /// Total points over sampled points, across all planes.
    pub fn acceleration(&self) -> f64 {
        self.grid.len() as f64 / self.sampled().max(1) as f64
    }

    pub fn plane_acceleration(&self, k: usize) -> f64 {
        let p = self.plane(k);
        p.len() as f64 / p.iter().map(|&v| v as usize).sum::<usize>().max(1) as f64
    }

    /// Bounds of the fully sampled calibration square `(y0, x0, side)`.
    pub fn calib_region(&self) -> (usize, usize, usize) {
        calib_bounds(self.h, self.w, self.calib)
    }
}

fn calib_bounds(h: usize, w: usize, calib: usize) -> (usize, usize, usize) {
    // Centered on the DC sample at (h/2, w/2).
    let y0 = (h / 2).saturating_sub(calib / 2);
    let x0 = (w / 2).saturating_sub(calib / 2);
    (y0.min(h - calib.min(h)), x0.min(w - calib.min(w)), calib)
}

/// Variable-density Poisson-disc masks.
///
/// Darts are thrown in a seeded random order; a candidate is accepted when no
/// accepted point lies closer than `r(k) = r0·(1 + 2·|k|/k_max)`. `r0` is
/// tuned by bisection until the plane's acceleration is within ±10% of the
/// target. Each flip angle draws from its own child stream of `seed`.
pub fn generate_poisson_mask(
    h: usize,
    w: usize,
    n_angles: usize,
    target_r: f64,
    calib: usize,
    seed: u64,
) -> Result<SamplingMask> {
    if h == 0 || w == 0 || n_angles == 0 {
        return Err(shape_err("mask dimensions must be positive"));
    }
    if calib > h.min(w) {
        return Err(domain_err("calibration region larger than the grid"));
    }
    if !(target_r >= 1.0) {
        return Err(domain_err("target acceleration must be ≥ 1"));
    }
    if target_r == 1.0 {
        let mut m = SamplingMask::full(n_angles, h, w);
        m.calib = calib;
        m.seed = seed;
        return Ok(m);
    }
    let root = RandomStream::new(seed);
    let mut grid = Vec::with_capacity(n_angles * h * w);
    for k in 0..n_angles {
        let mut stream = root.split(k as u64);
        grid.extend(tune_plane(h, w, target_r, calib, &mut stream)?);
    }
    Ok(SamplingMask {
        n_angles,
        h,
        w,
        grid,
        target_r,
        calib,
        seed,
    })
}

fn tune_plane(
    h: usize,
    w: usize,
    target_r: f64,
    calib: usize,
    stream: &mut RandomStream,
) -> Result<Vec<u8>> {
    let mut order: Vec<u32> = (0..(h * w) as u32).collect();
    stream.shuffle(&mut order);
    let dart = DartBoard::new(h, w, calib);
    let total = (h * w) as f64;
    let (mut lo, mut hi) = (0.0f64, h.max(w) as f64);
    let mut best: Option<(f64, Vec<u8>)> = None;
    for _ in 0..ROUNDS {
        let r0 = 0.5 * (lo + hi);
        let plane = dart.throw(&order, r0);
        let count = plane.iter().map(|&v| v as usize).sum::<usize>().max(1);
        let achieved = total / count as f64;
        let err = (achieved - target_r).abs() / target_r;
        if best.as_ref().map_or(true, |(e, _)| err < *e) {
            best = Some((err, plane));
        }
        if err <= TOLERANCE {
            break;
        }
        if achieved < target_r {
            lo = r0;
        } else {
            hi = r0;
        }
    }
    match best {
        Some((err, plane)) if err <= TOLERANCE => Ok(plane),
        Some((err, _)) => Err(Error::Tuning {
            target: target_r,
            achieved: target_r * (1.0 + err),
        }),
        None => unreachable!("at least one bisection round runs"),
    }
}

struct DartBoard {
    h: usize,
    w: usize,
    calib: (usize, usize, usize),
    /// Normalized k-space radius per pixel, in [0, 1].
    radius: Vec<f64>,
}

impl DartBoard {
    fn new(h: usize, w: usize, calib: usize) -> Self {
        let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
        let (ry, rx) = ((h as f64 / 2.0).max(1.0), (w as f64 / 2.0).max(1.0));
        let mut radius = Vec::with_capacity(h * w);
        for y in 0..h {
            for x in 0..w {
                let dy = (y as f64 - cy) / ry;
                let dx = (x as f64 - cx) / rx;
                radius.push(((dy * dy + dx * dx) / 2.0).sqrt().min(1.0));
            }
        }
        Self {
            h,
            w,
            calib: calib_bounds(h, w, calib),
            radius,
        }
    }

    fn in_calib(&self, y: usize, x: usize) -> bool {
        let (y0, x0, s) = self.calib;
        y >= y0 && y < y0 + s && x >= x0 && x < x0 + s
    }

    fn throw(&self, order: &[u32], r0: f64) -> Vec<u8> {
        let (h, w) = (self.h, self.w);
        let mut occ = vec![0u8; h * w];
        let mut accepted: Vec<(isize, isize)> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if self.in_calib(y, x) {
                    occ[y * w + x] = 1;
                    accepted.push((y as isize, x as isize));
                }
            }
        }
        let rmax = 3.0 * r0;
        let reach = rmax.ceil() as isize;
        // Neighbor offsets sorted by distance so conflicts are found early.
        let mut offsets: Vec<(f64, isize, isize)> = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = ((dy * dy + dx * dx) as f64).sqrt();
                if (dy != 0 || dx != 0) && d < rmax {
                    offsets.push((d, dy, dx));
                }
            }
        }
        offsets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
        for &idx in order {
            let idx = idx as usize;
            if occ[idx] == 1 {
                continue;
            }
            let (y, x) = ((idx / w) as isize, (idx % w) as isize);
            let r = r0 * (1.0 + 2.0 * self.radius[idx]);
            // Same test either way; walk whichever list is shorter.
            let free = if (accepted.len() as f64) < 3.2 * r * r {
                accepted.iter().all(|&(ay, ax)| {
                    let (dy, dx) = (ay - y, ax - x);
                    ((dy * dy + dx * dx) as f64).sqrt() >= r
                })
            } else {
                let mut free = true;
                for &(d, dy, dx) in &offsets {
                    if d >= r {
                        break;
                    }
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    if occ[ny as usize * w + nx as usize] == 1 {
                        free = false;
                        break;
                    }
                }
                free
            };
            if free {
                occ[idx] = 1;
                accepted.push((y, x));
            }
        }
        occ
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_throw(board: &DartBoard, order: &[u32], r0: f64) -> Vec<u8> {
        let (h, w) = (board.h, board.w);
        let mut occ: Vec<u8> = (0..h * w).map(|i| board.in_calib(i / w, i % w) as u8).collect();
        for &idx in order {
            let idx = idx as usize;
            if occ[idx] == 1 {
                continue;
            }
            let r = r0 * (1.0 + 2.0 * board.radius[idx]);
            let (y, x) = ((idx / w) as isize, (idx % w) as isize);
            let clash = (0..h * w).any(|j| {
                let (dy, dx) = ((j / w) as isize - y, (j % w) as isize - x);
                occ[j] == 1 && ((dy * dy + dx * dx) as f64).sqrt() < r
            });
            if !clash {
                occ[idx] = 1;
            }
        }
        occ
    }

    #[test]
    fn dart_throw_matches_all_pairs_check() {
        let (h, w) = (24, 20);
        let board = DartBoard::new(h, w, 6);
        for seed in 0..4 {
            let mut order: Vec<u32> = (0..(h * w) as u32).collect();
            RandomStream::new(seed).shuffle(&mut order);
            for r0 in [0.3, 0.8, 1.3, 2.7, 6.0, 15.0] {
                assert_eq!(board.throw(&order, r0), naive_throw(&board, &order, r0), "seed {seed} r0 {r0}");
            }
        }
    }

    #[test]
    fn unit_target_is_all_ones() {
        let m = generate_poisson_mask(16, 16, 3, 1.0, 4, 1).unwrap();
        assert!(m.data().iter().all(|&v| v == 1));
    }

    #[test]
    fn calibration_larger_than_grid_is_rejected() {
        assert!(generate_poisson_mask(16, 16, 1, 4.0, 17, 1).is_err());
        assert!(generate_poisson_mask(16, 16, 1, 0.5, 4, 1).is_err());
    }

    #[test]
    fn unreachable_target_reports_tuning_error() {
        // A 16×16 calibration square on a 16×16 grid can never be accelerated.
        let err = generate_poisson_mask(16, 16, 1, 4.0, 16, 1).unwrap_err();
        assert!(matches!(err, Error::Tuning { .. }));
    }

    #[test]
    fn sixty_four_at_r8_with_calib_12() {
        let m = generate_poisson_mask(64, 64, 9, 8.0, 12, 5).unwrap();
        for k in 0..9 {
            let frac = 1.0 / m.plane_acceleration(k);
            assert!(frac >= 1.0 / 8.8 && frac <= 1.0 / 7.2, "plane {k}: {frac}");
        }
        let (y0, x0, s) = m.calib_region();
        for k in 0..9 {
            for y in y0..y0 + s {
                for x in x0..x0 + s {
                    assert_eq!(m.plane(k)[y * 64 + x], 1);
                }
            }
        }
    }

    #[test]
    fn paper_calibration_square_on_224() {
        let m = generate_poisson_mask(224, 224, 1, 8.0, 25, 3).unwrap();
        let (y0, x0, s) = m.calib_region();
        assert_eq!(s, 25);
        assert!(y0 <= 112 && y0 + 25 > 112 && x0 <= 112 && x0 + 25 > 112);
        for y in y0..y0 + s {
            for x in x0..x0 + s {
                assert_eq!(m.plane(0)[y * 224 + x], 1);
            }
        }
    }

    #[test]
    fn planes_differ_per_angle_and_seed_is_deterministic() {
        let a = generate_poisson_mask(32, 32, 2, 4.0, 8, 11).unwrap();
        let b = generate_poisson_mask(32, 32, 2, 4.0, 8, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.plane(0), a.plane(1));
    }

    #[test]
    fn default_calibration_side() {
        assert_eq!(default_calib(224), 25);
        assert_eq!(default_calib(64), 8);
        assert_eq!(default_calib(128), 14);
    }
}
