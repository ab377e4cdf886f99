use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain_err, Result};
use crate::tensor::C64;

const S3: f64 = 1.732_050_807_568_877_2;
const NORM: f64 = 5.656_854_249_492_380_4; // 4·√2

/// Daubechies-4 lowpass analysis taps.
pub const D4_LOW: [f64; 4] = [
    (1.0 + S3) / NORM,
    (3.0 + S3) / NORM,
    (3.0 - S3) / NORM,
    (1.0 - S3) / NORM,
];

/// Quadrature-mirror highpass taps, `g[k] = (−1)^k h[3 − k]`.
pub const D4_HIGH: [f64; 4] = [D4_LOW[3], -D4_LOW[2], D4_LOW[1], -D4_LOW[0]];

/// Separable periodized D4 transform of one `h × w` plane, zero-padded to
/// the next multiple of `2^levels` on each axis. Coefficients use the usual
/// nested layout (approximation band in the top-left corner).
#[derive(Clone, Debug)]
pub struct Wavelet2d {
    levels: usize,
    h: usize,
    w: usize,
    ph: usize,
    pw: usize,
}

impl Wavelet2d {
    pub fn new(h: usize, w: usize, levels: usize) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(domain_err("wavelet plane must be non-empty"));
        }
        if levels == 0 || levels > 16 {
            return Err(domain_err("wavelet levels must lie in 1..=16"));
        }
        let q = 1usize << levels;
        Ok(Self {
            levels,
            h,
            w,
            ph: h.div_ceil(q) * q,
            pw: w.div_ceil(q) * q,
        })
    }

    /// Padded coefficient dimensions.
    pub fn padded(&self) -> (usize, usize) {
        (self.ph, self.pw)
    }

    pub fn forward(&self, plane: &[C64]) -> Vec<C64> {
        debug_assert_eq!(plane.len(), self.h * self.w);
        let mut buf = vec![C64::new(0.0, 0.0); self.ph * self.pw];
        for r in 0..self.h {
            buf[r * self.pw..r * self.pw + self.w].copy_from_slice(&plane[r * self.w..(r + 1) * self.w]);
        }
        let mut line = Vec::new();
        let (mut ch, mut cw) = (self.ph, self.pw);
        for _ in 0..self.levels {
            for r in 0..ch {
                let row = &mut buf[r * self.pw..r * self.pw + cw];
                analyze(row, &mut line);
            }
            let mut col = vec![C64::new(0.0, 0.0); ch];
            for c in 0..cw {
                for r in 0..ch {
                    col[r] = buf[r * self.pw + c];
                }
                analyze(&mut col, &mut line);
                for r in 0..ch {
                    buf[r * self.pw + c] = col[r];
                }
            }
            ch /= 2;
            cw /= 2;
        }
        buf
    }

    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        debug_assert_eq!(coeffs.len(), self.ph * self.pw);
        let mut buf = coeffs.to_vec();
        let mut line = Vec::new();
        for lev in (0..self.levels).rev() {
            let (ch, cw) = (self.ph >> lev, self.pw >> lev);
            let mut col = vec![C64::new(0.0, 0.0); ch];
            for c in 0..cw {
                for r in 0..ch {
                    col[r] = buf[r * self.pw + c];
                }
                synthesize(&mut col, &mut line);
                for r in 0..ch {
                    buf[r * self.pw + c] = col[r];
                }
            }
            for r in 0..ch {
                synthesize(&mut buf[r * self.pw..r * self.pw + cw], &mut line);
            }
        }
        let mut out = Vec::with_capacity(self.h * self.w);
        for r in 0..self.h {
            out.extend_from_slice(&buf[r * self.pw..r * self.pw + self.w]);
        }
        out
    }
}

fn analyze(x: &mut [C64], tmp: &mut Vec<C64>) {
    let n = x.len();
    let half = n / 2;
    tmp.clear();
    tmp.resize(n, C64::new(0.0, 0.0));
    for i in 0..half {
        let (mut a, mut d) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for k in 0..4 {
            let v = x[(2 * i + k) % n];
            a += v * D4_LOW[k];
            d += v * D4_HIGH[k];
        }
        tmp[i] = a;
        tmp[half + i] = d;
    }
    x.copy_from_slice(tmp);
}

fn synthesize(x: &mut [C64], tmp: &mut Vec<C64>) {
    let n = x.len();
    let half = n / 2;
    tmp.clear();
    tmp.resize(n, C64::new(0.0, 0.0));
    for i in 0..half {
        let (a, d) = (x[i], x[half + i]);
        for k in 0..4 {
            tmp[(2 * i + k) % n] += a * D4_LOW[k] + d * D4_HIGH[k];
        }
    }
    x.copy_from_slice(tmp);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{norm_sqr, RandomStream};

    fn random_plane(n: usize, seed: u64) -> Vec<C64> {
        let mut s = RandomStream::new(seed);
        (0..n).map(|_| C64::new(s.normal(), s.normal())).collect()
    }

    #[test]
    fn taps_are_orthonormal() {
        let e: f64 = D4_LOW.iter().map(|v| v * v).sum();
        assert!((e - 1.0).abs() < 1e-15);
        let shifted = D4_LOW[0] * D4_LOW[2] + D4_LOW[1] * D4_LOW[3];
        assert!(shifted.abs() < 1e-15);
        let cross: f64 = D4_LOW.iter().zip(&D4_HIGH).map(|(a, b)| a * b).sum();
        assert!(cross.abs() < 1e-15);
    }

    #[test]
    fn energy_preserved_and_inverted() {
        let wt = Wavelet2d::new(16, 24, 3).unwrap();
        let x = random_plane(16 * 24, 4);
        let c = wt.forward(&x);
        assert!((norm_sqr(&c) - norm_sqr(&x)).abs() < 1e-9 * norm_sqr(&x));
        let back = wt.inverse(&c);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_sizes_pad_and_crop() {
        let wt = Wavelet2d::new(13, 10, 3).unwrap();
        assert_eq!(wt.padded(), (16, 16));
        let x = random_plane(130, 9);
        let back = wt.inverse(&wt.forward(&x));
        assert_eq!(back.len(), 130);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_plane_concentrates_in_approximation() {
        let wt = Wavelet2d::new(16, 16, 2).unwrap();
        let c = wt.forward(&vec![C64::new(1.0, 0.0); 256]);
        for r in 0..16 {
            for col in 0..16 {
                if r >= 4 || col >= 4 {
                    assert!(c[r * 16 + col].norm() < 1e-12);
                }
            }
        }
    }
}
