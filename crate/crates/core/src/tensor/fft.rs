//! Centered, orthonormal 2-D FFT.
//!
//! Power-of-two lengths use an iterative radix-2 kernel; every other length
//! goes through Bluestein's chirp-z transform on a padded power-of-two grid.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{ComplexGrid, C64};
use crate::error::{shape_err, Result};

#[derive(Clone, Debug)]
struct Radix2 {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64::new(a.cos(), a.sin())
            })
            .collect();
        Self {
            n,
            twiddles,
            bitrev,
        }
    }

    /// Unnormalized transform; `inverse` flips the exponent sign.
    fn run(&self, buf: &mut [C64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Clone, Debug)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    chirp: Vec<C64>,
    kernel_hat: Vec<C64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp phase argument small and exact.
        let chirp: Vec<C64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                let a = -PI * k2 / n as f64;
                C64::new(a.cos(), a.sin())
            })
            .collect();
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.run(&mut kernel, false);
        Self {
            n,
            inner,
            chirp,
            kernel_hat: kernel,
        }
    }

    fn run(&self, buf: &mut [C64]) {
        let n = self.n;
        let m = self.inner.n;
        let mut work = vec![C64::new(0.0, 0.0); m];
        for k in 0..n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.run(&mut work, false);
        for (w, kh) in work.iter_mut().zip(&self.kernel_hat) {
            *w *= kh;
        }
        self.inner.run(&mut work, true);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            buf[k] = work[k] * scale * self.chirp[k];
        }
    }
}

/// Plan for one-dimensional transforms of a fixed length.
#[derive(Clone, Debug)]
pub struct Fft1(Kernel);

#[derive(Clone, Debug)]
enum Kernel {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "FFT length must be positive");
        if n.is_power_of_two() {
            Fft1(Kernel::Radix2(Radix2::new(n)))
        } else {
            Fft1(Kernel::Bluestein(Bluestein::new(n)))
        }
    }

    pub fn len(&self) -> usize {
        match &self.0 {
            Kernel::Radix2(p) => p.n,
            Kernel::Bluestein(p) => p.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward DFT, `X_k = Σ x_n exp(-2πi kn/N)`, unnormalized.
    pub fn forward(&self, buf: &mut [C64]) {
        match &self.0 {
            Kernel::Radix2(p) => p.run(buf, false),
            Kernel::Bluestein(p) => p.run(buf),
        }
    }

    /// Inverse DFT without the `1/N` factor.
    pub fn inverse(&self, buf: &mut [C64]) {
        // ifft(x) = conj(fft(conj(x)))
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        for z in buf.iter_mut() {
            *z = z.conj();
        }
    }
}

/// Reusable plan for centered orthonormal transforms of `h × w` planes.
#[derive(Clone, Debug)]
pub struct Fft2Plan {
    h: usize,
    w: usize,
    rows: Fft1,
    cols: Fft1,
}

impl Fft2Plan {
    pub fn new(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            rows: Fft1::new(w),
            cols: Fft1::new(h),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// In-place `fftshift(fft2(ifftshift(x))) / √(hw)`.
    pub fn forward(&self, plane: &mut [C64], scratch: &mut Vec<C64>) {
        self.run(plane, scratch, false);
    }

    /// In-place exact inverse of [`Fft2Plan::forward`].
    pub fn inverse(&self, plane: &mut [C64], scratch: &mut Vec<C64>) {
        self.run(plane, scratch, true);
    }

    fn run(&self, plane: &mut [C64], scratch: &mut Vec<C64>, inverse: bool) {
        let (h, w) = (self.h, self.w);
        assert_eq!(plane.len(), h * w);
        scratch.resize(h * w, C64::new(0.0, 0.0));
        // ifftshift: move the center sample to index 0.
        shift2(plane, scratch, h, w, h - h / 2, w - w / 2);
        for row in scratch.chunks_exact_mut(w) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut col = vec![C64::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                col[y] = scratch[y * w + x];
            }
            if inverse {
                self.cols.inverse(&mut col);
            } else {
                self.cols.forward(&mut col);
            }
            for y in 0..h {
                scratch[y * w + x] = col[y];
            }
        }
        let s = 1.0 / ((h * w) as f64).sqrt();
        for z in scratch.iter_mut() {
            *z *= s;
        }
        // fftshift: move index 0 back to the center.
        shift2(scratch, plane, h, w, h / 2, w / 2);
    }
}

/// `dst[(y+sy)%h][(x+sx)%w] = src[y][x]`
fn shift2(src: &[C64], dst: &mut [C64], h: usize, w: usize, sy: usize, sx: usize) {
    for y in 0..h {
        let ty = (y + sy) % h;
        let srow = &src[y * w..(y + 1) * w];
        let drow = &mut dst[ty * w..(ty + 1) * w];
        let split = w - sx % w;
        // srow[x] lands at (x + sx) % w
        drow[sx % w..].copy_from_slice(&srow[..split]);
        drow[..sx % w].copy_from_slice(&srow[split..]);
    }
}

fn check_2d(img: &ComplexGrid) -> Result<(usize, usize)> {
    match img.shape() {
        [h, w] if *h >= 1 && *w >= 1 => Ok((*h, *w)),
        s => Err(shape_err(alloc::format!(
            "expected a non-empty 2-D grid, got shape {s:?}"
        ))),
    }
}

/// Centered orthonormal 2-D FFT of a single plane.
pub fn fft2_centered(img: &ComplexGrid) -> Result<ComplexGrid> {
    let (h, w) = check_2d(img)?;
    let plan = Fft2Plan::new(h, w);
    let mut out = img.clone();
    plan.forward(out.data_mut(), &mut Vec::new());
    Ok(out)
}

/// Exact inverse of [`fft2_centered`].
pub fn ifft2_centered(img: &ComplexGrid) -> Result<ComplexGrid> {
    let (h, w) = check_2d(img)?;
    let plan = Fft2Plan::new(h, w);
    let mut out = img.clone();
    plan.inverse(out.data_mut(), &mut Vec::new());
    Ok(out)
}
