use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{domain_err, Error, Result};

/// Savitzky-Golay settings: polynomial `degree`, odd `window`, and which
/// `derivative` of the local fit to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Smoother {
    pub window: usize,
    pub degree: usize,
    pub derivative: usize,
}

impl Default for Smoother {
    fn default() -> Self {
        Self {
            window: 51,
            degree: 1,
            derivative: 0,
        }
    }
}

impl Smoother {
    pub fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 || self.window < self.degree + 2 {
            return Err(domain_err("smoothing window must be odd and at least degree + 2"));
        }
        if self.derivative > self.degree {
            return Err(domain_err("derivative order exceeds the polynomial degree"));
        }
        Ok(())
    }

    pub fn apply(&self, series: &[f64]) -> Result<Vec<f64>> {
        savgol_filter(series, self.window, self.degree, self.derivative)
    }
}

/// Degree-`degree` local least-squares smoothing; see [`savgol_filter`].
pub fn savgol_smooth(series: &[f64], window: usize, degree: usize) -> Result<Vec<f64>> {
    savgol_filter(series, window, degree, 0)
}

/// Per point, fit a polynomial over the centered window by least squares and
/// evaluate its `derivative`-th derivative at the point. Near the ends the
/// window is clipped to the available samples (no padding). A series shorter
/// than `window` uses the largest odd window that fits.
pub fn savgol_filter(series: &[f64], window: usize, degree: usize, derivative: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Missing("series samples"));
    }
    Smoother {
        window,
        degree,
        derivative,
    }
    .validate()?;
    let n = series.len();
    let mut window = window;
    if window > n {
        window = if n % 2 == 1 { n } else { n - 1 };
    }
    if window < degree + 2 {
        return Ok(if derivative == 0 {
            series.to_vec()
        } else {
            vec![0.0; n]
        });
    }
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        out.push(local_fit(&series[lo..=hi], i - lo, half, degree, derivative));
    }
    Ok(out)
}

/// Fit over `ys` (abscissae `(j − center)/scale`) and return the requested
/// derivative at the center, in units of the original sample spacing.
fn local_fit(ys: &[f64], center: usize, scale: usize, degree: usize, derivative: usize) -> f64 {
    let m = degree + 1;
    let s = scale.max(1) as f64;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    let mut pw = vec![0.0; 2 * m - 1];
    for (j, &y) in ys.iter().enumerate() {
        let t = (j as f64 - center as f64) / s;
        let mut p = 1.0;
        for (k, slot) in pw.iter_mut().enumerate() {
            *slot = p;
            if k < m {
                b[k] += p * y;
            }
            p *= t;
        }
        for r in 0..m {
            for c in 0..m {
                a[r * m + c] += pw[r + c];
            }
        }
    }
    let coef = solve(&mut a, &mut b, m);
    let mut fact = 1.0;
    for k in 1..=derivative {
        fact *= k as f64;
    }
    coef[derivative] * fact / s.powi(derivative as i32)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(a: &mut [f64], b: &mut [f64], m: usize) -> Vec<f64> {
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&r1, &r2| a[r1 * m + col].abs().total_cmp(&a[r2 * m + col].abs()))
            .unwrap_or(col);
        if piv != col {
            for c in 0..m {
                a.swap(col * m + c, piv * m + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * m + col];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..m {
            let f = a[r * m + col] / d;
            if f != 0.0 {
                for c in col..m {
                    a[r * m + c] -= f * a[col * m + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = b[r];
        for c in r + 1..m {
            s -= a[r * m + c] * x[c];
        }
        let d = a[r * m + r];
        x[r] = if d == 0.0 { 0.0 } else { s / d };
    }
    x
}

/// Index of the smallest value; ties resolve to the earliest index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
