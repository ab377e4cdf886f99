//! Image and map quality measures and the Wilcoxon rank-sum test.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{domain_err, shape_err, Error, Result};
use crate::signal::{QuantitativeMaps, VfaImageSeries};

/// `‖ |x| − |ref| ‖₂ / ‖ |ref| ‖₂` over all voxels of the series.
pub fn nrmse(x: &VfaImageSeries, reference: &VfaImageSeries) -> Result<f64> {
    x.check_same(reference)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in x.data().iter().zip(reference.data()) {
        let (ma, mb) = (a.norm(), b.norm());
        num += (ma - mb) * (ma - mb);
        den += mb * mb;
    }
    if den == 0.0 {
        return Err(Error::AllZero("reference"));
    }
    Ok((num / den).sqrt())
}

/// [`nrmse`] for real-valued maps.
pub fn nrmse_real(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() {
        return Err(shape_err("maps differ in length"));
    }
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(Error::AllZero("reference"));
    }
    Ok((num / den).sqrt())
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WIN] {
    let c = (SSIM_WIN / 2) as f64;
    let mut g = [0.0; SSIM_WIN];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable Gaussian filter over the valid region (no padding).
fn filter_valid(img: &[f64], h: usize, w: usize, win: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = win.len();
    let (ho, wo) = (h + 1 - k, w + 1 - k);
    let mut rows = vec![0.0; h * wo];
    for y in 0..h {
        for x in 0..wo {
            rows[y * wo + x] = (0..k).map(|i| win[i] * img[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ho * wo];
    for y in 0..ho {
        for x in 0..wo {
            out[y * wo + x] = (0..k).map(|i| win[i] * rows[(y + i) * wo + x]).sum();
        }
    }
    (out, ho, wo)
}

/// Mean local SSIM of two magnitude planes with dynamic range `max(ref)`.
pub fn ssim(x: &[f64], reference: &[f64], h: usize, w: usize) -> Result<f64> {
    let range = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if range == 0.0 {
        return Err(Error::AllZero("reference plane"));
    }
    ssim_with_range(x, reference, h, w, range)
}

/// SSIM with an explicit dynamic range. Planes smaller than the 11×11 window
/// use a window clipped to the plane.
pub fn ssim_with_range(x: &[f64], reference: &[f64], h: usize, w: usize, range: f64) -> Result<f64> {
    if x.len() != h * w || reference.len() != h * w || h == 0 || w == 0 {
        return Err(shape_err("SSIM planes must both be h×w"));
    }
    if !(range > 0.0) {
        return Err(domain_err("SSIM dynamic range must be positive"));
    }
    let full = gaussian_window();
    let k = SSIM_WIN.min(h).min(w);
    let off = (SSIM_WIN - k) / 2;
    let mut win = full[off..off + k].to_vec();
    let s: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= s);

    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let (mx, ho, wo) = filter_valid(x, h, w, &win);
    let (my, _, _) = filter_valid(reference, h, w, &win);
    let (mxx, _, _) = filter_valid(&prod(x, x), h, w, &win);
    let (myy, _, _) = filter_valid(&prod(reference, reference), h, w, &win);
    let (mxy, _, _) = filter_valid(&prod(x, reference), h, w, &win);
    let mut total = 0.0;
    for i in 0..ho * wo {
        let (ux, uy) = (mx[i], my[i]);
        let vx = mxx[i] - ux * ux;
        let vy = myy[i] - uy * uy;
        let cxy = mxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2))
            / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / (ho * wo) as f64)
}

/// Per-flip-angle SSIM of magnitudes, each against its own reference range.
pub fn ssim_series(x: &VfaImageSeries, reference: &VfaImageSeries) -> Result<Vec<f64>> {
    x.check_same(reference)?;
    let (k, h, w) = x.dims();
    (0..k)
        .map(|a| {
            let mx: Vec<f64> = x.plane(a).iter().map(|z| z.norm()).collect();
            let mr: Vec<f64> = reference.plane(a).iter().map(|z| z.norm()).collect();
            ssim(&mx, &mr, h, w)
        })
        .collect()
}

fn moments(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    (mx, my, vx / n, vy / n, cxy / n)
}

/// Lin's concordance correlation coefficient (population moments).
pub fn ccc(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() || x.is_empty() {
        return Err(shape_err("CCC needs two equal-length non-empty maps"));
    }
    let (mx, my, vx, vy, cxy) = moments(x, reference);
    let den = vx + vy + (mx - my) * (mx - my);
    if den == 0.0 {
        return Err(domain_err("CCC is undefined for two identical constant maps"));
    }
    Ok(2.0 * cxy / den)
}

pub fn pearson(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() || x.is_empty() {
        return Err(shape_err("correlation needs two equal-length non-empty maps"));
    }
    let (_, _, vx, vy, cxy) = moments(x, reference);
    if vx == 0.0 || vy == 0.0 {
        return Err(domain_err("correlation is undefined for a constant map"));
    }
    Ok(cxy / (vx * vy).sqrt())
}

/// Voxels whose reference s0 exceeds 1% of its maximum.
pub fn t1_mask(reference: &QuantitativeMaps) -> Vec<bool> {
    let peak = reference.s0.iter().fold(0.0f64, |m, &v| m.max(v));
    reference.s0.iter().map(|&v| v > 0.01 * peak).collect()
}

/// `(NRMSE, CCC)` of a T1 map over [`t1_mask`] of the reference.
pub fn t1_scores(t1: &[f64], reference: &QuantitativeMaps) -> Result<(f64, f64)> {
    if t1.len() != reference.t1.len() {
        return Err(shape_err("T1 maps differ in size"));
    }
    let mask = t1_mask(reference);
    let (a, b): (Vec<f64>, Vec<f64>) = t1
        .iter()
        .zip(&reference.t1)
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|((&x, &r), _)| (x, r))
        .unzip();
    if a.is_empty() {
        return Err(Error::AllZero("reference s0"));
    }
    Ok((nrmse_real(&a, &b)?, ccc(&a, &b)?))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub method: String,
    pub subject: String,
    pub r: f64,
    pub mu: f64,
    pub step: Option<usize>,
    pub nrmse: f64,
    pub ssim: f64,
    pub ssim_per_angle: Vec<f64>,
    pub ccc: Option<f64>,
    pub t1_nrmse: Option<f64>,
}

impl MetricsReport {
    /// Image metrics, plus T1 metrics when both maps are given.
    pub fn evaluate(
        x: &VfaImageSeries,
        gt: &VfaImageSeries,
        t1: Option<(&[f64], &QuantitativeMaps)>,
    ) -> Result<Self> {
        let per = ssim_series(x, gt)?;
        let mean = per.iter().sum::<f64>() / per.len() as f64;
        let mut rep = Self {
            nrmse: nrmse(x, gt)?,
            ssim: mean,
            ssim_per_angle: per,
            ..Self::default()
        };
        if let Some((map, reference)) = t1 {
            let (n, c) = t1_scores(map, reference)?;
            rep.t1_nrmse = Some(n);
            rep.ccc = Some(c);
        }
        Ok(rep)
    }
}

/// Two-sided Wilcoxon rank-sum p-value.
///
/// Midranks for ties. Exact permutation distribution when the pooled size is
/// at most 12, otherwise the normal approximation with tie-corrected
/// variance and continuity correction.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Missing("sample values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(domain_err("samples must be finite"));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let ranks = midranks(&a.iter().chain(b).copied().collect::<Vec<_>>());
    let w: f64 = ranks[..na].iter().sum();
    let mean = na as f64 * (n as f64 + 1.0) / 2.0;
    if n <= 12 {
        let dev = (w - mean).abs();
        let (mut hits, mut total) = (0u64, 0u64);
        // Enumerate every na-subset of pooled positions.
        let mut idx: Vec<usize> = (0..na).collect();
        loop {
            let s: f64 = idx.iter().map(|&i| ranks[i]).sum();
            total += 1;
            if (s - mean).abs() >= dev - 1e-9 {
                hits += 1;
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        return Ok((hits as f64 / total as f64).min(1.0));
    }
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(libm::erfc(z / core::f64::consts::SQRT_2).min(1.0))
}

fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Advance to the next k-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
