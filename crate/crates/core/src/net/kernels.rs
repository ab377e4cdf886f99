//! Dense f64 kernels for the decoder: padded 3×3 convolution, its two
//! adjoints, and separable align-corners bilinear resampling.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

const CO_BLOCK: usize = 4;
const X_CHUNK: usize = 8;

/// Copy `[c, h, w]` planes into zero-bordered `[c, h+2, w+2]` planes.
pub(crate) fn pad(src: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (hp, wp) = (h + 2, w + 2);
    let mut out = vec![0.0; c * hp * wp];
    for ch in 0..c {
        for y in 0..h {
            let s = &src[ch * h * w + y * w..ch * h * w + (y + 1) * w];
            let d = ch * hp * wp + (y + 1) * wp + 1;
            out[d..d + w].copy_from_slice(s);
        }
    }
    out
}

/// Kernel re-laid out for the convolution loop: full groups of four output
/// channels as `[group][cin][tap][4]`, then the remainder as `[co][cin][tap]`.
pub(crate) struct Packed {
    cout: usize,
    cin: usize,
    data: Vec<f64>,
}

impl Packed {
    /// `w` is `[cout, cin, 3, 3]`.
    pub(crate) fn forward(w: &[f64], cout: usize, cin: usize) -> Self {
        Self::build(cout, cin, |co, ci, t| w[(co * cin + ci) * 9 + t])
    }

    /// Kernel of the input-gradient pass: channels swapped, taps flipped.
    pub(crate) fn transposed(w: &[f64], cout: usize, cin: usize) -> Self {
        Self::build(cin, cout, |ci, co, t| w[(co * cin + ci) * 9 + (8 - t)])
    }

    fn build(cout: usize, cin: usize, get: impl Fn(usize, usize, usize) -> f64) -> Self {
        let groups = cout / CO_BLOCK;
        let mut data = Vec::with_capacity(cout * cin * 9);
        for g in 0..groups {
            for ci in 0..cin {
                for t in 0..9 {
                    for j in 0..CO_BLOCK {
                        data.push(get(g * CO_BLOCK + j, ci, t));
                    }
                }
            }
        }
        for co in groups * CO_BLOCK..cout {
            for ci in 0..cin {
                for t in 0..9 {
                    data.push(get(co, ci, t));
                }
            }
        }
        Self { cout, cin, data }
    }
}

/// `out[co] = bias[co] + Σ_ci w[co,ci] ⋆ x[ci]` with zero padding; `xp` is
/// the padded input from [`pad`]. `out` is overwritten.
pub(crate) fn conv3x3(xp: &[f64], h: usize, w: usize, k: &Packed, bias: Option<&[f64]>, out: &mut [f64]) {
    let (cin, cout) = (k.cin, k.cout);
    let wp = w + 2;
    let pp = (h + 2) * wp;
    let n = h * w;
    debug_assert_eq!(xp.len(), cin * pp);
    debug_assert_eq!(out.len(), cout * n);
    let groups = cout / CO_BLOCK;
    for g in 0..groups {
        let kg = &k.data[g * cin * 9 * CO_BLOCK..(g + 1) * cin * 9 * CO_BLOCK];
        let b: [f64; CO_BLOCK] =
            core::array::from_fn(|j| bias.map_or(0.0, |b| b[g * CO_BLOCK + j]));
        for y in 0..h {
            let mut x0 = 0;
            while x0 + X_CHUNK <= w {
                let mut acc = [[0.0f64; X_CHUNK]; CO_BLOCK];
                for ci in 0..cin {
                    let kc = &kg[ci * 9 * CO_BLOCK..(ci + 1) * 9 * CO_BLOCK];
                    let base = ci * pp + y * wp + x0;
                    for ky in 0..3 {
                        let row = &xp[base + ky * wp..base + ky * wp + X_CHUNK + 2];
                        for kx in 0..3 {
                            let src: &[f64; X_CHUNK] = row[kx..kx + X_CHUNK].try_into().unwrap();
                            let kt: &[f64; CO_BLOCK] =
                                kc[(ky * 3 + kx) * CO_BLOCK..(ky * 3 + kx + 1) * CO_BLOCK]
                                    .try_into()
                                    .unwrap();
                            for j in 0..CO_BLOCK {
                                for i in 0..X_CHUNK {
                                    acc[j][i] += kt[j] * src[i];
                                }
                            }
                        }
                    }
                }
                for j in 0..CO_BLOCK {
                    let o = (g * CO_BLOCK + j) * n + y * w + x0;
                    for i in 0..X_CHUNK {
                        out[o + i] = acc[j][i] + b[j];
                    }
                }
                x0 += X_CHUNK;
            }
            for x in x0..w {
                let mut acc = [0.0f64; CO_BLOCK];
                for ci in 0..cin {
                    let kc = &kg[ci * 9 * CO_BLOCK..(ci + 1) * 9 * CO_BLOCK];
                    let base = ci * pp + y * wp + x;
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let v = xp[base + ky * wp + kx];
                            for j in 0..CO_BLOCK {
                                acc[j] += kc[(ky * 3 + kx) * CO_BLOCK + j] * v;
                            }
                        }
                    }
                }
                for j in 0..CO_BLOCK {
                    out[(g * CO_BLOCK + j) * n + y * w + x] = acc[j] + b[j];
                }
            }
        }
    }
    let tail = &k.data[groups * cin * 9 * CO_BLOCK..];
    for co in groups * CO_BLOCK..cout {
        let kco = &tail[(co - groups * CO_BLOCK) * cin * 9..(co - groups * CO_BLOCK + 1) * cin * 9];
        let b = bias.map_or(0.0, |b| b[co]);
        for y in 0..h {
            let mut x0 = 0;
            while x0 + X_CHUNK <= w {
                let mut acc = [0.0f64; X_CHUNK];
                for ci in 0..cin {
                    let base = ci * pp + y * wp + x0;
                    for ky in 0..3 {
                        let row = &xp[base + ky * wp..base + ky * wp + X_CHUNK + 2];
                        for kx in 0..3 {
                            let kv = kco[ci * 9 + ky * 3 + kx];
                            for i in 0..X_CHUNK {
                                acc[i] += kv * row[kx + i];
                            }
                        }
                    }
                }
                let o = co * n + y * w + x0;
                for i in 0..X_CHUNK {
                    out[o + i] = acc[i] + b;
                }
                x0 += X_CHUNK;
            }
            for x in x0..w {
                let mut acc = 0.0;
                for ci in 0..cin {
                    let base = ci * pp + y * wp + x;
                    for ky in 0..3 {
                        for kx in 0..3 {
                            acc += kco[ci * 9 + ky * 3 + kx] * xp[base + ky * wp + kx];
                        }
                    }
                }
                out[co * n + y * w + x] = acc + b;
            }
        }
    }
}

/// Kernel gradient `gw[co,ci,t] += Σ_{y,x} g[co,y,x]·xp[ci, y+ky, x+kx]`.
pub(crate) fn conv3x3_kernel_grad(
    xp: &[f64],
    g: &[f64],
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    gw: &mut [f64],
) {
    let wp = w + 2;
    let pp = (h + 2) * wp;
    let n = h * w;
    for co in 0..cout {
        let gc = &g[co * n..(co + 1) * n];
        for ci in 0..cin {
            let xc = &xp[ci * pp..(ci + 1) * pp];
            let mut acc = [[0.0f64; X_CHUNK]; 9];
            let mut tail = [0.0f64; 9];
            for y in 0..h {
                let grow = &gc[y * w..(y + 1) * w];
                let mut x0 = 0;
                while x0 + X_CHUNK <= w {
                    let gv: &[f64; X_CHUNK] = grow[x0..x0 + X_CHUNK].try_into().unwrap();
                    for ky in 0..3 {
                        let base = (y + ky) * wp + x0;
                        let row = &xc[base..base + X_CHUNK + 2];
                        for kx in 0..3 {
                            let a = &mut acc[ky * 3 + kx];
                            for i in 0..X_CHUNK {
                                a[i] += gv[i] * row[kx + i];
                            }
                        }
                    }
                    x0 += X_CHUNK;
                }
                for x in x0..w {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            tail[ky * 3 + kx] += grow[x] * xc[(y + ky) * wp + x + kx];
                        }
                    }
                }
            }
            let out = &mut gw[(co * cin + ci) * 9..(co * cin + ci + 1) * 9];
            for t in 0..9 {
                out[t] += acc[t].iter().sum::<f64>() + tail[t];
            }
        }
    }
}

/// One axis of an align-corners bilinear resampler: output `i` blends input
/// `lo[i]` and `lo[i]+1` with weight `frac[i]` on the latter.
#[derive(Clone, Debug)]
pub(crate) struct Axis {
    pub n_in: usize,
    pub n_out: usize,
    lo: Vec<usize>,
    frac: Vec<f64>,
}

impl Axis {
    pub(crate) fn new(n_in: usize, n_out: usize) -> Self {
        let mut lo = Vec::with_capacity(n_out);
        let mut frac = Vec::with_capacity(n_out);
        for i in 0..n_out {
            if n_in == 1 || n_out == 1 {
                lo.push(0);
                frac.push(0.0);
                continue;
            }
            let p = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
            let l = (p.floor() as usize).min(n_in - 2);
            lo.push(l);
            frac.push(p - l as f64);
        }
        Self { n_in, n_out, lo, frac }
    }

    fn hi(&self, i: usize) -> usize {
        (self.lo[i] + 1).min(self.n_in - 1)
    }
}

/// Resample `[c, ys.n_in, xs.n_in]` to `[c, ys.n_out, xs.n_out]`.
pub(crate) fn upsample(src: &[f64], c: usize, ys: &Axis, xs: &Axis) -> Vec<f64> {
    let (hi, wi, ho, wo) = (ys.n_in, xs.n_in, ys.n_out, xs.n_out);
    let mut rows = vec![0.0; hi * wo];
    let mut out = vec![0.0; c * ho * wo];
    for ch in 0..c {
        let s = &src[ch * hi * wi..(ch + 1) * hi * wi];
        for y in 0..hi {
            let sr = &s[y * wi..(y + 1) * wi];
            let dr = &mut rows[y * wo..(y + 1) * wo];
            for (x, d) in dr.iter_mut().enumerate() {
                let t = xs.frac[x];
                *d = (1.0 - t) * sr[xs.lo[x]] + t * sr[xs.hi(x)];
            }
        }
        let o = &mut out[ch * ho * wo..(ch + 1) * ho * wo];
        for y in 0..ho {
            let t = ys.frac[y];
            let (a, b) = (ys.lo[y], ys.hi(y));
            let (ra, rb) = (&rows[a * wo..(a + 1) * wo], &rows[b * wo..(b + 1) * wo]);
            let dr = &mut o[y * wo..(y + 1) * wo];
            for x in 0..wo {
                dr[x] = (1.0 - t) * ra[x] + t * rb[x];
            }
        }
    }
    out
}

/// Adjoint of [`upsample`].
pub(crate) fn upsample_adjoint(g: &[f64], c: usize, ys: &Axis, xs: &Axis) -> Vec<f64> {
    let (hi, wi, ho, wo) = (ys.n_in, xs.n_in, ys.n_out, xs.n_out);
    let mut rows = vec![0.0; hi * wo];
    let mut out = vec![0.0; c * hi * wi];
    for ch in 0..c {
        rows.iter_mut().for_each(|v| *v = 0.0);
        let gs = &g[ch * ho * wo..(ch + 1) * ho * wo];
        for y in 0..ho {
            let t = ys.frac[y];
            let (a, b) = (ys.lo[y], ys.hi(y));
            for x in 0..wo {
                let v = gs[y * wo + x];
                rows[a * wo + x] += (1.0 - t) * v;
                rows[b * wo + x] += t * v;
            }
        }
        let o = &mut out[ch * hi * wi..(ch + 1) * hi * wi];
        for y in 0..hi {
            for x in 0..wo {
                let v = rows[y * wo + x];
                let t = xs.frac[x];
                o[y * wi + xs.lo[x]] += (1.0 - t) * v;
                o[y * wi + xs.hi(x)] += t * v;
            }
        }
    }
    out
}
