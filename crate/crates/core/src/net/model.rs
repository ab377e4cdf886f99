use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use super::kernels::{conv3x3, conv3x3_kernel_grad, pad, upsample, upsample_adjoint, Axis, Packed};
use super::{plan_sizes, NetworkConfig, NetworkWeights, BN_EPS};
use crate::error::{shape_err, Error, Result};
use crate::signal::VfaImageSeries;
use crate::tensor::{RealGrid, C64};

struct BlockTape {
    h: usize,
    w: usize,
    resample: Option<(Axis, Axis)>,
    /// Padded convolution input.
    xp: Vec<f64>,
    /// ReLU output.
    act: Vec<f64>,
    /// Normalized activations before gain/shift.
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Intermediates of one forward pass, tied to the weight generation that
/// produced them.
pub struct Tape {
    generation: u64,
    blocks: Vec<BlockTape>,
    head_xp: Vec<f64>,
    out_h: usize,
    out_w: usize,
}

impl Tape {
    pub fn generation(&self) -> u64 {
        self.generation
    }
}

fn check_config(cfg: &NetworkConfig, weights: &NetworkWeights) -> Result<()> {
    cfg.validate()?;
    let wc = weights.config();
    let same_shape = wc.n_blocks == cfg.n_blocks
        && wc.latent_channels == cfg.latent_channels
        && wc.input_channels == cfg.input_channels
        && (wc.input_h, wc.input_w) == (cfg.input_h, cfg.input_w)
        && (wc.out_h, wc.out_w, wc.out_angles) == (cfg.out_h, cfg.out_w, cfg.out_angles);
    if !same_shape {
        return Err(shape_err("weights were built for a different network configuration"));
    }
    Ok(())
}

/// Evaluate `G(w)` on the fixed noise input.
pub fn forward(
    cfg: &NetworkConfig,
    weights: &NetworkWeights,
    noise: &RealGrid,
) -> Result<(VfaImageSeries, Tape)> {
    check_config(cfg, weights)?;
    if noise.shape() != [cfg.input_channels, cfg.input_h, cfg.input_w] {
        return Err(shape_err(alloc::format!(
            "noise input {:?} does not match ({}, {}, {})",
            noise.shape(),
            cfg.input_channels,
            cfg.input_h,
            cfg.input_w
        )));
    }
    let layout = weights.layout();
    let sizes = plan_sizes(cfg);
    let mut cur = noise.data().to_vec();
    let (mut h, mut w) = (cfg.input_h, cfg.input_w);
    let mut blocks = Vec::with_capacity(cfg.n_blocks);
    for (b, l) in layout.blocks.iter().enumerate() {
        let resample = if b + 1 < cfg.n_blocks {
            let (th, tw) = sizes[b];
            Some((Axis::new(h, th), Axis::new(w, tw)))
        } else {
            None
        };
        if let Some((ys, xs)) = &resample {
            cur = upsample(&cur, l.cin, ys, xs);
            h = ys.n_out;
            w = xs.n_out;
        }
        let n = h * w;
        let xp = pad(&cur, l.cin, h, w);
        let mut act = vec![0.0; l.cout * n];
        let packed = Packed::forward(weights.kernel(b), l.cout, l.cin);
        conv3x3(&xp, h, w, &packed, Some(weights.slice(l.bias, l.cout)), &mut act);
        for v in &mut act {
            *v = v.max(0.0);
        }
        let gain = weights.slice(l.gain, l.cout);
        let shift = weights.slice(l.shift, l.cout);
        let mut xhat = vec![0.0; l.cout * n];
        let mut inv_std = vec![0.0; l.cout];
        cur = vec![0.0; l.cout * n];
        for c in 0..l.cout {
            let a = &act[c * n..(c + 1) * n];
            let mean = a.iter().sum::<f64>() / n as f64;
            let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + BN_EPS).sqrt();
            inv_std[c] = inv;
            for i in 0..n {
                let xh = (a[i] - mean) * inv;
                xhat[c * n + i] = xh;
                cur[c * n + i] = gain[c] * xh + shift[c];
            }
        }
        blocks.push(BlockTape {
            h,
            w,
            resample,
            xp,
            act,
            xhat,
            inv_std,
        });
    }
    let n = h * w;
    let head_xp = pad(&cur, layout.head_cin, h, w);
    let mut out = vec![0.0; layout.head_cout * n];
    let packed = Packed::forward(
        weights.slice(layout.head_kernel, layout.head_cout * layout.head_cin * 9),
        layout.head_cout,
        layout.head_cin,
    );
    conv3x3(
        &head_xp,
        h,
        w,
        &packed,
        Some(weights.slice(layout.head_bias, layout.head_cout)),
        &mut out,
    );
    let k = cfg.out_angles;
    let mut data = Vec::with_capacity(k * n);
    for a in 0..k {
        let (re, im) = (&out[2 * a * n..(2 * a + 1) * n], &out[(2 * a + 1) * n..(2 * a + 2) * n]);
        data.extend(re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)));
    }
    let series = VfaImageSeries::from_vec(k, h, w, data)?;
    let tape = Tape {
        generation: weights.generation(),
        blocks,
        head_xp,
        out_h: h,
        out_w: w,
    };
    Ok((series, tape))
}

/// Reverse pass. `grad` holds `∂L/∂Re + i·∂L/∂Im` of a real loss with
/// respect to each output sample; returns `∂L/∂w` in the flat layout.
pub fn backward(tape: &Tape, weights: &NetworkWeights, grad: &VfaImageSeries) -> Result<Vec<f64>> {
    if tape.generation != weights.generation() {
        return Err(Error::StaleTape {
            tape: tape.generation,
            weights: weights.generation(),
        });
    }
    let layout = weights.layout();
    let (h, w) = (tape.out_h, tape.out_w);
    let n = h * w;
    let k = layout.head_cout / 2;
    if grad.dims() != (k, h, w) {
        return Err(shape_err("output gradient does not match the network output"));
    }
    let mut gout = vec![0.0; layout.head_cout * n];
    for a in 0..k {
        for (i, z) in grad.plane(a).iter().enumerate() {
            gout[2 * a * n + i] = z.re;
            gout[(2 * a + 1) * n + i] = z.im;
        }
    }
    let mut grads = vec![0.0; layout.len];
    for c in 0..layout.head_cout {
        grads[layout.head_bias + c] = gout[c * n..(c + 1) * n].iter().sum();
    }
    let head_w = weights.slice(layout.head_kernel, layout.head_cout * layout.head_cin * 9);
    conv3x3_kernel_grad(
        &tape.head_xp,
        &gout,
        layout.head_cin,
        layout.head_cout,
        h,
        w,
        &mut grads[layout.head_kernel..layout.head_kernel + head_w.len()],
    );
    let mut g = vec![0.0; layout.head_cin * n];
    conv3x3(
        &pad(&gout, layout.head_cout, h, w),
        h,
        w,
        &Packed::transposed(head_w, layout.head_cout, layout.head_cin),
        None,
        &mut g,
    );

    for (b, l) in layout.blocks.iter().enumerate().rev() {
        let t = &tape.blocks[b];
        let n = t.h * t.w;
        let gain = weights.slice(l.gain, l.cout);
        let mut dz = vec![0.0; l.cout * n];
        for c in 0..l.cout {
            let dy = &g[c * n..(c + 1) * n];
            let xh = &t.xhat[c * n..(c + 1) * n];
            let (mut sum_dy, mut sum_dy_xh) = (0.0, 0.0);
            for i in 0..n {
                sum_dy += dy[i];
                sum_dy_xh += dy[i] * xh[i];
            }
            grads[l.gain + c] = sum_dy_xh;
            grads[l.shift + c] = sum_dy;
            // d(xhat) = gain·dy; mean terms scale by the same gain.
            let scale = gain[c] * t.inv_std[c];
            let (m1, m2) = (sum_dy / n as f64, sum_dy_xh / n as f64);
            let act = &t.act[c * n..(c + 1) * n];
            let mut db = 0.0;
            for i in 0..n {
                if act[i] > 0.0 {
                    let v = scale * (dy[i] - m1 - xh[i] * m2);
                    dz[c * n + i] = v;
                    db += v;
                }
            }
            grads[l.bias + c] = db;
        }
        conv3x3_kernel_grad(
            &t.xp,
            &dz,
            l.cin,
            l.cout,
            t.h,
            t.w,
            &mut grads[l.kernel..l.kernel + l.cout * l.cin * 9],
        );
        if b == 0 {
            break;
        }
        let mut gin = vec![0.0; l.cin * n];
        conv3x3(
            &pad(&dz, l.cout, t.h, t.w),
            t.h,
            t.w,
            &Packed::transposed(weights.kernel(b), l.cout, l.cin),
            None,
            &mut gin,
        );
        g = match &t.resample {
            Some((ys, xs)) => upsample_adjoint(&gin, l.cin, ys, xs),
            None => gin,
        };
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NetworkConfig {
        NetworkConfig {
            n_blocks: 2,
            latent_channels: 3,
            input_h: 3,
            input_w: 4,
            input_channels: 2,
            out_angles: 2,
            out_h: 5,
            out_w: 6,
            seed: 1,
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let cfg = tiny();
        let wts = NetworkWeights::zeros(&cfg).unwrap();
        let (out, _) = forward(&cfg, &wts, &cfg.noise_input()).unwrap();
        assert!(out.data().iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn output_shape_for_desk_config() {
        let cfg = NetworkConfig::desk(9, 64, 64, 3);
        let wts = NetworkWeights::init(&cfg).unwrap();
        let (out, _) = forward(&cfg, &wts, &cfg.noise_input()).unwrap();
        assert_eq!(out.dims(), (9, 64, 64));
    }

    #[test]
    fn stale_tape_is_rejected() {
        let cfg = tiny();
        let mut wts = NetworkWeights::init(&cfg).unwrap();
        let (out, tape) = forward(&cfg, &wts, &cfg.noise_input()).unwrap();
        wts.params_mut()[0] += 0.1;
        assert!(matches!(backward(&tape, &wts, &out), Err(Error::StaleTape { .. })));
    }

    #[test]
    fn zero_and_doubled_output_gradients() {
        let cfg = tiny();
        let wts = NetworkWeights::init(&cfg).unwrap();
        let (out, tape) = forward(&cfg, &wts, &cfg.noise_input()).unwrap();
        let zero = VfaImageSeries::zeros(2, 5, 6);
        assert!(backward(&tape, &wts, &zero).unwrap().iter().all(|&g| g == 0.0));
        let g1 = backward(&tape, &wts, &out).unwrap();
        let mut doubled = out.clone();
        doubled.data_mut().iter_mut().for_each(|z| *z *= 2.0);
        let g2 = backward(&tape, &wts, &doubled).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mismatched_weights_are_a_shape_error() {
        let cfg = tiny();
        let mut other = tiny();
        other.latent_channels = 4;
        let wts = NetworkWeights::init(&other).unwrap();
        assert!(forward(&cfg, &wts, &cfg.noise_input()).is_err());
    }
}
