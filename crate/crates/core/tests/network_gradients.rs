use cdr_core::forward::{generate_poisson_mask, simulate_sensitivities, ForwardOperator};
use cdr_core::net::{adam_step, backward, forward, NetworkConfig, NetworkWeights, OptimizerState};
use cdr_core::signal::VfaImageSeries;
use cdr_core::tensor::RandomStream;
use cdr_core::training::cdr_loss;
use cdr_core::{RealGrid, C64};

const H: f64 = 1e-5;

fn tiny_configs() -> Vec<NetworkConfig> {
    let cfg = |n_blocks, latent, ih, iw, ic, k, oh, ow, seed| NetworkConfig {
        n_blocks,
        latent_channels: latent,
        input_h: ih,
        input_w: iw,
        input_channels: ic,
        out_angles: k,
        out_h: oh,
        out_w: ow,
        seed,
    };
    vec![
        cfg(1, 2, 4, 4, 2, 1, 4, 4, 1),
        cfg(2, 3, 3, 3, 2, 2, 5, 5, 2),
        cfg(2, 2, 2, 3, 3, 3, 4, 6, 3),
        cfg(3, 4, 2, 2, 2, 2, 7, 7, 4),
        cfg(2, 3, 4, 4, 1, 1, 8, 8, 5),
    ]
}

fn probe(cfg: &NetworkConfig) -> VfaImageSeries {
    let mut s = RandomStream::new(cfg.seed + 1000);
    let n = cfg.out_angles * cfg.out_h * cfg.out_w;
    let d = (0..n).map(|_| C64::new(s.normal(), s.normal())).collect();
    VfaImageSeries::from_vec(cfg.out_angles, cfg.out_h, cfg.out_w, d).unwrap()
}

/// `Σ Re(conj(g)·x)`, whose gradient in the `∂/∂Re + i∂/∂Im` convention is `g`.
fn functional(cfg: &NetworkConfig, w: &NetworkWeights, noise: &RealGrid, g: &VfaImageSeries) -> f64 {
    let (x, _) = forward(cfg, w, noise).unwrap();
    x.data().iter().zip(g.data()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

fn max_relative_error(analytic: &[f64], f: impl Fn(&[f64]) -> f64, params: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * scale;
    let mut worst = 0.0f64;
    let mut p = params.to_vec();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + H;
        let up = f(&p);
        p[i] = orig - H;
        let down = f(&p);
        p[i] = orig;
        let fd = (up - down) / (2.0 * H);
        let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn reverse_mode_matches_central_differences() {
    for cfg in tiny_configs() {
        let w = NetworkWeights::init(&cfg).unwrap();
        let noise = cfg.noise_input();
        let g = probe(&cfg);
        let (_, tape) = forward(&cfg, &w, &noise).unwrap();
        let analytic = backward(&tape, &w, &g).unwrap();
        let worst = max_relative_error(
            &analytic,
            |p| functional(&cfg, &NetworkWeights::from_params(&cfg, p.to_vec()).unwrap(), &noise, &g),
            w.params(),
        );
        assert!(worst <= 1e-5, "config {:?}: worst relative error {worst:e}", cfg);
    }
}

#[test]
fn training_loss_gradient_matches_central_differences() {
    let cfg = tiny_configs()[2].clone();
    let (k, h, ww) = (cfg.out_angles, cfg.out_h, cfg.out_w);
    let mask = generate_poisson_mask(h, ww, k, 2.0, 2, 7).unwrap();
    let op = ForwardOperator::new(mask, simulate_sensitivities(h, ww, 2, 7).unwrap()).unwrap();
    let y = op.undersample(&op.apply_forward(&probe(&cfg)).unwrap()).unwrap();
    let mut xm = probe(&cfg);
    for z in xm.data_mut() {
        *z *= 0.3;
    }
    let mu = 0.4;
    let w = NetworkWeights::init(&cfg).unwrap();
    let noise = cfg.noise_input();
    let (x, tape) = forward(&cfg, &w, &noise).unwrap();
    let (_, grad) = cdr_core::training::loss_and_gradient(&y, &op, &x, mu, &xm).unwrap();
    let analytic = backward(&tape, &w, &grad).unwrap();
    let loss = |p: &[f64]| {
        let wp = NetworkWeights::from_params(&cfg, p.to_vec()).unwrap();
        let (xp, _) = forward(&cfg, &wp, &noise).unwrap();
        cdr_loss(&y, &op, &xp, mu, &xm).unwrap().total
    };
    let worst = max_relative_error(&analytic, loss, w.params());
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn initialization_and_optimizer_are_deterministic() {
    let cfg = NetworkConfig::desk(3, 16, 16, 9);
    let a = NetworkWeights::init(&cfg).unwrap();
    let b = NetworkWeights::init(&cfg).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(cfg.noise_input().data(), cfg.noise_input().data());
    let other = NetworkWeights::init(&NetworkConfig { seed: 10, ..cfg.clone() }).unwrap();
    assert_ne!(a.params(), other.params());

    let run = || {
        let mut w = NetworkWeights::init(&cfg).unwrap();
        let mut st = OptimizerState::new(w.len(), 0.01);
        let noise = cfg.noise_input();
        for _ in 0..3 {
            let (x, tape) = forward(&cfg, &w, &noise).unwrap();
            let g = backward(&tape, &w, &x).unwrap();
            adam_step(&mut w, &g, &mut st).unwrap();
        }
        w.params().to_vec()
    };
    assert_eq!(run(), run());
}

#[test]
fn output_shape_follows_config() {
    for cfg in tiny_configs() {
        let w = NetworkWeights::init(&cfg).unwrap();
        let (x, _) = forward(&cfg, &w, &cfg.noise_input()).unwrap();
        assert_eq!(x.dims(), (cfg.out_angles, cfg.out_h, cfg.out_w));
        assert!(x.data().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }
}
