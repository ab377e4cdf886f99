use cdr_core::forward::{
    coil_compress, default_calib, generate_poisson_mask, normalize_dataset, prewhiten, simulate_sensitivities,
    CoilCompression, CoilSensitivities, ForwardOperator, KSpaceData, SamplingMask, NORM_TARGET,
};
use cdr_core::signal::VfaImageSeries;
use cdr_core::tensor::{cholesky, CMatrix, RandomStream};
use cdr_core::C64;
use proptest::prelude::*;

fn random_c(n: usize, s: &mut RandomStream) -> Vec<C64> {
    (0..n).map(|_| C64::new(s.normal(), s.normal())).collect()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn operator(h: usize, w: usize, k: usize, nc: usize, r: f64, seed: u64) -> ForwardOperator {
    let mask = generate_poisson_mask(h, w, k, r, default_calib(h).min(h.min(w)), seed).unwrap();
    let sens = simulate_sensitivities(h, w, nc, seed ^ 0x55).unwrap();
    ForwardOperator::new(mask, sens).unwrap()
}

#[test]
fn adjoint_identity_on_seeded_configs() {
    for seed in 0..6u64 {
        let (h, w, k, nc) = (24, 20, 3, 3);
        let a = operator(h, w, k, nc, 4.0, seed);
        let mut s = RandomStream::new(100 + seed);
        let x = VfaImageSeries::from_vec(k, h, w, random_c(k * h * w, &mut s)).unwrap();
        let y = KSpaceData::from_vec(nc, k, h, w, random_c(nc * k * h * w, &mut s)).unwrap();
        let ax = a.apply_forward(&x).unwrap();
        let ahy = a.apply_adjoint(&y).unwrap();
        let lhs = inner(ax.data(), y.data());
        let rhs = inner(x.data(), ahy.data());
        assert!((lhs - rhs).norm() <= 1e-10 * ax.norm() * y.norm());
    }
}

#[test]
fn full_mask_with_normalized_coils_is_an_isometry() {
    let (h, w, k) = (16, 16, 2);
    let sens = simulate_sensitivities(h, w, 4, 9).unwrap();
    let a = ForwardOperator::fully_sampled(sens, k);
    let mut s = RandomStream::new(1);
    let x = VfaImageSeries::from_vec(k, h, w, random_c(k * h * w, &mut s)).unwrap();
    let back = a.normal(&x).unwrap();
    for (p, q) in back.data().iter().zip(x.data()) {
        assert!((p - q).norm() < 1e-10);
    }
    let sos = a.sens().sum_of_squares();
    assert!(sos.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn masked_entries_are_zero_after_forward() {
    let a = operator(16, 16, 2, 2, 4.0, 3);
    let mut s = RandomStream::new(2);
    let x = VfaImageSeries::from_vec(2, 16, 16, random_c(512, &mut s)).unwrap();
    let y = a.apply_forward(&x).unwrap();
    for c in 0..2 {
        for k in 0..2 {
            for (v, &m) in y.plane(c, k).iter().zip(a.mask().plane(k)) {
                if m == 0 {
                    assert_eq!(*v, C64::new(0.0, 0.0));
                }
            }
        }
    }
    let under = a.undersample(&y).unwrap();
    assert_eq!(under, y);
}

#[test]
fn mask_contract_and_determinism() {
    for &r in &[4.0, 8.0, 12.0] {
        for seed in 0..10u64 {
            let m = generate_poisson_mask(64, 64, 3, r, 8, seed).unwrap();
            for k in 0..3 {
                let ach = m.plane_acceleration(k);
                assert!((ach - r).abs() <= 0.1 * r, "R {r} seed {seed}: {ach}");
            }
            let (y0, x0, side) = m.calib_region();
            for k in 0..3 {
                for y in y0..y0 + side {
                    for x in x0..x0 + side {
                        assert_eq!(m.plane(k)[y * 64 + x], 1);
                    }
                }
            }
        }
    }
    let a = generate_poisson_mask(32, 32, 2, 4.0, 8, 5).unwrap();
    let b = generate_poisson_mask(32, 32, 2, 4.0, 8, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.plane(0), a.plane(1));
    assert_eq!(generate_poisson_mask(8, 8, 1, 1.0, 4, 0).unwrap().acceleration(), 1.0);
    assert!(generate_poisson_mask(8, 8, 1, 0.5, 4, 0).is_err());
    assert!(generate_poisson_mask(8, 8, 1, 4.0, 9, 0).is_err());
    assert_eq!(SamplingMask::full(2, 4, 4).sampled(), 32);
}

#[test]
fn prewhitening_yields_identity_covariance() {
    let nc = 3;
    let mut mix = CMatrix::zeros(nc, nc);
    let mut s = RandomStream::new(77);
    for r in 0..nc {
        for c in 0..nc {
            let v = if r == c { C64::new(1.0 + r as f64, 0.0) } else { C64::new(0.3 * s.normal(), 0.3 * s.normal()) };
            mix.set(r, c, v);
        }
    }
    let cov = mix.matmul(&mix.adjoint());
    let per = 40000;
    let white = random_c(nc * per, &mut s);
    let mut data = vec![C64::new(0.0, 0.0); nc * per];
    for i in 0..per {
        for r in 0..nc {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..nc {
                acc += mix.get(r, c) * white[c * per + i] / 2f64.sqrt();
            }
            data[r * per + i] = acc;
        }
    }
    // noise with covariance E[n n^H] = cov
    let y = KSpaceData::from_vec(nc, 1, 200, 200, data).unwrap();
    let out = prewhiten(&y, &cov).unwrap();
    for r in 0..nc {
        for c in 0..nc {
            let e: C64 = (0..per).map(|i| out.data()[r * per + i] * out.data()[c * per + i].conj()).sum::<C64>() / per as f64;
            let want = if r == c { 1.0 } else { 0.0 };
            assert!((e - C64::new(want, 0.0)).norm() < 0.03, "({r},{c}) {e}");
        }
    }
    assert!(cholesky(&cov).is_ok());
    assert!(prewhiten(&y, &CMatrix::identity(2)).is_err());
}

#[test]
fn coil_compression_is_lossless_on_low_rank_data() {
    let (nc, k, h, w) = (5, 2, 8, 8);
    let mut s = RandomStream::new(4);
    let basis = [random_c(k * h * w, &mut s), random_c(k * h * w, &mut s)];
    let weights = random_c(nc * 2, &mut s);
    let mut data = Vec::with_capacity(nc * k * h * w);
    for c in 0..nc {
        for i in 0..k * h * w {
            data.push(weights[2 * c] * basis[0][i] + weights[2 * c + 1] * basis[1][i]);
        }
    }
    let y = KSpaceData::from_vec(nc, k, h, w, data).unwrap();
    let cc = CoilCompression::fit(&y, 0.999_999).unwrap();
    assert_eq!(cc.kept(), 2);
    let out = cc.apply(&y).unwrap();
    assert!((out.norm() - y.norm()).abs() < 1e-9 * y.norm());
    assert_eq!(coil_compress(&y, 1.0).unwrap().n_coils(), nc);
    assert!(CoilCompression::fit(&y, 0.0).is_err());
}

#[test]
fn normalization_targets_fixed_norm() {
    let mut s = RandomStream::new(8);
    let y = KSpaceData::from_vec(2, 2, 4, 4, random_c(64, &mut s)).unwrap();
    let n = normalize_dataset(&y).unwrap();
    assert!((n.norm() - NORM_TARGET).abs() < 1e-9);
    assert!((n.norm_scale * NORM_TARGET - y.norm()).abs() < 1e-9);
    let again = normalize_dataset(&n).unwrap();
    assert!((again.norm_scale - n.norm_scale).abs() < 1e-12);
    assert!(normalize_dataset(&KSpaceData::zeros(1, 1, 2, 2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operator_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let (h, w, k) = (8, 8, 2);
        let a = ForwardOperator::new(
            generate_poisson_mask(h, w, k, 2.0, 4, seed).unwrap(),
            CoilSensitivities::uniform(h, w),
        ).unwrap();
        let mut s = RandomStream::new(seed);
        let x1 = VfaImageSeries::from_vec(k, h, w, random_c(k * h * w, &mut s)).unwrap();
        let x2 = VfaImageSeries::from_vec(k, h, w, random_c(k * h * w, &mut s)).unwrap();
        let mut comb = x1.clone();
        for (c, b) in comb.data_mut().iter_mut().zip(x2.data()) {
            *c = *c * alpha + b;
        }
        let lhs = a.apply_forward(&comb).unwrap();
        let y1 = a.apply_forward(&x1).unwrap();
        let y2 = a.apply_forward(&x2).unwrap();
        for ((l, p), q) in lhs.data().iter().zip(y1.data()).zip(y2.data()) {
            prop_assert!((l - (p * alpha + q)).norm() < 1e-10);
        }
    }
}
