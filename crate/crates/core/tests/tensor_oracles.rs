use cdr_core::tensor::{cholesky, fft2_centered, ifft2_centered, svd, CMatrix, Fft1, RandomStream};
use cdr_core::{ComplexGrid, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn random_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut s = RandomStream::new(seed);
    (0..n).map(|_| C64::new(s.normal(), s.normal())).collect()
}

fn naive_dft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

#[test]
fn fft_matches_direct_sum_for_every_length() {
    for n in 1..=40 {
        let x = random_vec(n, n as u64);
        let mut got = x.clone();
        Fft1::new(n).forward(&mut got);
        let want = naive_dft(&x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10 * (n as f64), "n = {n}");
        }
        Fft1::new(n).inverse(&mut got);
        for (a, b) in got.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-12, "n = {n}");
        }
    }
}

#[test]
fn centered_fft_puts_dc_at_center() {
    let (h, w) = (6, 5);
    let img = ComplexGrid::from_vec(&[h, w], vec![C64::new(1.0, 0.0); h * w]).unwrap();
    let k = fft2_centered(&img).unwrap();
    for (i, v) in k.data().iter().enumerate() {
        if i == (h / 2) * w + w / 2 {
            assert!((v.re - ((h * w) as f64).sqrt()).abs() < 1e-12);
        } else {
            assert!(v.norm() < 1e-12);
        }
    }
}

#[test]
fn centered_fft_of_centered_impulse_is_flat() {
    let (h, w) = (8, 7);
    let mut d = vec![C64::new(0.0, 0.0); h * w];
    d[(h / 2) * w + w / 2] = C64::new(1.0, 0.0);
    let k = fft2_centered(&ComplexGrid::from_vec(&[h, w], d).unwrap()).unwrap();
    let amp = 1.0 / ((h * w) as f64).sqrt();
    for v in k.data() {
        assert!((v - C64::new(amp, 0.0)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_and_inverse(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
        let x = ComplexGrid::from_vec(&[h, w], random_vec(h * w, seed)).unwrap();
        let k = fft2_centered(&x).unwrap();
        prop_assert!((k.norm() - x.norm()).abs() <= 1e-10 * x.norm().max(1.0));
        let back = ifft2_centered(&k).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}

fn to_nalgebra(m: &CMatrix) -> DMatrix<nalgebra::Complex<f64>> {
    DMatrix::from_fn(m.rows, m.cols, |r, c| {
        let v = m.get(r, c);
        nalgebra::Complex::new(v.re, v.im)
    })
}

#[test]
fn singular_values_match_hermitian_eigenvalues() {
    for (seed, (rows, cols)) in [(6, 3), (3, 6), (9, 9), (64, 9), (5, 1)].into_iter().enumerate() {
        let m = CMatrix::from_vec(rows, cols, random_vec(rows * cols, seed as u64 + 11));
        let d = svd(&m);
        let g = to_nalgebra(&m.adjoint()) * to_nalgebra(&m);
        let mut eig: Vec<f64> = g.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (s, e) in d.sigma.iter().zip(&eig) {
            assert!((s - e).abs() < 1e-9 * eig[0], "{rows}x{cols}: {s} vs {e}");
        }
        let rec = d.reconstruct();
        for (a, b) in rec.data.iter().zip(&m.data) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(d.sigma.windows(2).all(|p| p[0] >= p[1]));
        let utu = d.u.adjoint().matmul(&d.u);
        for r in 0..utu.rows {
            for c in 0..utu.cols {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((utu.get(r, c) - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn cholesky_reconstructs_and_rejects_indefinite() {
    let b = CMatrix::from_vec(4, 4, random_vec(16, 3));
    let mut spd = b.matmul(&b.adjoint());
    for i in 0..4 {
        let v = spd.get(i, i) + C64::new(0.5, 0.0);
        spd.set(i, i, v);
    }
    let l = cholesky(&spd).unwrap();
    let back = l.matmul(&l.adjoint());
    for (a, b) in back.data.iter().zip(&spd.data) {
        assert!((a - b).norm() < 1e-12);
    }
    let mut bad = CMatrix::identity(2);
    bad.set(1, 1, C64::new(-1.0, 0.0));
    assert!(cholesky(&bad).is_err());
}

#[test]
fn random_streams_reproduce_and_split_independently() {
    let mut a = RandomStream::new(42);
    let mut b = RandomStream::new(42);
    let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
    let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
    assert_eq!(xs, ys);
    let parent = RandomStream::new(42);
    let mut c1 = parent.split(1);
    let mut c2 = parent.split(2);
    assert_ne!(c1.next_u64(), c2.next_u64());
    let mut s = RandomStream::new(7);
    let n = 20000;
    let draws: Vec<f64> = (0..n).map(|_| s.normal()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.04);
}
