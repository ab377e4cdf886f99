//! Small dense complex linear algebra: one-sided Jacobi SVD and Cholesky.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;

use super::C64;
use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c).conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Thin SVD `m = U·diag(σ)·V^H` with `k = min(rows, cols)` components.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × k`, orthonormal columns.
    pub u: CMatrix,
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: CMatrix,
}

impl Svd {
    /// `U·diag(σ)·V^H` with the supplied singular values.
    pub fn reconstruct_with(&self, sigma: &[f64]) -> CMatrix {
        let k = self.sigma.len();
        let mut us = self.u.clone();
        for r in 0..us.rows {
            for j in 0..k {
                let v = us.get(r, j) * sigma[j];
                us.set(r, j, v);
            }
        }
        us.matmul(&self.v.adjoint())
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(&self.sigma)
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(m: &CMatrix) -> Svd {
    if m.rows < m.cols {
        let t = svd_tall(&m.adjoint());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    svd_tall(m)
}

fn svd_tall(m: &CMatrix) -> Svd {
    let (rows, n) = (m.rows, m.cols);
    // Work column-major: cols[j] is column j of the working matrix.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    const TOL: f64 = 1e-15;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b);
                let g = gamma.norm();
                if g == 0.0 || g <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of gamma so the pair is real.
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(core::cmp::Ordering::Equal));
    let smax = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let mut u = CMatrix::zeros(rows, n);
    let mut vm = CMatrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        let degenerate = s <= f64::EPSILON * smax * (rows as f64) || s == 0.0;
        let col = if degenerate {
            sorted.push(0.0);
            complete_basis(&u_cols, rows)
        } else {
            sorted.push(s);
            cols[j].iter().map(|z| z / s).collect()
        };
        for r in 0..rows {
            u.set(r, k, col[r]);
        }
        u_cols.push(col);
        for r in 0..n {
            vm.set(r, k, v[j][r]);
        }
    }
    sigma.clear();
    Svd {
        u,
        sigma: sorted,
        v: vm,
    }
}

/// cols[p], cols[q] ← c·p − s·φ·q, s·p + c·φ·q
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let bq = *b * phase;
        let ap = *a;
        *a = ap * c - bq * s;
        *b = ap * s + bq * c;
    }
}

/// A unit vector orthogonal to every vector in `basis` (Gram-Schmidt on e_i).
fn complete_basis(basis: &[Vec<C64>], n: usize) -> Vec<C64> {
    let mut best: Option<(f64, Vec<C64>)> = None;
    for i in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let proj = b
                    .iter()
                    .zip(&e)
                    .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y);
                for (ek, bk) in e.iter_mut().zip(b) {
                    *ek -= proj * bk;
                }
            }
        }
        let norm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            return e.into_iter().map(|z| z / norm).collect();
        }
        if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
            best = Some((norm, e));
        }
    }
    let (norm, e) = best.expect("non-empty basis candidates");
    e.into_iter().map(|z| z / norm).collect()
}

/// Lower-triangular `L` with real positive diagonal such that `a = L·L^H`.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows;
    if a.cols != n {
        return Err(crate::error::shape_err("cholesky needs a square matrix"));
    }
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            if (a.get(i, j) - a.get(j, i).conj()).norm() > 1e-10 * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if !(d > 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l.set(j, j, C64::new(d, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Solve `L·x = b` in place for lower-triangular `L`.
pub fn solve_lower(l: &CMatrix, b: &mut [C64]) {
    let n = l.rows;
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}
