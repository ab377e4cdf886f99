//! Classical comparison reconstructions: L1-wavelet compressed sensing
//! (monotone FISTA) and locally-low-rank proximal gradient, plus the
//! ground-truth-informed (λ, N) grid search.

mod wavelet;

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{domain_err, Error, Result};
use crate::forward::{ForwardOperator, KSpaceData};
use crate::metrics::nrmse;
use crate::signal::VfaImageSeries;
use crate::tensor::{norm_sqr, svd, CMatrix, RandomStream, C64};

pub use wavelet::{Wavelet2d, D4_HIGH, D4_LOW};

const POWER_ITERS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    L1,
    Lr,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineConfig {
    pub method: Method,
    pub lambda: f64,
    pub n_iter: usize,
    pub llr_block: usize,
    pub wavelet_levels: usize,
    /// Seeds the power iteration and the LLR block shifts.
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(method: Method, lambda: f64, n_iter: usize) -> Self {
        Self {
            method,
            lambda,
            n_iter,
            llr_block: 8,
            wavelet_levels: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(domain_err("lambda must be finite and non-negative"));
        }
        if self.n_iter == 0 {
            return Err(domain_err("n_iter must be at least 1"));
        }
        if self.llr_block == 0 {
            return Err(domain_err("llr_block must be positive"));
        }
        if self.wavelet_levels == 0 {
            return Err(domain_err("wavelet_levels must be positive"));
        }
        Ok(())
    }
}

/// `z · max(|z| − t, 0) / |z|`.
pub fn soft_threshold(z: C64, t: f64) -> C64 {
    let m = z.norm();
    if m <= t {
        C64::new(0.0, 0.0)
    } else {
        z * ((m - t) / m)
    }
}

/// Singular-value soft-thresholding.
pub fn svt(m: &CMatrix, tau: f64) -> CMatrix {
    let d = svd(m);
    let shrunk: Vec<f64> = d.sigma.iter().map(|s| (s - tau).max(0.0)).collect();
    d.reconstruct_with(&shrunk)
}

/// Largest eigenvalue of `A^H A` by power iteration from a seeded start.
pub fn lipschitz_estimate(a: &ForwardOperator, seed: u64) -> Result<f64> {
    let (_, k, h, w) = a_dims(a);
    let mut s = RandomStream::new(seed).split(1);
    let data = (0..k * h * w).map(|_| C64::new(s.normal(), s.normal())).collect();
    let mut v = VfaImageSeries::from_vec(k, h, w, data)?;
    let mut lam = 0.0;
    for _ in 0..POWER_ITERS {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::AllZero("A^H A"));
        }
        for z in v.data_mut() {
            *z /= n;
        }
        let av = a.normal(&v)?;
        lam = av.norm();
        v = av;
    }
    if lam == 0.0 {
        return Err(Error::AllZero("A^H A"));
    }
    Ok(lam)
}

fn a_dims(a: &ForwardOperator) -> (usize, usize, usize, usize) {
    let (k, h, w) = a.mask().dims();
    (a.sens().n_coils(), k, h, w)
}

/// `½‖y − Ax‖²`.
pub fn data_term(y_u: &KSpaceData, a: &ForwardOperator, x: &VfaImageSeries) -> Result<f64> {
    let ax = a.apply_forward(x)?;
    ax.check_same(y_u)?;
    let r: f64 = ax
        .data()
        .iter()
        .zip(y_u.data())
        .map(|(p, q)| (p - q).norm_sqr())
        .sum();
    Ok(0.5 * r)
}

/// `Σ_angles ‖W x_k‖₁`.
pub fn wavelet_l1(x: &VfaImageSeries, levels: usize) -> Result<f64> {
    let (k, h, w) = x.dims();
    let wt = Wavelet2d::new(h, w, levels)?;
    Ok((0..k).map(|i| wt.forward(x.plane(i)).iter().map(|c| c.norm()).sum::<f64>()).sum())
}

/// Full L1 objective `½‖y − Ax‖² + λ‖Wx‖₁`.
pub fn l1_objective(y_u: &KSpaceData, a: &ForwardOperator, x: &VfaImageSeries, cfg: &BaselineConfig) -> Result<f64> {
    Ok(data_term(y_u, a, x)? + cfg.lambda * wavelet_l1(x, cfg.wavelet_levels)?)
}

fn gradient_step(a: &ForwardOperator, aty: &VfaImageSeries, z: &VfaImageSeries, inv_l: f64) -> Result<VfaImageSeries> {
    let mut out = a.normal(z)?;
    for ((o, zi), b) in out.data_mut().iter_mut().zip(z.data()).zip(aty.data()) {
        *o = zi - (*o - b) * inv_l;
    }
    Ok(out)
}

fn wavelet_prox(x: &mut VfaImageSeries, levels: usize, t: f64) -> Result<()> {
    if t == 0.0 {
        return Ok(());
    }
    let (k, h, w) = x.dims();
    let wt = Wavelet2d::new(h, w, levels)?;
    for i in 0..k {
        let mut c = wt.forward(x.plane(i));
        for z in &mut c {
            *z = soft_threshold(*z, t);
        }
        x.plane_mut(i).copy_from_slice(&wt.inverse(&c));
    }
    Ok(())
}

fn check_method(cfg: &BaselineConfig, want: Method) -> Result<()> {
    cfg.validate()?;
    if cfg.method != want {
        return Err(domain_err("baseline config names a different method"));
    }
    Ok(())
}

/// L1-wavelet reconstruction by FISTA with restart on objective increase.
pub fn l1_wavelet_recon(y_u: &KSpaceData, a: &ForwardOperator, cfg: &BaselineConfig) -> Result<VfaImageSeries> {
    l1_wavelet_recon_observed(y_u, a, cfg, |_, _, _| {})
}

/// As [`l1_wavelet_recon`], also returning the objective before the first
/// iteration followed by its value after each one.
pub fn l1_wavelet_recon_traced(
    y_u: &KSpaceData,
    a: &ForwardOperator,
    cfg: &BaselineConfig,
) -> Result<(VfaImageSeries, Vec<f64>)> {
    let mut hist = Vec::with_capacity(cfg.n_iter + 1);
    let x = l1_wavelet_recon_observed(y_u, a, cfg, |it, _, f| {
        if it == 0 {
            hist.clear();
        }
        hist.push(f);
    })?;
    Ok((x, hist))
}

/// `observe(iteration, x, objective)` runs for the initial point
/// (iteration 0) and after every iteration.
pub fn l1_wavelet_recon_observed<F>(
    y_u: &KSpaceData,
    a: &ForwardOperator,
    cfg: &BaselineConfig,
    mut observe: F,
) -> Result<VfaImageSeries>
where
    F: FnMut(usize, &VfaImageSeries, f64),
{
    check_method(cfg, Method::L1)?;
    let aty = a.apply_adjoint(y_u)?;
    let inv_l = 1.0 / lipschitz_estimate(a, cfg.seed)?;
    let thr = cfg.lambda * inv_l;

    let mut x = aty.clone();
    let mut fx = l1_objective(y_u, a, &x, cfg)?;
    observe(0, &x, fx);
    let mut z = x.clone();
    let mut t: f64 = 1.0;
    for it in 1..=cfg.n_iter {
        let mut u = gradient_step(a, &aty, &z, inv_l)?;
        wavelet_prox(&mut u, cfg.wavelet_levels, thr)?;
        let fu = l1_objective(y_u, a, &u, cfg)?;
        if fu <= fx {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let mut zn = u.clone();
            for ((zi, ui), xi) in zn.data_mut().iter_mut().zip(u.data()).zip(x.data()) {
                *zi = ui + (ui - xi) * beta;
            }
            z = zn;
            x = u;
            fx = fu;
            t = t_next;
        } else {
            z = x.clone();
            t = 1.0;
        }
        observe(it, &x, fx);
    }
    Ok(x)
}

/// Apply SVT to every block of a cyclically shifted `b × b` grid; the
/// Casorati matrix of a block is pixels × flip angles.
pub fn block_svt(x: &mut VfaImageSeries, block: usize, shift: (usize, usize), tau: f64) {
    let (k, h, w) = x.dims();
    let (sy, sx) = shift;
    let mut idx = Vec::with_capacity(block * block);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            idx.clear();
            for p in by..(by + block).min(h) {
                for q in bx..(bx + block).min(w) {
                    idx.push(((p + sy) % h) * w + (q + sx) % w);
                }
            }
            let mut m = CMatrix::zeros(idx.len(), k);
            for (r, &pix) in idx.iter().enumerate() {
                for a in 0..k {
                    m.set(r, a, x.plane(a)[pix]);
                }
            }
            let s = svt(&m, tau);
            for (r, &pix) in idx.iter().enumerate() {
                for a in 0..k {
                    x.plane_mut(a)[pix] = s.get(r, a);
                }
            }
        }
    }
}

/// Locally-low-rank reconstruction by proximal gradient with a fresh seeded
/// block-grid shift every iteration.
pub fn llr_recon(y_u: &KSpaceData, a: &ForwardOperator, cfg: &BaselineConfig) -> Result<VfaImageSeries> {
    llr_recon_observed(y_u, a, cfg, |_, _| {})
}

/// `observe(iteration, x)` runs for the initial point and after every
/// iteration.
pub fn llr_recon_observed<F>(y_u: &KSpaceData, a: &ForwardOperator, cfg: &BaselineConfig, mut observe: F) -> Result<VfaImageSeries>
where
    F: FnMut(usize, &VfaImageSeries),
{
    check_method(cfg, Method::Lr)?;
    let (_, _, h, w) = a_dims(a);
    if cfg.llr_block > h || cfg.llr_block > w {
        return Err(domain_err("LLR block is larger than the image"));
    }
    let aty = a.apply_adjoint(y_u)?;
    let inv_l = 1.0 / lipschitz_estimate(a, cfg.seed)?;
    let tau = cfg.lambda * inv_l;
    let mut shifts = RandomStream::new(cfg.seed).split(2);
    let mut x = aty.clone();
    observe(0, &x);
    for it in 1..=cfg.n_iter {
        x = gradient_step(a, &aty, &x, inv_l)?;
        let shift = (shifts.below(cfg.llr_block), shifts.below(cfg.llr_block));
        if tau > 0.0 {
            block_svt(&mut x, cfg.llr_block, shift, tau);
        }
        observe(it, &x);
    }
    Ok(x)
}

/// Result of [`grid_search`]; `table` lists `(λ, N, NRMSE)` for every grid
/// point in λ-major order.
#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub best: BaselineConfig,
    pub images: VfaImageSeries,
    pub nrmse: f64,
    pub table: Vec<(f64, usize, f64)>,
}

/// Exhaustive (λ, N) search against ground truth. Each λ is solved once to
/// the largest N and the iterates at every requested N are scored, which
/// matches independent runs since both solvers are deterministic prefixes.
/// Ties go to the smaller λ, then the smaller N.
pub fn grid_search(
    y_u: &KSpaceData,
    a: &ForwardOperator,
    gt: &VfaImageSeries,
    template: &BaselineConfig,
    lambda_grid: &[f64],
    n_grid: &[usize],
) -> Result<GridSearchResult> {
    if lambda_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::Missing("grid points"));
    }
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let n_max = *ns.last().unwrap_or(&0);

    let mut table = Vec::with_capacity(lambdas.len() * ns.len());
    let mut best: Option<(f64, BaselineConfig, VfaImageSeries)> = None;
    for &lambda in &lambdas {
        let cfg = BaselineConfig {
            lambda,
            n_iter: n_max,
            ..*template
        };
        cfg.validate()?;
        let mut hits: Vec<(usize, f64, VfaImageSeries)> = Vec::new();
        let mut err = None;
        let mut record = |it: usize, x: &VfaImageSeries| {
            if err.is_some() || ns.binary_search(&it).is_err() {
                return;
            }
            match nrmse(x, gt) {
                Ok(e) => hits.push((it, e, x.clone())),
                Err(e) => err = Some(e),
            }
        };
        match cfg.method {
            Method::L1 => {
                l1_wavelet_recon_observed(y_u, a, &cfg, |it, x, _| record(it, x))?;
            }
            Method::Lr => {
                llr_recon_observed(y_u, a, &cfg, &mut record)?;
            }
        }
        if let Some(e) = err {
            return Err(e);
        }
        for (it, e, img) in hits {
            table.push((lambda, it, e));
            if best.as_ref().map_or(true, |(b, _, _)| e < *b) {
                let cfg = BaselineConfig { n_iter: it, ..cfg };
                best = Some((e, cfg, img));
            }
        }
    }
    let (nrmse, best, images) = best.ok_or(Error::Missing("grid points"))?;
    Ok(GridSearchResult {
        best,
        images,
        nrmse,
        table,
    })
}

/// Dispatch on `cfg.method`.
pub fn reconstruct(y_u: &KSpaceData, a: &ForwardOperator, cfg: &BaselineConfig) -> Result<VfaImageSeries> {
    match cfg.method {
        Method::L1 => l1_wavelet_recon(y_u, a, cfg),
        Method::Lr => llr_recon(y_u, a, cfg),
    }
}

/// Residual energy `‖y − Ax‖²` without the ½, for quick progress checks.
pub fn residual_energy(y_u: &KSpaceData, a: &ForwardOperator, x: &VfaImageSeries) -> Result<f64> {
    let ax = a.apply_forward(x)?;
    ax.check_same(y_u)?;
    let diff: Vec<C64> = ax.data().iter().zip(y_u.data()).map(|(p, q)| p - q).collect();
    Ok(norm_sqr(&diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{generate_poisson_mask, simulate_sensitivities, CoilSensitivities};

    fn random_series(k: usize, h: usize, w: usize, seed: u64) -> VfaImageSeries {
        let mut s = RandomStream::new(seed);
        let d = (0..k * h * w).map(|_| C64::new(s.normal(), s.normal())).collect();
        VfaImageSeries::from_vec(k, h, w, d).unwrap()
    }

    fn unitary_setup(h: usize, w: usize, k: usize) -> (ForwardOperator, VfaImageSeries, KSpaceData) {
        let a = ForwardOperator::fully_sampled(CoilSensitivities::uniform(h, w), k);
        let gt = random_series(k, h, w, 3);
        let y = a.apply_forward(&gt).unwrap();
        (a, gt, y)
    }

    fn accelerated_setup() -> (ForwardOperator, VfaImageSeries, KSpaceData) {
        let (h, w, k) = (32, 32, 3);
        let mask = generate_poisson_mask(h, w, k, 4.0, 8, 5).unwrap();
        let sens = simulate_sensitivities(h, w, 2, 6).unwrap();
        let a = ForwardOperator::new(mask, sens).unwrap();
        let mut gt = VfaImageSeries::zeros(k, h, w);
        for i in 0..k {
            for r in 8..24 {
                for c in 10..22 {
                    gt.plane_mut(i)[r * w + c] = C64::new(1.0 + i as f64, 0.0);
                }
            }
        }
        let y = a.apply_forward(&gt).unwrap();
        (a, gt, y)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(C64::new(0.5, 0.0), 0.7), C64::new(0.0, 0.0));
        let phi = 0.8;
        let z = soft_threshold(C64::from_polar(1.0, phi), 0.3);
        assert!((z.norm() - 0.7).abs() < 1e-15);
        assert!((z.arg() - phi).abs() < 1e-14);
    }

    #[test]
    fn svt_shrinks_singular_values() {
        let mut m = CMatrix::zeros(3, 2);
        m.set(0, 0, C64::new(5.0, 0.0));
        m.set(1, 1, C64::new(1.0, 0.0));
        let s = svt(&m, 2.0);
        assert!((s.get(0, 0) - C64::new(3.0, 0.0)).norm() < 1e-12);
        assert!(s.get(1, 1).norm() < 1e-12);
    }

    #[test]
    fn lipschitz_of_unitary_is_one() {
        let (a, _, _) = unitary_setup(8, 8, 2);
        assert!((lipschitz_estimate(&a, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_recovers_on_unitary() {
        let (a, gt, y) = unitary_setup(16, 16, 3);
        let l1 = l1_wavelet_recon(&y, &a, &BaselineConfig::new(Method::L1, 0.0, 3)).unwrap();
        assert!(nrmse(&l1, &gt).unwrap() < 1e-8);
        let lr = llr_recon(&y, &a, &BaselineConfig::new(Method::Lr, 0.0, 3)).unwrap();
        assert!(nrmse(&lr, &gt).unwrap() < 1e-8);
    }

    #[test]
    fn fista_objective_monotone() {
        let (a, _, y) = accelerated_setup();
        let cfg = BaselineConfig::new(Method::L1, 0.05, 40);
        let (_, hist) = l1_wavelet_recon_traced(&y, &a, &cfg).unwrap();
        assert_eq!(hist.len(), 41);
        assert!(hist.windows(2).all(|p| p[1] <= p[0]));
        assert!(hist[40] < hist[0]);
    }

    #[test]
    fn llr_deterministic_and_reduces_residual() {
        let (a, _, y) = accelerated_setup();
        let cfg = BaselineConfig::new(Method::Lr, 0.02, 5);
        let x1 = llr_recon(&y, &a, &cfg).unwrap();
        let x2 = llr_recon(&y, &a, &cfg).unwrap();
        assert_eq!(x1, x2);
        let x0 = a.apply_adjoint(&y).unwrap();
        assert!(residual_energy(&y, &a, &x1).unwrap() < residual_energy(&y, &a, &x0).unwrap());
    }

    #[test]
    fn rank_one_blocks_keep_structure() {
        let (k, h, w) = (4, 8, 8);
        let base = random_series(1, h, w, 8);
        let mut x = VfaImageSeries::zeros(k, h, w);
        for i in 0..k {
            for (d, s) in x.plane_mut(i).iter_mut().zip(base.plane(0)) {
                *d = s * (1.0 + i as f64);
            }
        }
        let orig = x.clone();
        block_svt(&mut x, 8, (3, 5), 0.5);
        let sigma = orig.norm();
        let factor = (sigma - 0.5) / sigma;
        for (a, b) in x.data().iter().zip(orig.data()) {
            assert!((a - b * factor).norm() < 1e-10);
        }
    }

    #[test]
    fn config_errors() {
        let (a, _, y) = unitary_setup(8, 8, 2);
        assert!(l1_wavelet_recon(&y, &a, &BaselineConfig::new(Method::Lr, 0.1, 3)).is_err());
        assert!(llr_recon(&y, &a, &BaselineConfig::new(Method::Lr, -1.0, 3)).is_err());
        assert!(llr_recon(&y, &a, &BaselineConfig::new(Method::Lr, 0.1, 0)).is_err());
        let big = BaselineConfig {
            llr_block: 16,
            ..BaselineConfig::new(Method::Lr, 0.1, 3)
        };
        assert!(llr_recon(&y, &a, &big).is_err());
    }

    #[test]
    fn grid_search_rules() {
        let (a, gt, y) = unitary_setup(8, 8, 2);
        let t = BaselineConfig::new(Method::L1, 0.0, 1);
        let one = grid_search(&y, &a, &gt, &t, &[0.3], &[2]).unwrap();
        assert_eq!((one.best.lambda, one.best.n_iter), (0.3, 2));
        let g = grid_search(&y, &a, &gt, &t, &[0.5, 0.0, 0.1], &[3, 1]).unwrap();
        assert_eq!((g.best.lambda, g.best.n_iter), (0.0, 1));
        assert_eq!(g.table.len(), 6);
        assert!(grid_search(&y, &a, &gt, &t, &[], &[1]).is_err());
    }
}
