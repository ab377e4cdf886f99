//! CD and CD+r optimization: losses, the alternating x_m refresh, loss-curve
//! smoothing, argmin stop selection, checkpoints and warmstarting.

pub mod savgol;

pub use savgol::{argmin, savgol_filter, savgol_smooth, Smoother};

use alloc::vec::Vec;

use crate::error::{domain_err, shape_err, Error, Result};
use crate::forward::{ForwardOperator, KSpaceData};
use crate::metrics::nrmse;
use crate::net::{adam_step, backward, forward, NetworkConfig, NetworkWeights, OptimizerState};
use crate::signal::{dictionary_match, QuantitativeMaps, SpgrDictionary, VfaImageSeries};
use crate::tensor::norm_sqr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Data consistency only; stop chosen on the ground-truth NRMSE curve.
    Cd,
    /// Data consistency plus SPGR model consistency; stop chosen on the
    /// regularization loss.
    CdR,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub mode: Mode,
    pub mu: f64,
    /// Refresh period `j` of the model-consistent series `x_m`.
    pub model_update_period: usize,
    pub total_steps: usize,
    pub step_size: f64,
    pub smoother: Smoother,
    pub checkpoint_period: usize,
}

impl TrainingConfig {
    /// Paper schedule: 10000 steps, `j = 5`, `δ = 0.01`.
    pub fn paper(mode: Mode, mu: f64) -> Self {
        Self {
            mode,
            mu,
            model_update_period: 5,
            total_steps: 10_000,
            step_size: crate::net::DEFAULT_STEP_SIZE,
            smoother: Smoother::default(),
            checkpoint_period: 50,
        }
    }

    /// Desk schedule: as [`TrainingConfig::paper`] with 3000 steps.
    pub fn desk(mode: Mode, mu: f64) -> Self {
        Self {
            total_steps: 3000,
            ..Self::paper(mode, mu)
        }
    }

    /// CD requires `mu = 0`; CD+r accepts any `mu ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(domain_err("mu must be finite and non-negative"));
        }
        if self.mode == Mode::Cd && self.mu != 0.0 {
            return Err(domain_err("CD mode is the mu = 0 case"));
        }
        if self.model_update_period == 0 || self.checkpoint_period == 0 || self.total_steps == 0 {
            return Err(domain_err("periods and step count must be positive"));
        }
        if !(self.step_size > 0.0) {
            return Err(domain_err("step size must be positive"));
        }
        self.smoother.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub data: f64,
    /// Unweighted `‖x − x_m‖²`.
    pub reg: f64,
}

/// `A·x − y_u` on sampled entries.
fn residual(y_u: &KSpaceData, op: &ForwardOperator, x: &VfaImageSeries) -> Result<KSpaceData> {
    let mut r = op.apply_forward(x)?;
    r.check_same(y_u)?;
    let (nc, na, _, _) = r.dims();
    for c in 0..nc {
        for k in 0..na {
            let m = op.mask().plane(k);
            let yu = y_u.plane(c, k);
            for ((z, &mk), &yv) in r.plane_mut(c, k).iter_mut().zip(m).zip(yu) {
                if mk != 0 {
                    *z -= yv;
                }
            }
        }
    }
    Ok(r)
}

/// `‖y_u − A·x‖²` over sampled entries.
pub fn cd_loss(y_u: &KSpaceData, op: &ForwardOperator, x: &VfaImageSeries) -> Result<f64> {
    Ok(norm_sqr(residual(y_u, op, x)?.data()))
}

/// `data + mu·‖x − x_m‖²`, with the regularization term also reported
/// unweighted.
pub fn cdr_loss(
    y_u: &KSpaceData,
    op: &ForwardOperator,
    x: &VfaImageSeries,
    mu: f64,
    x_m: &VfaImageSeries,
) -> Result<LossTerms> {
    x.check_same(x_m)?;
    let data = cd_loss(y_u, op, x)?;
    let reg = reg_term(x, x_m);
    Ok(LossTerms {
        total: data + mu * reg,
        data,
        reg,
    })
}

fn reg_term(x: &VfaImageSeries, x_m: &VfaImageSeries) -> f64 {
    x.data().iter().zip(x_m.data()).map(|(a, b)| (a - b).norm_sqr()).sum()
}

/// Loss terms and `∂L/∂Re x + i·∂L/∂Im x = 2·A^H(A·x − y_u) + 2·mu·(x − x_m)`.
/// `x_m` is a constant here.
pub fn loss_and_gradient(
    y_u: &KSpaceData,
    op: &ForwardOperator,
    x: &VfaImageSeries,
    mu: f64,
    x_m: &VfaImageSeries,
) -> Result<(LossTerms, VfaImageSeries)> {
    x.check_same(x_m)?;
    let r = residual(y_u, op, x)?;
    let data = norm_sqr(r.data());
    let reg = reg_term(x, x_m);
    let mut g = op.apply_adjoint(&r)?;
    for ((gv, xv), mv) in g.data_mut().iter_mut().zip(x.data()).zip(x_m.data()) {
        *gv = *gv * 2.0 + (xv - mv) * (2.0 * mu);
    }
    Ok((
        LossTerms {
            total: data + mu * reg,
            data,
            reg,
        },
        g,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub weights: NetworkWeights,
    pub images: VfaImageSeries,
}

/// Per-step loss history plus checkpoints and the selected stop.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    pub mu: f64,
    pub smoother: Smoother,
    pub data_loss: Vec<f64>,
    pub reg_loss: Vec<f64>,
    pub total_loss: Vec<f64>,
    /// Empty when no ground truth was supplied.
    pub nrmse: Vec<f64>,
    pub step_seconds: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    /// Smoothed stopping curve (set by [`select_stop`] callers).
    pub smoothed: Vec<f64>,
    pub selected_stop: Option<usize>,
}

impl TrainingTrace {
    pub fn new(mu: f64, smoother: Smoother) -> Self {
        Self {
            mu,
            smoother,
            data_loss: Vec::new(),
            reg_loss: Vec::new(),
            total_loss: Vec::new(),
            nrmse: Vec::new(),
            step_seconds: Vec::new(),
            checkpoints: Vec::new(),
            smoothed: Vec::new(),
            selected_stop: None,
        }
    }

    pub fn len(&self) -> usize {
        self.total_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_loss.is_empty()
    }

    pub fn push(&mut self, terms: LossTerms, nrmse: Option<f64>, seconds: f64) {
        self.data_loss.push(terms.data);
        self.reg_loss.push(terms.reg);
        self.total_loss.push(terms.total);
        if let Some(v) = nrmse {
            self.nrmse.push(v);
        }
        self.step_seconds.push(seconds);
    }

    /// First checkpoint at or after `step` (the last one if none is).
    pub fn checkpoint_for(&self, step: usize) -> Option<&Checkpoint> {
        self.checkpoints
            .iter()
            .find(|c| c.step >= step)
            .or_else(|| self.checkpoints.last())
    }

    /// The curve the stop is chosen on.
    pub fn stopping_curve(&self, mode: Mode) -> Result<&[f64]> {
        match mode {
            Mode::CdR => Ok(&self.reg_loss),
            Mode::Cd if self.nrmse.len() == self.len() && !self.nrmse.is_empty() => Ok(&self.nrmse),
            Mode::Cd => Err(Error::Missing("ground truth (CD stops on the NRMSE curve)")),
        }
    }
}

/// Argmin of the smoothed stopping curve (regularization loss for CD+r,
/// NRMSE for CD); ties go to the earliest step.
pub fn select_stop(trace: &TrainingTrace, mode: Mode) -> Result<usize> {
    Ok(smoothed_stop(trace, mode)?.0)
}

fn smoothed_stop(trace: &TrainingTrace, mode: Mode) -> Result<(usize, Vec<f64>)> {
    if trace.is_empty() {
        return Err(Error::Missing("trace steps"));
    }
    let smoothed = trace.smoother.apply(trace.stopping_curve(mode)?)?;
    let stop = argmin(&smoothed).expect("non-empty");
    Ok((stop, smoothed))
}

/// Monotonic seconds source around each step; the core has no clock.
pub trait Clock {
    fn now(&self) -> f64;
}

#[derive(Default)]
pub struct RunOptions<'a> {
    pub ground_truth: Option<&'a VfaImageSeries>,
    pub warmstart: Option<&'a NetworkWeights>,
    pub clock: Option<&'a dyn Clock>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub trace: TrainingTrace,
    /// Step of the checkpoint returned.
    pub checkpoint_step: usize,
    pub images: VfaImageSeries,
    pub maps: QuantitativeMaps,
    pub weights: NetworkWeights,
    pub final_weights: NetworkWeights,
}

/// Saved weights as the starting point of a new reconstruction; the
/// optimizer state always starts fresh.
pub fn warmstart(cfg: &NetworkConfig, saved: &NetworkWeights) -> Result<NetworkWeights> {
    NetworkWeights::from_params(cfg, saved.params().to_vec())
}

/// Train `G(w)` against `y_u`.
///
/// Each step runs forward, refreshes `x_m` by dictionary matching on steps
/// `0, j, 2j, …`, evaluates the loss, records the trace and checkpoints, then
/// backpropagates and takes one Adam step. At the end the stopping curve is
/// smoothed, its argmin selected, and the first checkpoint at or after it is
/// returned with its dictionary-matched maps.
pub fn run_reconstruction(
    y_u: &KSpaceData,
    op: &ForwardOperator,
    dict: &SpgrDictionary,
    net_cfg: &NetworkConfig,
    train_cfg: &TrainingConfig,
    opts: RunOptions<'_>,
) -> Result<Reconstruction> {
    train_cfg.validate()?;
    net_cfg.validate()?;
    let (k, h, w) = op.mask().dims();
    if (net_cfg.out_angles, net_cfg.out_h, net_cfg.out_w) != (k, h, w) {
        return Err(shape_err("network output does not match the operator"));
    }
    if dict.n_angles() != k {
        return Err(shape_err("dictionary atoms do not match the flip-angle count"));
    }
    if let Some(gt) = opts.ground_truth {
        if gt.dims() != (k, h, w) {
            return Err(shape_err("ground truth does not match the operator"));
        }
    }
    if train_cfg.mode == Mode::Cd && opts.ground_truth.is_none() {
        return Err(Error::Missing("ground truth (CD stops on the NRMSE curve)"));
    }
    let mut weights = match opts.warmstart {
        Some(saved) => warmstart(net_cfg, saved)?,
        None => NetworkWeights::init(net_cfg)?,
    };
    let mut state = OptimizerState::new(weights.len(), train_cfg.step_size);
    let noise = net_cfg.noise_input();
    let mut trace = TrainingTrace::new(train_cfg.mu, train_cfg.smoother);
    let mut x_m = VfaImageSeries::zeros(k, h, w);
    let last = train_cfg.total_steps - 1;
    let now = || opts.clock.map_or(0.0, |c| c.now());
    for step in 0..train_cfg.total_steps {
        let t0 = now();
        let (x, tape) = forward(net_cfg, &weights, &noise)?;
        if step % train_cfg.model_update_period == 0 {
            x_m = dictionary_match(&x, dict)?.1;
        }
        let (terms, grad) = loss_and_gradient(y_u, op, &x, train_cfg.mu, &x_m)?;
        let err = match opts.ground_truth {
            Some(gt) => Some(nrmse(&x, gt)?),
            None => None,
        };
        let grads = backward(&tape, &weights, &grad)?;
        if step % train_cfg.checkpoint_period == 0 || step == last {
            trace.checkpoints.push(Checkpoint {
                step,
                weights: weights.clone(),
                images: x,
            });
        }
        adam_step(&mut weights, &grads, &mut state)?;
        trace.push(terms, err, now() - t0);
    }
    let (stop, smoothed) = smoothed_stop(&trace, train_cfg.mode)?;
    trace.smoothed = smoothed;
    trace.selected_stop = Some(stop);
    let ck = trace.checkpoint_for(stop).expect("final step is always checkpointed").clone();
    let (maps, _) = dictionary_match(&ck.images, dict)?;
    Ok(Reconstruction {
        trace,
        checkpoint_step: ck.step,
        images: ck.images,
        maps,
        weights: ck.weights,
        final_weights: weights,
    })
}

/// Zero-filled starting image `A^H y_u`.
pub fn zero_filled(y_u: &KSpaceData, op: &ForwardOperator) -> Result<VfaImageSeries> {
    op.apply_adjoint(y_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{simulate_sensitivities, SamplingMask};
    use crate::tensor::{RandomStream, C64};

    fn random_series(k: usize, h: usize, w: usize, seed: u64) -> VfaImageSeries {
        let mut r = RandomStream::new(seed);
        let d = (0..k * h * w).map(|_| C64::new(r.normal(), r.normal())).collect();
        VfaImageSeries::from_vec(k, h, w, d).unwrap()
    }

    #[test]
    fn loss_anchors() {
        let op = ForwardOperator::fully_sampled(simulate_sensitivities(8, 8, 2, 1).unwrap(), 2);
        let x = random_series(2, 8, 8, 2);
        let y = op.apply_forward(&x).unwrap();
        assert!(cd_loss(&y, &op, &x).unwrap() < 1e-20);
        let zero = VfaImageSeries::zeros(2, 8, 8);
        assert!((cd_loss(&y, &op, &zero).unwrap() - norm_sqr(y.data())).abs() < 1e-9);
        let t = cdr_loss(&y, &op, &zero, 0.0, &x).unwrap();
        assert_eq!(t.total, t.data);
        assert_eq!(cdr_loss(&y, &op, &x, 0.3, &x).unwrap().reg, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::desk(Mode::Cd, 0.1).validate().is_err());
        assert!(TrainingConfig::desk(Mode::CdR, -1.0).validate().is_err());
        assert!(TrainingConfig::desk(Mode::CdR, 0.0).validate().is_ok());
        let mut c = TrainingConfig::desk(Mode::CdR, 0.1);
        c.smoother.window = 50;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stop_selection_on_simple_curves() {
        let mut t = TrainingTrace::new(0.1, Smoother { window: 5, degree: 1, derivative: 0 });
        for i in 0..100 {
            let v = (i as f64 - 40.0).abs();
            t.push(LossTerms { total: v, data: 0.0, reg: v }, None, 0.0);
        }
        assert_eq!(select_stop(&t, Mode::CdR).unwrap(), 40);
        assert!(select_stop(&t, Mode::Cd).is_err());
        let mut d = TrainingTrace::new(0.1, Smoother::default());
        for i in 0..80 {
            let v = 100.0 - i as f64;
            d.push(LossTerms { total: v, data: 0.0, reg: v }, None, 0.0);
        }
        assert_eq!(select_stop(&d, Mode::CdR).unwrap(), 79);
        assert!(select_stop(&TrainingTrace::new(0.1, Smoother::default()), Mode::CdR).is_err());
    }

    #[test]
    fn checkpoint_lookup_rounds_up() {
        let cfg = NetworkConfig::desk(2, 8, 8, 0);
        let w = NetworkWeights::zeros(&cfg).unwrap();
        let mut t = TrainingTrace::new(0.0, Smoother::default());
        for s in [0, 50, 100, 120] {
            t.checkpoints.push(Checkpoint {
                step: s,
                weights: w.clone(),
                images: VfaImageSeries::zeros(2, 8, 8),
            });
        }
        assert_eq!(t.checkpoint_for(0).unwrap().step, 0);
        assert_eq!(t.checkpoint_for(51).unwrap().step, 100);
        assert_eq!(t.checkpoint_for(119).unwrap().step, 120);
    }

    #[test]
    fn cd_requires_ground_truth() {
        let sens = simulate_sensitivities(8, 8, 1, 0).unwrap();
        let op = ForwardOperator::new(SamplingMask::full(2, 8, 8), sens).unwrap();
        let p = crate::signal::AcquisitionParams::from_degrees(&[5.0, 15.0], 6.1).unwrap();
        let dict = SpgrDictionary::build(&p, 50.0, 4000.0, 20).unwrap();
        let y = KSpaceData::zeros(1, 2, 8, 8);
        let mut net = NetworkConfig::desk(2, 8, 8, 0);
        net.n_blocks = 2;
        let cfg = TrainingConfig::desk(Mode::Cd, 0.0);
        let r = run_reconstruction(&y, &op, &dict, &net, &cfg, RunOptions::default());
        assert!(matches!(r, Err(Error::Missing(_))));
    }
}
