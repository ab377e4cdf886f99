use std::path::PathBuf;

use anyhow::{Context, Result};
use cdr_core::forward::{default_calib, generate_poisson_mask, simulate_sensitivities, SamplingMask};
use cdr_core::phantom::{make_reference_phantom, synthesize_dataset, PhantomSpec};
use cdr_core::signal::AcquisitionParams;
use clap::Args;

use crate::dataset::Dataset;

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Output container directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Square image side.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub coils: usize,
    /// k-space SNR; `inf` for noiseless data.
    #[arg(long, default_value_t = 20.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Acceleration of the stored mask (1 = fully sampled).
    #[arg(long = "R", default_value_t = 1.0)]
    pub r: f64,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        Self {
            out: PathBuf::new(),
            size: 64,
            coils: 4,
            snr: 20.0,
            seed: 0,
            r: 1.0,
        }
    }
}

pub fn build(args: &SimulateArgs) -> Result<Dataset> {
    let n = args.size;
    let params = AcquisitionParams::vfa_protocol();
    let reference = make_reference_phantom(&PhantomSpec::brain_like(n, n, args.snr, args.seed))?;
    let sens = simulate_sensitivities(n, n, args.coils, args.seed)?;
    let (ksp, imgs) = synthesize_dataset(&reference, &params, &sens, args.snr, args.seed)?;
    let k = params.n_angles();
    let mask = if args.r == 1.0 {
        SamplingMask::full(k, n, n)
    } else {
        generate_poisson_mask(n, n, k, args.r, default_calib(n), args.seed)?
    };
    Ok(Dataset {
        params,
        ksp,
        imgs,
        sens,
        mask,
        reference,
        seed: args.seed,
        snr: args.snr,
    })
}

/// Simulate the brain phantom and write a complete dataset container.
pub fn simulate(args: &SimulateArgs) -> Result<Dataset> {
    let ds = build(args)?;
    ds.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    log::info!(
        "simulated {}x{} with {} coils, snr {}, seed {} -> {}",
        args.size,
        args.size,
        args.coils,
        args.snr,
        args.seed,
        args.out.display()
    );
    Ok(ds)
}
