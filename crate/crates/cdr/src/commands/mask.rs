use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use cdr_core::forward::{default_calib, generate_poisson_mask, SamplingMask};
use clap::Args;

use crate::container::Container;
use crate::dataset::{write_mask, Dataset};
use crate::pgm::{self, Window};

#[derive(Args, Clone, Debug)]
pub struct MaskArgs {
    /// Dataset whose geometry the mask should match.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Calibration square side (default scales with the image).
    #[arg(long)]
    pub calib: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Write a mask container plus one graymap per flip angle.
pub fn mask(args: &MaskArgs) -> Result<SamplingMask> {
    let ds = Dataset::load(&args.dataset)?;
    let (k, h, w) = ds.mask.dims();
    let calib = args.calib.unwrap_or_else(|| default_calib(h));
    let m = generate_poisson_mask(h, w, k, args.r, calib, args.seed)?;
    let mut c = Container::new();
    c.set("kind", "mask")?;
    write_mask(&mut c, &m)?;
    c.write(&args.out)?;
    let png = args.out.join("planes");
    fs::create_dir_all(&png)?;
    let win = Window::new(0.0, 1.0)?;
    for a in 0..k {
        let vals: Vec<f64> = m.plane(a).iter().map(|&v| v as f64).collect();
        pgm::write(&png.join(format!("angle_{a:02}.pgm")), &vals, h, w, win)?;
    }
    log::info!("mask R {} (achieved {:.3}), calib {calib}, seed {}", args.r, m.acceleration(), args.seed);
    Ok(m)
}
