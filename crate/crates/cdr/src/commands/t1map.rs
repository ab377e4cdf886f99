use std::path::PathBuf;

use anyhow::Result;
use cdr_core::signal::{dictionary_match, QuantitativeMaps, SpgrDictionary};
use clap::Args;

use super::T1_WINDOW_MAX;
use crate::container::Container;
use crate::dataset::{read_images, read_params, write_maps, write_params};
use crate::pgm::{self, Window};

#[derive(Args, Clone, Debug)]
pub struct T1mapArgs {
    /// Any container holding an image series and acquisition parameters.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Name of the image array to match.
    #[arg(long, default_value = "imgs")]
    pub images: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Dictionary-match an image series into T1 / S0 maps.
pub fn t1map(args: &T1mapArgs) -> Result<QuantitativeMaps> {
    let src = Container::read(&args.dataset)?;
    let params = read_params(&src)?;
    let x = read_images(&src, &args.images)?;
    let dict = SpgrDictionary::with_defaults(&params);
    let (maps, _) = dictionary_match(&x, &dict)?;
    let mut c = Container::new();
    c.set("kind", "t1map")?;
    write_params(&mut c, &params)?;
    write_maps(&mut c, &maps)?;
    c.write(&args.out)?;
    pgm::write(&args.out.join("t1.pgm"), &maps.t1, maps.h, maps.w, Window::new(0.0, T1_WINDOW_MAX)?)?;
    pgm::write(&args.out.join("s0.pgm"), &maps.s0, maps.h, maps.w, Window::zero_to_max(&maps.s0))?;
    Ok(maps)
}
