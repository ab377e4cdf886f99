use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cdr_core::metrics::MetricsReport;
use cdr_core::signal::VfaImageSeries;
use clap::Args;

use super::T1_WINDOW_MAX;
use crate::container::Container;
use crate::dataset::{read_images, read_maps, Dataset};
use crate::pgm::{self, Window};
use crate::tables::{self, ReportRow};

#[derive(Args, Clone, Debug)]
pub struct ReportArgs {
    /// Reference dataset the cells were reconstructed from.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Result tree written by `run`; the report goes to `<out>/report`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportSummary {
    pub rows: Vec<ReportRow>,
    pub dir: PathBuf,
}

fn magnitude(x: &VfaImageSeries, angle: usize) -> Vec<f64> {
    x.plane(angle).iter().map(|z| z.norm()).collect()
}

fn completed_cells(tree: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(tree).with_context(|| format!("listing {}", tree.display()))? {
        let p = entry?.path();
        if p.join("result").join(crate::container::META_FILE).is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Score every completed cell and write `metrics.csv`, per-cell curves and
/// graymaps of the first flip angle, its error and the T1 map.
pub fn report(args: &ReportArgs) -> Result<ReportSummary> {
    let ds = Dataset::load(&args.dataset)?;
    let cells = completed_cells(&args.out)?;
    if cells.is_empty() {
        bail!("no completed cells under {}", args.out.display());
    }
    let dir = args.out.join("report");
    let curves = dir.join("curves");
    let images = dir.join("images");
    fs::create_dir_all(&curves)?;
    fs::create_dir_all(&images)?;
    let (_, h, w) = ds.imgs.dims();
    let gt0 = magnitude(&ds.imgs, 0);
    let img_win = Window::zero_to_max(&gt0);
    let diff_win = Window::new(0.0, 0.2 * img_win.hi)?;
    let t1_win = Window::new(0.0, T1_WINDOW_MAX)?;
    pgm::write(&images.join("reference_t1.pgm"), &ds.reference.t1, h, w, t1_win)?;
    pgm::write(&images.join("reference_recon.pgm"), &gt0, h, w, img_win)?;

    let mut rows = Vec::new();
    for cell in &cells {
        let name = cell.file_name().unwrap().to_string_lossy().to_string();
        let c = Container::read(&cell.join("result"))?;
        let x = read_images(&c, "imgs")?;
        let maps = read_maps(&c)?;
        let m = MetricsReport::evaluate(&x, &ds.imgs, Some((&maps.t1, &ds.reference)))?;
        rows.push(ReportRow {
            method: c.get("method").unwrap_or("?").to_string(),
            subject: c.get("subject").unwrap_or("?").to_string(),
            r: c.require("R")?,
            mu: c.get("mu").map(str::parse).transpose()?,
            step: c.require("step")?,
            nrmse: m.nrmse,
            ssim: m.ssim,
            ccc: m.ccc.unwrap_or(f64::NAN),
            t1_nrmse: m.t1_nrmse.unwrap_or(f64::NAN),
        });
        let trace = cell.join("trace.csv");
        if trace.is_file() {
            fs::copy(&trace, curves.join(format!("{name}.csv")))?;
        }
        let x0 = magnitude(&x, 0);
        let diff: Vec<f64> = x.plane(0).iter().zip(ds.imgs.plane(0)).map(|(a, b)| (a - b).norm()).collect();
        pgm::write(&images.join(format!("{name}_recon.pgm")), &x0, h, w, img_win)?;
        pgm::write(&images.join(format!("{name}_diff.pgm")), &diff, h, w, diff_win)?;
        pgm::write(&images.join(format!("{name}_t1.pgm")), &maps.t1, h, w, t1_win)?;
    }
    tables::write_report(&dir.join("metrics.csv"), &rows)?;
    Ok(ReportSummary { rows, dir })
}
