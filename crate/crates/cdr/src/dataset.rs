//! Typed view of a simulated dataset container: fully sampled k-space
//! (`ksp`), ground-truth images (`imgs`), coil sensitivities (`maps`), the
//! sampling pattern (`masks`) and the reference `t1` / `s0` maps.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cdr_core::forward::{CoilSensitivities, ForwardOperator, KSpaceData, SamplingMask};
use cdr_core::signal::{AcquisitionParams, QuantitativeMaps, VfaImageSeries};

use crate::container::Container;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub params: AcquisitionParams,
    pub ksp: KSpaceData,
    pub imgs: VfaImageSeries,
    pub sens: CoilSensitivities,
    pub mask: SamplingMask,
    pub reference: QuantitativeMaps,
    pub seed: u64,
    pub snr: f64,
}

pub fn format_list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

pub fn write_params(c: &mut Container, params: &AcquisitionParams) -> Result<()> {
    c.set("tr_ms", params.tr())?;
    c.set("flip_angles_rad", format_list(params.flip_angles()))?;
    Ok(())
}

pub fn read_params(c: &Container) -> Result<AcquisitionParams> {
    let tr: f64 = c.require("tr_ms")?;
    let angles = parse_list(c.get("flip_angles_rad").context("flip_angles_rad missing")?)?;
    Ok(AcquisitionParams::new(angles, tr)?)
}

pub fn write_mask(c: &mut Container, mask: &SamplingMask) -> Result<()> {
    let (k, h, w) = mask.dims();
    let vals: Vec<f64> = mask.data().iter().map(|&v| v as f64).collect();
    c.put_real("masks", &[k, h, w], &vals)?;
    c.set("mask.target_r", mask.target_r)?;
    c.set("mask.calib", mask.calib)?;
    c.set("mask.seed", mask.seed)?;
    Ok(())
}

pub fn read_mask(c: &Container) -> Result<SamplingMask> {
    let (shape, vals) = c.real("masks")?;
    let [k, h, w] = shape[..] else {
        bail!("masks must be [angles, h, w], got {shape:?}");
    };
    let grid = vals.iter().map(|&v| v as u8).collect();
    Ok(SamplingMask::from_planes(
        k,
        h,
        w,
        grid,
        c.require("mask.target_r")?,
        c.require("mask.calib")?,
        c.require("mask.seed")?,
    )?)
}

pub fn write_maps(c: &mut Container, maps: &QuantitativeMaps) -> Result<()> {
    c.put_real("t1", &[maps.h, maps.w], &maps.t1)?;
    c.put_real("s0", &[maps.h, maps.w], &maps.s0)?;
    Ok(())
}

pub fn read_maps(c: &Container) -> Result<QuantitativeMaps> {
    let (shape, t1) = c.real("t1")?;
    let (shape_s0, s0) = c.real("s0")?;
    let [h, w] = shape[..] else {
        bail!("t1 must be [h, w], got {shape:?}");
    };
    if shape_s0 != shape {
        bail!("s0 shape {shape_s0:?} differs from t1 shape {shape:?}");
    }
    Ok(QuantitativeMaps { h, w, t1, s0 })
}

pub fn write_images(c: &mut Container, name: &str, x: &VfaImageSeries) -> Result<()> {
    let (k, h, w) = x.dims();
    c.put_complex(name, &[k, h, w], x.data())?;
    Ok(())
}

pub fn read_images(c: &Container, name: &str) -> Result<VfaImageSeries> {
    let (shape, data) = c.complex(name)?;
    let [k, h, w] = shape[..] else {
        bail!("{name} must be [angles, h, w], got {shape:?}");
    };
    Ok(VfaImageSeries::from_vec(k, h, w, data)?)
}

impl Dataset {
    pub fn operator(&self) -> Result<ForwardOperator> {
        Ok(ForwardOperator::new(self.mask.clone(), self.sens.clone())?)
    }

    pub fn to_container(&self) -> Result<Container> {
        let mut c = Container::new();
        c.set("kind", "dataset")?;
        c.set("seed", self.seed)?;
        c.set("snr", self.snr)?;
        c.set("norm_scale", self.ksp.norm_scale)?;
        write_params(&mut c, &self.params)?;
        let (nc, k, h, w) = self.ksp.dims();
        c.put_complex("ksp", &[nc, k, h, w], self.ksp.data())?;
        write_images(&mut c, "imgs", &self.imgs)?;
        c.put_complex("maps", &[nc, h, w], self.sens.data())?;
        write_mask(&mut c, &self.mask)?;
        write_maps(&mut c, &self.reference)?;
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        if c.get("kind") != Some("dataset") {
            bail!("container is not a dataset");
        }
        let (shape, data) = c.complex("ksp")?;
        let [nc, k, h, w] = shape[..] else {
            bail!("ksp must be [coils, angles, h, w], got {shape:?}");
        };
        let mut ksp = KSpaceData::from_vec(nc, k, h, w, data)?;
        ksp.norm_scale = c.require("norm_scale")?;
        let (sshape, sdata) = c.complex("maps")?;
        if sshape != [nc, h, w] {
            bail!("maps shape {sshape:?} does not match ksp");
        }
        let params = read_params(c)?;
        if params.n_angles() != k {
            bail!("{} flip angles declared for {k} k-space angles", params.n_angles());
        }
        Ok(Self {
            params,
            ksp,
            imgs: read_images(c, "imgs")?,
            sens: CoilSensitivities::from_vec(nc, h, w, sdata)?,
            mask: read_mask(c)?,
            reference: read_maps(c)?,
            seed: c.require("seed")?,
            snr: c.require("snr")?,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let c = Container::read(dir).with_context(|| format!("reading dataset {}", dir.display()))?;
        Self::from_container(&c)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.to_container()?.write(dir)?;
        Ok(())
    }
}
