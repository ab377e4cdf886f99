//! 8-bit binary portable graymaps (P5) with the display window recorded in a
//! header comment.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            bail!("window [{lo}, {hi}] is empty");
        }
        Ok(Self { lo, hi })
    }

    /// `[0, max]`, or `[0, 1]` for an all-zero image.
    pub fn zero_to_max(values: &[f64]) -> Self {
        let m = values.iter().fold(0.0f64, |m, v| m.max(*v));
        Self { lo: 0.0, hi: if m > 0.0 { m } else { 1.0 } }
    }

    /// Affine map of `[lo, hi]` onto `0..=255`, clamped, rounded to nearest.
    pub fn level(&self, v: f64) -> u8 {
        if v.is_nan() {
            return 0;
        }
        let t = ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        (t * 255.0).round() as u8
    }
}

pub fn encode(values: &[f64], h: usize, w: usize, window: Window) -> Result<Vec<u8>> {
    if values.len() != h * w {
        bail!("image has {} values, expected {h}×{w}", values.len());
    }
    let mut out = format!("P5\n# window {} {}\n{w} {h}\n255\n", window.lo, window.hi).into_bytes();
    out.extend(values.iter().map(|&v| window.level(v)));
    Ok(out)
}

pub fn write(path: &Path, values: &[f64], h: usize, w: usize, window: Window) -> Result<()> {
    let bytes = encode(values, h, w, window)?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Parsed graymap: pixels, dimensions and the recorded window if present.
#[derive(Clone, Debug, PartialEq)]
pub struct Graymap {
    pub h: usize,
    pub w: usize,
    pub pixels: Vec<u8>,
    pub window: Option<Window>,
}

pub fn decode(bytes: &[u8]) -> Result<Graymap> {
    let mut pos = 0;
    let mut window = None;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map(|e| pos + e).context("truncated header")?;
        let line = std::str::from_utf8(&bytes[pos..end])?.trim();
        pos = end + 1;
        if let Some(rest) = line.strip_prefix("# window ") {
            let v: Vec<f64> = rest.split_whitespace().map(str::parse).collect::<Result<_, _>>()?;
            if let [lo, hi] = v[..] {
                window = Some(Window { lo, hi });
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        fields.extend(line.split_whitespace().map(str::to_string));
    }
    if fields[0] != "P5" || fields[3] != "255" {
        bail!("not an 8-bit P5 graymap");
    }
    let w: usize = fields[1].parse()?;
    let h: usize = fields[2].parse()?;
    let pixels = bytes[pos..].to_vec();
    if pixels.len() != h * w {
        bail!("graymap has {} pixels, header says {w}×{h}", pixels.len());
    }
    Ok(Graymap { h, w, pixels, window })
}
