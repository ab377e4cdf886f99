//! On-disk dataset container.
//!
//! A container is a directory with a `meta.txt` descriptor (one `key = value`
//! per line, keys sorted) and one `<name>.bin` file per array. Arrays are
//! little-endian IEEE-754 `f32`, row-major; complex arrays interleave real and
//! imaginary parts. Arrays are kept as raw bytes in memory, so reading and
//! rewriting a container reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cdr_core::C64;
use thiserror::Error;

pub const META_FILE: &str = "meta.txt";
const FORMAT: &str = "cdr-container";
const VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed descriptor line {line}: {text:?}")]
    BadLine { line: usize, text: String },
    #[error("descriptor key {0:?} is missing or invalid")]
    BadKey(String),
    #[error("array {name:?}: expected {expected} bytes, found {found}")]
    Length { name: String, expected: usize, found: usize },
    #[error("array {0:?} not present")]
    NoArray(String),
    #[error("array {name:?} is {found}, not {wanted}")]
    WrongElement { name: String, wanted: &'static str, found: &'static str },
    #[error("invalid array name or meta key {0:?}")]
    BadName(String),
}

type Result<T> = std::result::Result<T, ContainerError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Element {
    F32,
    Cf32,
}

impl Element {
    pub fn tag(self) -> &'static str {
        match self {
            Element::F32 => "f32",
            Element::Cf32 => "cf32",
        }
    }

    fn size(self) -> usize {
        match self {
            Element::F32 => 4,
            Element::Cf32 => 8,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "f32" => Some(Element::F32),
            "cf32" => Some(Element::Cf32),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub element: Element,
    pub shape: Vec<usize>,
    bytes: Vec<u8>,
}

impl Array {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    meta: BTreeMap<String, String>,
    arrays: BTreeMap<String, Array>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
        && !s.starts_with("array.")
        && s != "format"
        && s != "version"
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| ContainerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set<V: ToString>(&mut self, key: &str, value: V) -> Result<()> {
        let value = value.to_string();
        if !valid_name(key) || value.contains('\n') {
            return Err(ContainerError::BadName(key.to_string()));
        }
        self.meta.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ContainerError::BadKey(key.to_string()))
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn array(&self, name: &str) -> Option<&Array> {
        self.arrays.get(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.arrays.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.keys().map(String::as_str)
    }

    pub fn put_real(&mut self, name: &str, shape: &[usize], data: &[f64]) -> Result<()> {
        let mut bytes = Vec::with_capacity(data.len() * 4);
        for &v in data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        self.insert(name, Element::F32, shape, bytes)
    }

    pub fn put_complex(&mut self, name: &str, shape: &[usize], data: &[C64]) -> Result<()> {
        let mut bytes = Vec::with_capacity(data.len() * 8);
        for z in data {
            bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
        self.insert(name, Element::Cf32, shape, bytes)
    }

    fn insert(&mut self, name: &str, element: Element, shape: &[usize], bytes: Vec<u8>) -> Result<()> {
        if !valid_name(name) {
            return Err(ContainerError::BadName(name.to_string()));
        }
        let expected = shape.iter().product::<usize>() * element.size();
        if bytes.len() != expected {
            return Err(ContainerError::Length {
                name: name.to_string(),
                expected,
                found: bytes.len(),
            });
        }
        self.arrays.insert(
            name.to_string(),
            Array {
                element,
                shape: shape.to_vec(),
                bytes,
            },
        );
        Ok(())
    }

    fn typed(&self, name: &str, wanted: Element) -> Result<&Array> {
        let a = self.arrays.get(name).ok_or_else(|| ContainerError::NoArray(name.to_string()))?;
        if a.element != wanted {
            return Err(ContainerError::WrongElement {
                name: name.to_string(),
                wanted: wanted.tag(),
                found: a.element.tag(),
            });
        }
        Ok(a)
    }

    pub fn real(&self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        let a = self.typed(name, Element::F32)?;
        let data = a
            .bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok((a.shape.clone(), data))
    }

    pub fn complex(&self, name: &str) -> Result<(Vec<usize>, Vec<C64>)> {
        let a = self.typed(name, Element::Cf32)?;
        let data = a
            .bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                C64::new(re as f64, im as f64)
            })
            .collect();
        Ok((a.shape.clone(), data))
    }

    fn descriptor(&self) -> String {
        let mut lines = BTreeMap::new();
        lines.insert("format".to_string(), FORMAT.to_string());
        lines.insert("version".to_string(), VERSION.to_string());
        lines.insert("endianness".to_string(), "little".to_string());
        for (k, v) in &self.meta {
            lines.insert(k.clone(), v.clone());
        }
        for (name, a) in &self.arrays {
            let dims: Vec<String> = a.shape.iter().map(usize::to_string).collect();
            lines.insert(format!("array.{name}"), format!("{} {}", a.element.tag(), dims.join("x")));
        }
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Write into `dir`, creating it if needed. Stale `.bin` files from a
    /// previous container in the same directory are left alone.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io(dir, fs::create_dir_all(dir))?;
        for (name, a) in &self.arrays {
            let p = dir.join(format!("{name}.bin"));
            io(&p, fs::write(&p, &a.bytes))?;
        }
        let p = dir.join(META_FILE);
        io(&p, fs::write(&p, self.descriptor()))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join(META_FILE);
        let text = io(&p, fs::read_to_string(&p))?;
        let mut c = Container::new();
        let mut declared = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| ContainerError::BadLine {
                line: i + 1,
                text: line.to_string(),
            })?;
            match k {
                "format" if v == FORMAT => {}
                "version" if v == VERSION => {}
                "endianness" if v == "little" => {}
                "format" | "version" | "endianness" => return Err(ContainerError::BadKey(k.to_string())),
                _ => match k.strip_prefix("array.") {
                    Some(name) => declared.push((name.to_string(), v.to_string())),
                    None => {
                        c.meta.insert(k.to_string(), v.to_string());
                    }
                },
            }
        }
        if c.meta.contains_key("format") {
            return Err(ContainerError::BadKey("format".into()));
        }
        for (name, spec) in declared {
            let bad = || ContainerError::BadKey(format!("array.{name}"));
            let (tag, dims) = spec.split_once(' ').ok_or_else(bad)?;
            let element = Element::parse(tag).ok_or_else(bad)?;
            let shape = dims
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            let p = dir.join(format!("{name}.bin"));
            let bytes = io(&p, fs::read(&p))?;
            c.insert(&name, element, &shape, bytes)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_is_sorted_and_typed() {
        let mut c = Container::new();
        c.set("seed", 7).unwrap();
        c.put_real("t1", &[2, 3], &[1.0; 6]).unwrap();
        c.put_complex("ksp", &[1, 2], &[C64::new(1.0, -2.0); 2]).unwrap();
        let d = c.descriptor();
        let keys: Vec<&str> = d.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(d.contains("array.ksp = cf32 1x2\n"));
        assert!(d.contains("array.t1 = f32 2x3\n"));
    }

    #[test]
    fn rejects_reserved_names_and_bad_lengths() {
        let mut c = Container::new();
        assert!(c.set("format", 1).is_err());
        assert!(c.set("array.x", 1).is_err());
        assert!(c.set("note", "a\nb").is_err());
        assert!(c.put_real("x", &[3], &[1.0, 2.0]).is_err());
        assert!(c.put_real("a b", &[1], &[1.0]).is_err());
        assert!(matches!(c.real("none"), Err(ContainerError::NoArray(_))));
        c.put_real("r", &[1], &[1.0]).unwrap();
        assert!(matches!(c.complex("r"), Err(ContainerError::WrongElement { .. })));
    }

    #[test]
    fn values_are_rounded_to_single_precision() {
        let mut c = Container::new();
        c.put_complex("z", &[1], &[C64::new(0.1, 1.0 / 3.0)]).unwrap();
        let (_, z) = c.complex("z").unwrap();
        assert_eq!(z[0].re, 0.1f32 as f64);
        assert_eq!(z[0].im, (1.0f32 / 3.0) as f64);
        assert_eq!(&c.array("z").unwrap().bytes[..4], &0.1f32.to_le_bytes());
    }
}
