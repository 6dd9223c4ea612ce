//! Versioned binary parameter container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "CNE1"                    magic + format version
//! u32                       section count
//! per section:
//!   u16 + bytes             UTF-8 name
//!   u8                      kind: 0 = f32 tensor, 1 = UTF-8 text
//!   u32 + u64 * ndim        shape (text: one dim, the byte length)
//!   payload                 f32 LE values in row-major order, or text bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::TensorError;

pub const MAGIC: &[u8; 4] = b"CNE1";

#[derive(Clone, Debug, PartialEq)]
pub enum Section {
    Floats { shape: Vec<usize>, data: Vec<f32> },
    Text(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    sections: Vec<(String, Section)>,
}

fn corrupt(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8, TensorError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16, TensorError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, TensorError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, TensorError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a section.
    pub fn insert(&mut self, name: impl Into<String>, section: Section) {
        let name = name.into();
        match self.sections.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = section,
            None => self.sections.push((name, section)),
        }
    }

    pub fn insert_floats(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.insert(name, Section::Floats { shape, data });
    }

    pub fn insert_text(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.insert(name, Section::Text(text.into()));
    }

    pub fn get(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn floats(&self, name: &str) -> Result<(&[usize], &[f32]), TensorError> {
        match self.get(name) {
            Some(Section::Floats { shape, data }) => Ok((shape, data)),
            Some(_) => Err(corrupt(format!("section `{name}` is not a tensor"))),
            None => Err(corrupt(format!("missing section `{name}`"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str, TensorError> {
        match self.get(name) {
            Some(Section::Text(t)) => Ok(t),
            Some(_) => Err(corrupt(format!("section `{name}` is not text"))),
            None => Err(corrupt(format!("missing section `{name}`"))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), TensorError> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.sections.len() as u32).to_le_bytes())?;
        for (name, section) in &self.sections {
            let name_bytes = name.as_bytes();
            if name_bytes.len() > u16::MAX as usize {
                return Err(corrupt("section name too long"));
            }
            w.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
            w.write_all(name_bytes)?;
            match section {
                Section::Floats { shape, data } => {
                    w.write_all(&[0])?;
                    w.write_all(&(shape.len() as u32).to_le_bytes())?;
                    for &d in shape {
                        w.write_all(&(d as u64).to_le_bytes())?;
                    }
                    let mut buf = Vec::with_capacity(data.len() * 4);
                    for v in data {
                        buf.extend_from_slice(&v.to_le_bytes());
                    }
                    w.write_all(&buf)?;
                }
                Section::Text(text) => {
                    w.write_all(&[1])?;
                    w.write_all(&1u32.to_le_bytes())?;
                    w.write_all(&(text.len() as u64).to_le_bytes())?;
                    w.write_all(text.as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, TensorError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| corrupt("file too short for header"))?;
        if &magic != MAGIC {
            return Err(corrupt(format!("bad magic {magic:?}, expected \"CNE1\"")));
        }
        let count = read_u32(r)?;
        let mut out = Container::new();
        for _ in 0..count {
            let len = read_u16(r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| corrupt("section name is not UTF-8"))?;
            let kind = read_u8(r)?;
            let ndim = read_u32(r)? as usize;
            let shape = (0..ndim)
                .map(|_| read_u64(r).map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let section = match kind {
                0 => {
                    let n: usize = shape.iter().product();
                    let mut bytes = vec![0u8; n * 4];
                    r.read_exact(&mut bytes)?;
                    let data = bytes
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                        .collect();
                    Section::Floats { shape, data }
                }
                1 => {
                    let n = *shape.first().ok_or_else(|| corrupt("text section without length"))?;
                    let mut bytes = vec![0u8; n];
                    r.read_exact(&mut bytes)?;
                    Section::Text(
                        String::from_utf8(bytes).map_err(|_| corrupt("text section is not UTF-8"))?,
                    )
                }
                k => return Err(corrupt(format!("unknown section kind {k} for `{name}`"))),
            };
            out.sections.push((name, section));
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TensorError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TensorError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
