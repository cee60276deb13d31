//! Versioned binary container for every on-disk artifact: encoder
//! checkpoints (parameters, batch-norm running statistics, optimizer
//! state), PLDA models, and tuned thresholds.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "UDAR" | u32 version | u32 n_meta | (u32 klen, key, u32 vlen, val)*
//! | u32 n_tensors | (u32 nlen, name, u8 dtype, u32 ndim, u64 dims*, payload)*
//! ```
//!
//! Readers reject any other version with a message naming the expected one.

use super::{Scalar, Tensor};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CONTAINER_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"UDAR";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an artifact file (bad magic)")]
    BadMagic,
    #[error("artifact format version {found} is not supported (expected {expected}); regenerate the artifact")]
    Version { found: u32, expected: u32 },
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error("artifact has no tensor named {0:?}")]
    MissingTensor(String),
    #[error("artifact has no metadata key {0:?}")]
    MissingMeta(String),
    #[error("tensor {name:?} has dtype tag {found}, expected {expected}")]
    DtypeMismatch { name: String, found: u8, expected: u8 },
}

#[derive(Debug, Clone)]
pub struct NamedTensor {
    pub name: String,
    pub dtype: u8,
    pub shape: Vec<usize>,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct Container {
    /// Insertion-ordered key/value metadata (config snapshot, seed, hashes).
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<NamedTensor>,
}

impl Container {
    pub fn new() -> Self {
        Container::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        if let Some(slot) = self.meta.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value;
        } else {
            self.meta.push((key.to_string(), value));
        }
    }

    pub fn meta(&self, key: &str) -> Result<&str, ContainerError> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| ContainerError::MissingMeta(key.to_string()))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ContainerError> {
        self.meta(key)?
            .parse()
            .map_err(|_| ContainerError::Malformed(format!("metadata {key:?} failed to parse")))
    }

    pub fn add_tensor<T: Scalar>(&mut self, name: &str, tensor: &Tensor<T>) {
        let mut bytes = Vec::with_capacity(tensor.len() * 8);
        for v in tensor.data() {
            // f32 payloads stay f32 on disk; f64 stay f64
            if T::DTYPE_TAG == 0 {
                bytes.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
            } else {
                bytes.extend_from_slice(&v.to_f64().to_le_bytes());
            }
        }
        self.tensors.push(NamedTensor {
            name: name.to_string(),
            dtype: T::DTYPE_TAG,
            shape: tensor.shape().to_vec(),
            bytes,
        });
    }

    pub fn tensor<T: Scalar>(&self, name: &str) -> Result<Tensor<T>, ContainerError> {
        let nt = self
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| ContainerError::MissingTensor(name.to_string()))?;
        if nt.dtype != T::DTYPE_TAG {
            return Err(ContainerError::DtypeMismatch {
                name: name.to_string(),
                found: nt.dtype,
                expected: T::DTYPE_TAG,
            });
        }
        let elem = if nt.dtype == 0 { 4 } else { 8 };
        let n: usize = nt.shape.iter().product();
        if nt.bytes.len() != n * elem {
            return Err(ContainerError::Malformed(format!(
                "tensor {name:?} payload length {} does not match shape {:?}",
                nt.bytes.len(),
                nt.shape
            )));
        }
        let mut data = Vec::with_capacity(n);
        for chunk in nt.bytes.chunks_exact(elem) {
            let v = if elem == 4 {
                f32::from_le_bytes(chunk.try_into().unwrap()) as f64
            } else {
                f64::from_le_bytes(chunk.try_into().unwrap())
            };
            data.push(T::from_f64(v));
        }
        Ok(Tensor::from_vec(&nt.shape, data))
    }

    pub fn has_tensor(&self, name: &str) -> bool {
        self.tensors.iter().any(|t| t.name == name)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), ContainerError> {
        w.write_all(MAGIC)?;
        w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
        w.write_all(&(self.meta.len() as u32).to_le_bytes())?;
        for (k, v) in &self.meta {
            write_str(w, k)?;
            write_str(w, v)?;
        }
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            write_str(w, &t.name)?;
            w.write_all(&[t.dtype])?;
            w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
            for d in &t.shape {
                w.write_all(&(*d as u64).to_le_bytes())?;
            }
            w.write_all(&t.bytes)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, ContainerError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != CONTAINER_VERSION {
            return Err(ContainerError::Version {
                found: version,
                expected: CONTAINER_VERSION,
            });
        }
        let n_meta = read_u32(r)? as usize;
        let mut meta = Vec::with_capacity(n_meta);
        for _ in 0..n_meta {
            let k = read_str(r)?;
            let v = read_str(r)?;
            meta.push((k, v));
        }
        let n_tensors = read_u32(r)? as usize;
        let mut tensors = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let name = read_str(r)?;
            let mut dtype = [0u8; 1];
            r.read_exact(&mut dtype)?;
            let dtype = dtype[0];
            if dtype > 1 {
                return Err(ContainerError::Malformed(format!(
                    "unknown dtype tag {dtype} for tensor {name:?}"
                )));
            }
            let ndim = read_u32(r)? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                shape.push(u64::from_le_bytes(b) as usize);
            }
            let elem = if dtype == 0 { 4 } else { 8 };
            let n: usize = shape.iter().product();
            let mut bytes = vec![0u8; n * elem];
            r.read_exact(&mut bytes)?;
            tensors.push(NamedTensor {
                name,
                dtype,
                shape,
                bytes,
            });
        }
        Ok(Container { meta, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut impl Read) -> Result<u32, ContainerError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> Result<String, ContainerError> {
    let len = read_u32(r)? as usize;
    if len > 1 << 24 {
        return Err(ContainerError::Malformed(format!("string length {len}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| ContainerError::Malformed("non-utf8 string".into()))
}
