//! Named-tensor checkpoints, little-endian throughout:
//!
//! ```text
//! "TDNNAS-CK1"  u32 version
//! u32 length + config hash
//! u32 tensor count
//! per tensor: u32 length + name, u8 dtype (0 = f32, 1 = f64),
//!             u32 rank, rank × u64 dims
//! payloads in manifest order, row-major
//! ```
//!
//! Model tensors are named `layer.{l}.linear`, `layer.{l}.affine`,
//! `layer.{l}.bias`, `classifier.weight` and `classifier.bias`;
//! architecture weights `arch.{l}.{axis}.log_alpha`.

use std::path::Path;

use super::bin::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::supernet::ArchWeights;
use crate::tdnnf::ModelParams;

pub const CHECKPOINT_MAGIC: &str = "TDNNAS-CK1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    /// Values widened to `f64`; `f32` tensors hold exactly representable
    /// values.
    pub data: Vec<f64>,
}

impl Tensor {
    fn new(name: String, dtype: Dtype, shape: Vec<usize>, data: &[f64]) -> Self {
        let data = match dtype {
            Dtype::F32 => data.iter().map(|&v| v as f32 as f64).collect(),
            Dtype::F64 => data.to_vec(),
        };
        Tensor { name, dtype, shape, data }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn new(config_hash: &str) -> Self {
        Checkpoint {
            config_hash: config_hash.into(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, dtype: Dtype, shape: Vec<usize>, data: &[f64]) {
        self.tensors.push(Tensor::new(name.into(), dtype, shape, data));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn add_model(&mut self, params: &ModelParams, dtype: Dtype) {
        for (l, p) in params.layers.iter().enumerate() {
            let lin = &p.linear;
            let aff = &p.affine;
            self.push(format!("layer.{l}.linear"), dtype, vec![lin.rows(), lin.cols()], lin.data());
            self.push(format!("layer.{l}.affine"), dtype, vec![aff.rows(), aff.cols()], aff.data());
            self.push(format!("layer.{l}.bias"), dtype, vec![p.bias.len()], &p.bias);
        }
        let c = &params.classifier;
        self.push("classifier.weight", dtype, vec![c.rows(), c.cols()], c.data());
        self.push("classifier.bias", dtype, vec![params.classifier_bias.len()], &params.classifier_bias);
    }

    pub fn add_arch(&mut self, arch: &ArchWeights) {
        for (l, a) in arch.layers.iter().enumerate() {
            for (k, v) in a.iter() {
                self.push(format!("arch.{l}.{}.log_alpha", k.name()), Dtype::F64, vec![v.len()], v);
            }
        }
    }

    fn fill(&self, name: &str, shape: &[usize], dst: &mut [f64]) -> Result<()> {
        let t = self
            .get(name)
            .ok_or_else(|| Error::shape("checkpoint", format!("missing tensor {name}")))?;
        if t.shape != shape {
            return Err(Error::shape(
                "checkpoint",
                format!("{name} has shape {:?}, expected {shape:?}", t.shape),
            ));
        }
        dst.copy_from_slice(&t.data);
        Ok(())
    }

    /// Overwrites every model tensor of `params` (shapes must match).
    pub fn load_model_into(&self, params: &mut ModelParams) -> Result<()> {
        for (l, p) in params.layers.iter_mut().enumerate() {
            let (r, c) = p.linear.shape();
            self.fill(&format!("layer.{l}.linear"), &[r, c], p.linear.data_mut())?;
            let (r, c) = p.affine.shape();
            self.fill(&format!("layer.{l}.affine"), &[r, c], p.affine.data_mut())?;
            let n = p.bias.len();
            self.fill(&format!("layer.{l}.bias"), &[n], &mut p.bias)?;
        }
        let (r, c) = params.classifier.shape();
        self.fill("classifier.weight", &[r, c], params.classifier.data_mut())?;
        let n = params.classifier_bias.len();
        self.fill("classifier.bias", &[n], &mut params.classifier_bias)
    }

    /// Overwrites every log α vector of `arch` (lengths must match).
    pub fn load_arch_into(&self, arch: &mut ArchWeights) -> Result<()> {
        for (l, a) in arch.layers.iter_mut().enumerate() {
            for k in crate::supernet::AxisKind::ALL {
                let v = a.get_mut(k);
                let n = v.len();
                self.fill(&format!("arch.{l}.{}.log_alpha", k.name()), &[n], v)?;
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(CHECKPOINT_MAGIC.as_bytes());
        w.u32(CHECKPOINT_VERSION);
        w.str(&self.config_hash);
        w.u32(self.tensors.len() as u32);
        for t in &self.tensors {
            w.str(&t.name);
            w.u8(t.dtype.code());
            w.u32(t.shape.len() as u32);
            for &d in &t.shape {
                w.u64(d as u64);
            }
        }
        for t in &self.tensors {
            for &v in &t.data {
                match t.dtype {
                    Dtype::F32 => w.f32(v as f32),
                    Dtype::F64 => w.f64(v),
                }
            }
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
        let mut r = ByteReader::new(bytes, path);
        r.header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let config_hash = r.str()?;
        let n = r.u32()? as usize;
        let mut manifest = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let name = r.str()?;
            let dtype = match r.u8()? {
                0 => Dtype::F32,
                1 => Dtype::F64,
                other => return Err(r.error(format!("tensor {name}: unknown dtype {other}"))),
            };
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| Ok(r.u64()? as usize))
                .collect::<Result<Vec<_>>>()?;
            manifest.push((name, dtype, shape));
        }
        let mut tensors = Vec::with_capacity(manifest.len());
        for (name, dtype, shape) in manifest {
            let len = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| r.error(format!("tensor {name}: shape overflows")))?;
            let data = (0..len)
                .map(|_| match dtype {
                    Dtype::F32 => r.f32().map(f64::from),
                    Dtype::F64 => r.f64(),
                })
                .collect::<Result<Vec<_>>>()?;
            tensors.push(Tensor { name, dtype, shape, data });
        }
        r.finish()?;
        Ok(Checkpoint { config_hash, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::decode(&read_file(path)?, path)
    }
}
