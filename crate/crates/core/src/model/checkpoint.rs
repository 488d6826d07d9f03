//! Binary checkpoint format, byte layout:
//!
//! ```text
//! magic   5 bytes  "CLNET"
//! version u16 LE   currently 1
//! input   u8 rank, then one u32 LE per dimension
//! layers  u32 LE count, then per layer a u8 kind tag
//!           0 dense       + input u32, output u32
//!           1 relu
//!           2 conv2d      + in_channels u32, out_channels u32, kernel u32, stride u32
//!           3 maxpool2x2
//!           4 flatten
//!         (the last layer is always the head)
//! dims    embedding_dim u32, num_classes u32
//! entries u32 LE count, then per entry:
//!           layer u32, role u8 (0 weight, 1 bias), trainable u8,
//!           value count u32, then that many f32 LE values
//! ```
//!
//! Values are written bit-for-bit, so save/load round-trips are exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::arch::ArchConfig;
use crate::model::net::LayeredNet;
use crate::nn::{LayerSpec, ParamEntry, ParamRole, ParamSet, Tensor};

const MAGIC: &[u8; 5] = b"CLNET";
const VERSION: u16 = 1;

pub fn save(net: &LayeredNet, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(net))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<LayeredNet> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}

/// Loads a checkpoint and verifies it matches the given architecture, so a
/// resumed run cannot silently continue from a different model.
pub fn load_matching(path: &Path, arch: &ArchConfig, num_classes: usize) -> Result<LayeredNet> {
    let net = load(path)?;
    if net.input_shape() != arch.input_shape {
        return Err(Error::Format(format!(
            "checkpoint input_shape {:?} does not match expected {:?}",
            net.input_shape(),
            arch.input_shape
        )));
    }
    if net.embedding_dim() != arch.embedding_dim {
        return Err(Error::Format(format!(
            "checkpoint embedding_dim {} does not match expected {}",
            net.embedding_dim(),
            arch.embedding_dim
        )));
    }
    if net.num_classes() != num_classes {
        return Err(Error::Format(format!(
            "checkpoint num_classes {} does not match expected {num_classes}",
            net.num_classes()
        )));
    }
    if net.body() != arch.body.as_slice() {
        return Err(Error::Format(
            "checkpoint body layers do not match expected architecture".into(),
        ));
    }
    Ok(net)
}

pub fn to_bytes(net: &LayeredNet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    out.push(net.input_shape().len() as u8);
    for &d in net.input_shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }

    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        match *layer {
            LayerSpec::Dense { input, output } => {
                out.push(0);
                out.extend_from_slice(&(input as u32).to_le_bytes());
                out.extend_from_slice(&(output as u32).to_le_bytes());
            }
            LayerSpec::Relu => out.push(1),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                out.push(2);
                for v in [in_channels, out_channels, kernel, stride] {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
            }
            LayerSpec::MaxPool2x2 => out.push(3),
            LayerSpec::Flatten => out.push(4),
        }
    }

    out.extend_from_slice(&(net.embedding_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(net.num_classes() as u32).to_le_bytes());

    out.extend_from_slice(&(net.params().entries().len() as u32).to_le_bytes());
    for e in net.params().entries() {
        out.extend_from_slice(&(e.layer as u32).to_le_bytes());
        out.push(match e.role {
            ParamRole::Weight => 0,
            ParamRole::Bias => 1,
        });
        out.push(u8::from(e.trainable));
        out.extend_from_slice(&(e.tensor.len() as u32).to_le_bytes());
        for v in e.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<LayeredNet> {
    let mut r = Reader { bytes, pos: 0 };

    let magic = r.take(5, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"CLNET\"",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}, expected {VERSION}"
        )));
    }

    let rank = r.u8("input rank")? as usize;
    let mut input_shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        input_shape.push(r.u32("input dim")? as usize);
    }

    let n_layers = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let tag = r.u8("layer kind")?;
        let layer = match tag {
            0 => LayerSpec::Dense {
                input: r.u32("dense input")? as usize,
                output: r.u32("dense output")? as usize,
            },
            1 => LayerSpec::Relu,
            2 => LayerSpec::Conv2d {
                in_channels: r.u32("conv in_channels")? as usize,
                out_channels: r.u32("conv out_channels")? as usize,
                kernel: r.u32("conv kernel")? as usize,
                stride: r.u32("conv stride")? as usize,
            },
            3 => LayerSpec::MaxPool2x2,
            4 => LayerSpec::Flatten,
            other => {
                return Err(Error::Format(format!(
                    "unknown layer kind tag {other} at layer {i}"
                )))
            }
        };
        layers.push(layer);
    }

    let embedding_dim = r.u32("embedding_dim")? as usize;
    let num_classes = r.u32("num_classes")? as usize;

    let n_entries = r.u32("entry count")? as usize;
    let mut params = ParamSet::new();
    for i in 0..n_entries {
        let layer = r.u32("entry layer")? as usize;
        let role = match r.u8("entry role")? {
            0 => ParamRole::Weight,
            1 => ParamRole::Bias,
            other => {
                return Err(Error::Format(format!(
                    "unknown role tag {other} in entry {i}"
                )))
            }
        };
        let trainable = r.u8("entry trainable flag")? != 0;
        let len = r.u32("entry value count")? as usize;
        if layer >= layers.len() {
            return Err(Error::Format(format!(
                "entry {i} references layer {layer}, but only {} layers exist",
                layers.len()
            )));
        }
        let expected_shape = layers[layer]
            .param_shapes()
            .into_iter()
            .find(|(rl, _)| *rl == role)
            .map(|(_, s)| s)
            .ok_or_else(|| {
                Error::Format(format!(
                    "entry {i}: layer {layer} ({:?}) has no {role:?} parameters",
                    layers[layer]
                ))
            })?;
        let expected_len: usize = expected_shape.iter().product();
        if len != expected_len {
            return Err(Error::Format(format!(
                "entry {i}: {len} values for {role:?} of layer {layer}, expected {expected_len}"
            )));
        }
        let raw = r.take(len * 4, "entry values")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect::<Vec<f32>>();
        let tensor = Tensor::from_vec(&expected_shape, data)
            .map_err(|e| Error::Format(format!("entry {i}: {e}")))?;
        params.push(ParamEntry {
            layer,
            role,
            tensor,
            trainable,
        });
    }

    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last entry",
            bytes.len() - r.pos
        )));
    }

    LayeredNet::from_parts(input_shape, layers, embedding_dim, num_classes, params)
        .map_err(|e| Error::Format(format!("inconsistent checkpoint: {e}")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated file: reading {field} at offset {} needs {n} bytes, {} remain",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u16(&mut self, field: &str) -> Result<u16> {
        let b = self.take(2, field)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
