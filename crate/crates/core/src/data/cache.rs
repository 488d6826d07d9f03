//! Stream cache format, byte layout:
//!
//! ```text
//! magic       6 bytes  "CLSTRM"
//! version     u16 LE   currently 1
//! classes     u32 LE
//! experiences u32 LE count, then per experience:
//!   name      u16 LE length + UTF-8 bytes
//!   shape     u8 rank, then one u32 LE per dimension (shared by all samples)
//!   counts    train u32 LE, test u32 LE
//!   samples   train then test, each: product(shape) f32 LE values + label u8
//! ```

use std::path::Path;

use crate::data::{Experience, Sample};
use crate::error::{Error, Result};
use crate::nn::Tensor;

const MAGIC: &[u8; 6] = b"CLSTRM";
const VERSION: u16 = 1;

pub fn write_stream(stream: &[Experience], classes: usize, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(stream, classes)?)?;
    Ok(())
}

pub fn read_stream(path: &Path) -> Result<(Vec<Experience>, usize)> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}

pub fn to_bytes(stream: &[Experience], classes: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(classes as u32).to_le_bytes());
    out.extend_from_slice(&(stream.len() as u32).to_le_bytes());
    for exp in stream {
        let shape = exp.input_shape().ok_or_else(|| {
            Error::Input(format!("experience \"{}\" has no samples", exp.name))
        })?;
        let name = exp.name.as_bytes();
        if name.len() > u16::MAX as usize {
            return Err(Error::Input(format!(
                "experience name \"{}\" too long to serialize",
                exp.name
            )));
        }
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(shape.len() as u8);
        for &d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&(exp.train.len() as u32).to_le_bytes());
        out.extend_from_slice(&(exp.test.len() as u32).to_le_bytes());
        for s in exp.train.iter().chain(&exp.test) {
            if s.x.shape() != shape {
                return Err(Error::Input(format!(
                    "experience \"{}\" mixes sample shapes {:?} and {:?}",
                    exp.name,
                    shape,
                    s.x.shape()
                )));
            }
            if s.label >= classes || s.label > u8::MAX as usize {
                return Err(Error::Input(format!(
                    "label {} out of range for {classes} classes",
                    s.label
                )));
            }
            for v in s.x.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.push(s.label as u8);
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<(Vec<Experience>, usize)> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize, field: &str| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Format(format!(
                "truncated stream cache: reading {field} at offset {pos} needs {n} bytes, {} remain",
                bytes.len() - *pos
            )));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let u16_at = |pos: &mut usize, field: &str| -> Result<u16> {
        let b = take(pos, 2, field)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    };
    let u32_at = |pos: &mut usize, field: &str| -> Result<u32> {
        let b = take(pos, 4, field)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    };

    if take(&mut pos, 6, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, expected \"CLSTRM\"".into()));
    }
    let version = u16_at(&mut pos, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported stream cache version {version}, expected {VERSION}"
        )));
    }
    let classes = u32_at(&mut pos, "classes")? as usize;
    let n_exp = u32_at(&mut pos, "experience count")? as usize;
    let mut stream = Vec::with_capacity(n_exp);
    for id in 0..n_exp {
        let name_len = u16_at(&mut pos, "name length")? as usize;
        let name = String::from_utf8(take(&mut pos, name_len, "name")?.to_vec())
            .map_err(|_| Error::Format(format!("experience {id} name is not UTF-8")))?;
        let rank = take(&mut pos, 1, "shape rank")?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32_at(&mut pos, "shape dim")? as usize);
        }
        let values: usize = shape.iter().product();
        let n_train = u32_at(&mut pos, "train count")? as usize;
        let n_test = u32_at(&mut pos, "test count")? as usize;
        let mut read_samples = |n: usize| -> Result<Vec<Sample>> {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let raw = take(&mut pos, values * 4, "sample values")?;
                let data: Vec<f32> = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                let label = take(&mut pos, 1, "sample label")?[0] as usize;
                if label >= classes {
                    return Err(Error::Format(format!(
                        "label {label} out of range for {classes} classes"
                    )));
                }
                out.push(Sample {
                    x: Tensor::from_vec(&shape, data)
                        .map_err(|e| Error::Format(format!("bad sample data: {e}")))?,
                    label,
                });
            }
            Ok(out)
        };
        let train = read_samples(n_train)?;
        let test = read_samples(n_test)?;
        stream.push(Experience {
            id,
            name,
            train,
            test,
        });
    }
    if pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last experience",
            bytes.len() - pos
        )));
    }
    Ok((stream, classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::{default_benchmark, generate_synthetic_stream};

    fn small_stream() -> Vec<Experience> {
        let mut spec = default_benchmark(13);
        for d in &mut spec.domains {
            d.train = 12;
            d.test = 6;
        }
        generate_synthetic_stream(&spec).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let stream = small_stream();
        let bytes = to_bytes(&stream, 3).unwrap();
        let (restored, classes) = from_bytes(&bytes).unwrap();
        assert_eq!(classes, 3);
        assert_eq!(stream, restored);
        assert_eq!(to_bytes(&restored, 3).unwrap(), bytes);
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = to_bytes(&small_stream(), 3).unwrap();
        let err = from_bytes(&bytes[..bytes.len() - 2]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.clstrm");
        let stream = small_stream();
        write_stream(&stream, 3, &path).unwrap();
        let (restored, _) = read_stream(&path).unwrap();
        assert_eq!(stream, restored);
    }
}
