//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SDGC"  u32 version  u32 layer_count  u32 widths[layer_count + 1]
//! u8 hidden_activation  u8 output_activation  u64 seed
//! u32 tag_len  tag bytes (UTF-8)
//! u8 has_schedule  [u32 steps  f64 beta_start  f64 beta_end]
//! per layer: f64 weights[out * in] (row-major)  f64 biases[out]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mlp::{Activation, Layer, MlpModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SDGC";
pub const VERSION: u32 = 1;

/// Diffusion schedule parameters stored with denoiser checkpoints so a
/// model is never paired with a schedule it was not trained under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStamp {
    pub steps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckpointHeader {
    /// Free-form role name such as `"eps_z"`, `"eps_h"` or `"decoder"`.
    pub tag: String,
    pub schedule: Option<ScheduleStamp>,
}

impl CheckpointHeader {
    pub fn tagged(tag: impl Into<String>) -> Self {
        CheckpointHeader {
            tag: tag.into(),
            schedule: None,
        }
    }
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    model: &MlpModel,
    header: &CheckpointHeader,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let widths = model.widths();
    write_u32(&mut w, widths.len() - 1)?;
    for &width in widths {
        write_u32(&mut w, width)?;
    }
    w.write_all(&[
        model.hidden_activation().code(),
        model.output_activation().code(),
    ])?;
    w.write_all(&model.seed().to_le_bytes())?;
    write_u32(&mut w, header.tag.len())?;
    w.write_all(header.tag.as_bytes())?;
    match header.schedule {
        None => w.write_all(&[0])?,
        Some(s) => {
            w.write_all(&[1])?;
            w.write_all(&s.steps.to_le_bytes())?;
            w.write_all(&s.beta_start.to_le_bytes())?;
            w.write_all(&s.beta_end.to_le_bytes())?;
        }
    }
    for layer in model.layers() {
        for v in layer.weights.iter().chain(&layer.biases) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(MlpModel, CheckpointHeader)> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let layer_count = read_u32(&mut r, "layer count")? as usize;
    if layer_count == 0 || layer_count > 1024 {
        return Err(Error::Format(format!(
            "implausible layer count {layer_count}"
        )));
    }
    let mut widths = Vec::with_capacity(layer_count + 1);
    for _ in 0..=layer_count {
        widths.push(read_u32(&mut r, "width")? as usize);
    }
    if widths.iter().any(|&w| w == 0) {
        return Err(Error::Format(format!("zero width in {widths:?}")));
    }
    let mut acts = [0u8; 2];
    read_exact(&mut r, &mut acts, "activations")?;
    let hidden = Activation::from_code(acts[0])?;
    let output = Activation::from_code(acts[1])?;
    let mut seed = [0u8; 8];
    read_exact(&mut r, &mut seed, "seed")?;
    let seed = u64::from_le_bytes(seed);
    let tag_len = read_u32(&mut r, "tag length")? as usize;
    if tag_len > 4096 {
        return Err(Error::Format(format!("implausible tag length {tag_len}")));
    }
    let mut tag = vec![0u8; tag_len];
    read_exact(&mut r, &mut tag, "tag")?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Format("tag is not UTF-8".into()))?;
    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag, "schedule flag")?;
    let schedule = match flag[0] {
        0 => None,
        1 => Some(ScheduleStamp {
            steps: read_u32(&mut r, "schedule steps")?,
            beta_start: read_f64(&mut r, "beta start")?,
            beta_end: read_f64(&mut r, "beta end")?,
        }),
        other => return Err(Error::Format(format!("bad schedule flag {other}"))),
    };
    let mut layers = Vec::with_capacity(layer_count);
    for pair in widths.windows(2) {
        let (inputs, outputs) = (pair[0], pair[1]);
        let weights = read_f64s(&mut r, inputs * outputs)?;
        let biases = read_f64s(&mut r, outputs)?;
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            biases,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format(
            "trailing bytes after checkpoint parameters".into(),
        ));
    }
    let model = MlpModel::from_layers(layers, hidden, output, seed)?;
    Ok((model, CheckpointHeader { tag, schedule }))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => {
            Error::Format(format!("checkpoint truncated in {what}"))
        }
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact(r, &mut bytes, "parameters")?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "checkpoint parameters".into(),
            index,
        });
    }
    Ok(values)
}

pub fn to_bytes(model: &MlpModel, header: &CheckpointHeader) -> Vec<u8> {
    let mut out = Vec::new();
    write_checkpoint(&mut out, model, header).expect("writing to a Vec cannot fail");
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(MlpModel, CheckpointHeader)> {
    read_checkpoint(bytes)
}

pub fn save(path: impl AsRef<Path>, model: &MlpModel, header: &CheckpointHeader) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, header)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(MlpModel, CheckpointHeader)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = MlpModel::new(&[5, 7, 3], Activation::Tanh, 99)
            .unwrap()
            .with_output_activation(Activation::Identity);
        let header = CheckpointHeader {
            tag: "eps_z".into(),
            schedule: Some(ScheduleStamp {
                steps: 200,
                beta_start: 1e-4,
                beta_end: 0.1,
            }),
        };
        let bytes = to_bytes(&model, &header);
        let (back, h2) = from_bytes(&bytes).unwrap();
        assert_eq!(h2, header);
        assert_eq!(back, model);
        assert_eq!(to_bytes(&back, &h2), bytes);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let model = MlpModel::new(&[2, 2], Activation::Relu, 1).unwrap();
        let mut bytes = to_bytes(&model, &CheckpointHeader::default());
        assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());
        bytes[0] = b'X';
        assert!(matches!(from_bytes(&bytes), Err(Error::Format(_))));
    }
}
