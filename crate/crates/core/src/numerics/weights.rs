//! Flat weight files: an 8-byte little-endian header length, a UTF-8 JSON
//! header describing the layer shapes, then every parameter as a
//! little-endian `f64` (per layer: weights row-major, then bias).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Activation, DenseLayer, DenseNet};
use super::NumericsError;

pub const WEIGHTS_FORMAT: &str = "coverart-densenet-f64le";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub format: String,
    pub version: u32,
    pub frozen: bool,
    pub layers: Vec<LayerShape>,
    /// Owner-specific metadata (generator config, training stats, ...).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn write_weights<W: Write>(
    net: &DenseNet,
    metadata: serde_json::Value,
    mut writer: W,
) -> Result<(), NumericsError> {
    let header = WeightsHeader {
        format: WEIGHTS_FORMAT.to_string(),
        version: WEIGHTS_VERSION,
        frozen: net.is_frozen(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerShape {
                input_dim: l.input_dim(),
                output_dim: l.output_dim(),
                activation: l.activation(),
            })
            .collect(),
        metadata,
    };
    let json = serde_json::to_vec(&header).map_err(|e| NumericsError::Format(e.to_string()))?;
    writer.write_all(&(json.len() as u64).to_le_bytes())?;
    writer.write_all(&json)?;
    for value in net.params_flat() {
        writer.write_all(&value.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_weights<R: Read>(mut reader: R) -> Result<(DenseNet, WeightsHeader), NumericsError> {
    let mut len_bytes = [0u8; 8];
    reader.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes);
    if header_len > 1 << 24 {
        return Err(NumericsError::Format(format!(
            "implausible header length {header_len}"
        )));
    }
    let mut json = vec![0u8; header_len as usize];
    reader.read_exact(&mut json)?;
    let header: WeightsHeader =
        serde_json::from_slice(&json).map_err(|e| NumericsError::Format(e.to_string()))?;
    if header.format != WEIGHTS_FORMAT || header.version != WEIGHTS_VERSION {
        return Err(NumericsError::Format(format!(
            "unsupported weights format {} v{}",
            header.format, header.version
        )));
    }
    let mut layers = Vec::with_capacity(header.layers.len());
    let mut buf = [0u8; 8];
    for shape in &header.layers {
        let mut read_values = |count: usize| -> Result<Vec<f64>, NumericsError> {
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                reader.read_exact(&mut buf)?;
                values.push(f64::from_le_bytes(buf));
            }
            Ok(values)
        };
        let weights = read_values(shape.input_dim * shape.output_dim)?;
        let bias = read_values(shape.output_dim)?;
        layers.push(DenseLayer::new(
            shape.input_dim,
            shape.output_dim,
            weights,
            bias,
            shape.activation,
        )?);
    }
    if reader.read(&mut buf)? != 0 {
        return Err(NumericsError::Format(
            "trailing bytes after parameters".into(),
        ));
    }
    let mut net = DenseNet::new(layers)?;
    if header.frozen {
        net.freeze();
    }
    Ok((net, header))
}

pub fn save_weights(
    net: &DenseNet,
    metadata: serde_json::Value,
    path: &Path,
) -> Result<(), NumericsError> {
    let file = File::create(path).map_err(|e| NumericsError::io_at(path, e))?;
    write_weights(net, metadata, BufWriter::new(file))
}

pub fn load_weights(path: &Path) -> Result<(DenseNet, WeightsHeader), NumericsError> {
    let file = File::open(path).map_err(|e| NumericsError::io_at(path, e))?;
    read_weights(BufReader::new(file))
}
