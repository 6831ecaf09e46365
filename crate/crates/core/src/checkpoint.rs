//! Self-describing model checkpoints.
//!
//! Layout: the magic bytes `SEIK`, a little-endian `u32` format version, a
//! little-endian `u64` header length, a JSON header, then the raw parameter
//! payload. The header carries the element type, the architecture, the
//! training progress, and a tensor directory (name, shape, byte offset,
//! element count); the payload is every directory entry's elements
//! little-endian in order. Saving is deterministic: the same state produces
//! the same bytes, and a save/load/save round trip is bit-identical.
//!
//! Random state is not stored explicitly. Training derives every stream
//! from the master seed and the position in the schedule, so `seed` plus
//! `epochs_completed` reproduces the RNG exactly.

use std::fs;
use std::path::Path;

use ndgrad::{DType, Scalar, Tensor};
use serde::{Deserialize, Serialize};

use crate::network::{ConvLayer, Network, NetworkConfig};
use crate::optim::OptimizerKind;
use crate::{SeiError, SeiResult};

const MAGIC: &[u8; 4] = b"SEIK";
const VERSION: u32 = 1;

/// Where a training run stands, sufficient to resume it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainProgress {
    pub seed: u64,
    pub epochs_completed: u64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub betas: (f64, f64),
    pub adam_steps: u64,
}

/// A trained (or in-progress) model: parameters, schedule position, and the
/// optimizer's moment buffers when the optimizer has any.
#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub network: Network<T>,
    pub progress: TrainProgress,
    pub moments: Option<(Vec<Tensor<T>>, Vec<Tensor<T>>)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dtype: String,
    network: NetworkConfig,
    progress: TrainProgress,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
    elements: u64,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn encode(&self) -> SeiResult<Vec<u8>> {
        let mut directory = Vec::new();
        let mut payload: Vec<u8> = Vec::new();
        let mut push = |name: String, t: &Tensor<T>, payload: &mut Vec<u8>| {
            directory.push(TensorEntry {
                name,
                shape: t.shape().to_vec(),
                offset: payload.len() as u64,
                elements: t.len() as u64,
            });
            for &v in t.data() {
                v.write_le(payload);
            }
        };
        for (i, layer) in self.network.layers().iter().enumerate() {
            push(format!("layer{i}.weight"), &layer.weight, &mut payload);
            push(format!("layer{i}.bias"), &layer.bias, &mut payload);
        }
        if let Some((m, v)) = &self.moments {
            if m.len() != v.len() {
                return Err(SeiError::Checkpoint(format!(
                    "{} first moments but {} second",
                    m.len(),
                    v.len()
                )));
            }
            for (i, t) in m.iter().enumerate() {
                push(format!("adam.m{i}"), t, &mut payload);
            }
            for (i, t) in v.iter().enumerate() {
                push(format!("adam.v{i}"), t, &mut payload);
            }
        }
        let header = Header {
            dtype: T::DTYPE.name().to_string(),
            network: self.network.config().clone(),
            progress: self.progress.clone(),
            tensors: directory,
        };
        let header_json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + header_json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
        out.extend_from_slice(&header_json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> SeiResult<()> {
        fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn decode(bytes: &[u8]) -> SeiResult<Self> {
        let (header, payload) = split_header(bytes)?;
        if header.dtype != T::DTYPE.name() {
            return Err(SeiError::Checkpoint(format!(
                "stored as {}, requested {}",
                header.dtype,
                T::DTYPE.name()
            )));
        }
        let elem = T::DTYPE.size_bytes();
        let total: u64 = header.tensors.iter().map(|e| e.elements * elem as u64).sum();
        if payload.len() as u64 != total {
            return Err(SeiError::Checkpoint(format!(
                "payload is {} bytes, directory describes {}",
                payload.len(),
                total
            )));
        }
        let read = |name: &str| -> SeiResult<Tensor<T>> {
            let entry = header
                .tensors
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| SeiError::Checkpoint(format!("missing tensor {name}")))?;
            let start = entry.offset as usize;
            let n = entry.elements as usize;
            let end = start + n * elem;
            if end > payload.len() {
                return Err(SeiError::Checkpoint(format!("tensor {name} escapes the payload")));
            }
            let mut data = Vec::with_capacity(n);
            for i in 0..n {
                data.push(T::read_le(&payload[start + i * elem..start + (i + 1) * elem]));
            }
            Tensor::new(entry.shape.clone(), data)
                .map_err(|e| SeiError::Checkpoint(format!("tensor {name}: {e}")))
        };

        let depth = header.network.depth;
        let mut layers = Vec::with_capacity(depth);
        for i in 0..depth {
            layers.push(ConvLayer {
                weight: read(&format!("layer{i}.weight"))?,
                bias: read(&format!("layer{i}.bias"))?,
            });
        }
        let network = Network::from_parts(header.network.clone(), layers)?;

        let have_moments = header.tensors.iter().any(|e| e.name == "adam.m0");
        let moments = if have_moments {
            let n = 2 * depth;
            let mut m = Vec::with_capacity(n);
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                m.push(read(&format!("adam.m{i}"))?);
                v.push(read(&format!("adam.v{i}"))?);
            }
            Some((m, v))
        } else {
            None
        };

        Ok(Checkpoint { network, progress: header.progress, moments })
    }

    pub fn load(path: &Path) -> SeiResult<Self> {
        Self::decode(&fs::read(path)?)
    }
}

fn split_header(bytes: &[u8]) -> SeiResult<(Header, &[u8])> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(SeiError::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SeiError::Checkpoint(format!(
            "format version {version}, this build reads {VERSION}"
        )));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if 16 + header_len > bytes.len() {
        return Err(SeiError::Checkpoint("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[16..16 + header_len])?;
    Ok((header, &bytes[16 + header_len..]))
}

/// Element type of a stored checkpoint, without loading the payload.
pub fn peek_dtype(path: &Path) -> SeiResult<DType> {
    let bytes = fs::read(path)?;
    let (header, _) = split_header(&bytes)?;
    DType::parse(&header.dtype)
        .ok_or_else(|| SeiError::Checkpoint(format!("unknown dtype {}", header.dtype)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_checkpoint(seed: u64) -> Checkpoint<f32> {
        let cfg = NetworkConfig {
            channels: 3,
            depth: 2,
            kernel_size: 3,
            residual: true,
            factor: 2,
            in_channels: 1,
        };
        let network = Network::<f32>::init(&cfg, seed).unwrap();
        let shapes: Vec<Vec<usize>> =
            network.parameters().iter().map(|p| p.shape().to_vec()).collect();
        let m: Vec<Tensor<f32>> = shapes
            .iter()
            .map(|s| Tensor::from_fn(s.clone(), |i| (i as f32 + 1.0) * 0.25))
            .collect();
        let v: Vec<Tensor<f32>> =
            shapes.iter().map(|s| Tensor::from_fn(s.clone(), |i| i as f32 * 0.5)).collect();
        Checkpoint {
            network,
            progress: TrainProgress {
                seed: 42,
                epochs_completed: 3,
                optimizer: OptimizerKind::Adam,
                lr: 5e-4,
                betas: (0.9, 0.999),
                adam_steps: 1200,
            },
            moments: Some((m, v)),
        }
    }

    #[test]
    fn save_load_save_is_bit_identical() {
        let ck = sample_checkpoint(1);
        let bytes = ck.encode().unwrap();
        let back = Checkpoint::<f32>::decode(&bytes).unwrap();
        assert_eq!(back.encode().unwrap(), bytes);
        assert_eq!(back.progress, ck.progress);
        for (a, b) in back.network.parameters().iter().zip(ck.network.parameters().iter()) {
            assert_eq!(a.data(), b.data());
            assert_eq!(a.shape(), b.shape());
        }
        let (m0, v0) = ck.moments.as_ref().unwrap();
        let (m1, v1) = back.moments.as_ref().unwrap();
        for (a, b) in m1.iter().zip(m0).chain(v1.iter().zip(v0)) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn files_round_trip_and_report_their_dtype() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = sample_checkpoint(2);
        ck.save(&path).unwrap();
        assert_eq!(peek_dtype(&path).unwrap(), DType::F32);
        let back = Checkpoint::<f32>::load(&path).unwrap();
        assert_eq!(back.encode().unwrap(), ck.encode().unwrap());
    }

    #[test]
    fn dtype_mismatch_is_rejected_not_coerced() {
        let bytes = sample_checkpoint(3).encode().unwrap();
        let err = Checkpoint::<f64>::decode(&bytes).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("f32") && msg.contains("f64"), "{msg}");
    }

    #[test]
    fn corrupted_inputs_are_detected() {
        let bytes = sample_checkpoint(4).encode().unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(Checkpoint::<f32>::decode(&bad_magic).is_err());

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(Checkpoint::<f32>::decode(&bad_version).is_err());

        let truncated = &bytes[..bytes.len() - 3];
        assert!(Checkpoint::<f32>::decode(truncated).is_err());

        let mut extended = bytes.clone();
        extended.push(0);
        assert!(Checkpoint::<f32>::decode(&extended).is_err());
    }

    #[test]
    fn moment_free_checkpoints_stay_moment_free() {
        let mut ck = sample_checkpoint(5);
        ck.moments = None;
        ck.progress.optimizer = OptimizerKind::Sgd;
        let back = Checkpoint::<f32>::decode(&ck.encode().unwrap()).unwrap();
        assert!(back.moments.is_none());
        assert_eq!(back.progress.optimizer, OptimizerKind::Sgd);
    }
}
