//! `PSNT` tensor files: the 8-byte magic `PSNT0001`, a little-endian `u32`
//! header length, a UTF-8 JSON header `{"dtype":"f32","shape":[...]}` and the
//! raw little-endian payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::real::Real;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"PSNT0001";

#[derive(Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
}

pub fn encode<T: Real>(tensor: &Tensor<T>) -> Vec<u8> {
    let header = serde_json::to_vec(&Header { dtype: T::DTYPE.into(), shape: tensor.shape().to_vec() })
        .expect("header serializes");
    let mut out = Vec::with_capacity(12 + header.len() + tensor.len() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for &v in tensor.data() {
        v.write_le(&mut out);
    }
    out
}

/// Decodes a PSNT buffer, converting stored `f32`/`f64` payloads to `T`.
pub fn decode<T: Real>(bytes: &[u8]) -> Result<Tensor<T>> {
    let bad = |m: &str| TensorError::Format(m.to_string());
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("missing PSNT0001 magic"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| TensorError::Format(e.to_string()))?;
    let payload = &bytes[12 + hlen..];
    let n: usize = header.shape.iter().product();
    let data: Vec<T> = match header.dtype.as_str() {
        "f32" => {
            if payload.len() != n * 4 {
                return Err(bad("payload length does not match shape"));
            }
            payload.chunks_exact(4).map(|c| T::lit(f32::read_le(c) as f64)).collect()
        }
        "f64" => {
            if payload.len() != n * 8 {
                return Err(bad("payload length does not match shape"));
            }
            payload.chunks_exact(8).map(|c| T::lit(f64::read_le(c))).collect()
        }
        other => return Err(TensorError::Format(format!("unsupported dtype {other}"))),
    };
    Tensor::new(header.shape, data)
}

pub fn write<T: Real>(path: impl AsRef<Path>, tensor: &Tensor<T>) -> Result<()> {
    fs::write(path, encode(tensor))?;
    Ok(())
}

pub fn read<T: Real>(path: impl AsRef<Path>) -> Result<Tensor<T>> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let t = Tensor::<f32>::new(vec![2], vec![1.0, -2.5]).unwrap();
        let bytes = encode(&t);
        let header = br#"{"dtype":"f32","shape":[2]}"#;
        assert_eq!(&bytes[..8], b"PSNT0001");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize, header.len());
        assert_eq!(&bytes[12..12 + header.len()], header);
        assert_eq!(&bytes[12 + header.len()..], [1.0f32.to_le_bytes(), (-2.5f32).to_le_bytes()].concat());
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(decode::<f32>(b"NOTPSNT0").is_err());
        let mut bytes = encode(&Tensor::<f32>::zeros(&[3]));
        bytes.pop();
        assert!(decode::<f32>(&bytes).is_err());
    }
}
