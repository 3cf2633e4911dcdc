//! Versioned binary checkpoint: a JSON header (encoder config, head, max
//! length, instruction prefix) followed by name-sorted tensors as
//! little-endian f32. Writing is deterministic, so identical runs produce
//! byte-identical files.

use super::mat::Mat;
use super::{EncoderConfig, HeadKind, ModelError, Parameters};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"LQCP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    encoder: EncoderConfig,
    head: HeadKind,
    max_len: usize,
    instruction_prefix: String,
}

/// Everything needed to run inference: config, head choice, tokenizer
/// budget, and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub encoder: EncoderConfig,
    pub head: HeadKind,
    pub max_len: usize,
    pub instruction_prefix: String,
    pub params: Parameters,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            encoder: self.encoder,
            head: self.head,
            max_len: self.max_len,
            instruction_prefix: self.instruction_prefix.clone(),
        };
        let header_json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&header_json);
        out.extend_from_slice(&(self.params.tensor_count() as u32).to_le_bytes());
        for (name, mat) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(mat.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(mat.cols() as u32).to_le_bytes());
            for &value in mat.data() {
                out.extend_from_slice(&(value as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut reader = Reader { bytes, at: 0 };
        let magic = reader.take(4)?;
        if magic != MAGIC {
            return Err(ModelError::CheckpointFormat("bad magic".to_string()));
        }
        let version = reader.u32()?;
        if version != VERSION {
            return Err(ModelError::CheckpointFormat(format!(
                "unsupported version {version}"
            )));
        }
        let header_len = reader.u32()? as usize;
        let header: Header = serde_json::from_slice(reader.take(header_len)?)
            .map_err(|e| ModelError::CheckpointFormat(format!("bad header: {e}")))?;
        let tensor_count = reader.u32()? as usize;
        let mut params = Parameters::new();
        for _ in 0..tensor_count {
            let name_len = reader.u32()? as usize;
            let name = std::str::from_utf8(reader.take(name_len)?)
                .map_err(|_| ModelError::CheckpointFormat("tensor name not UTF-8".to_string()))?
                .to_string();
            let rows = reader.u32()? as usize;
            let cols = reader.u32()? as usize;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let raw = reader.take(4)?;
                data.push(f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64);
            }
            params.insert(&name, Mat::from_vec(rows, cols, data));
        }
        if reader.at != bytes.len() {
            return Err(ModelError::CheckpointFormat("trailing bytes".to_string()));
        }
        Ok(Checkpoint {
            encoder: header.encoder,
            head: header.head,
            max_len: header.max_len,
            instruction_prefix: header.instruction_prefix,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_bytes()).map_err(|e| ModelError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes = fs::read(path).map_err(|e| ModelError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Checkpoint::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.at + n > self.bytes.len() {
            return Err(ModelError::CheckpointFormat("truncated file".to_string()));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        let raw = self.take(4)?;
        Ok(u32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]))
    }
}
