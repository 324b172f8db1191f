//! Binary feature-file container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FGTS"
//! 4       2     version (u16 LE), currently 1
//! 6       4     header length H (u32 LE)
//! 10      H     UTF-8 JSON {"n_cls":..,"n_reg":..,"grid_h":..,"grid_w":..,"dim":..}
//! 10+H    N*D*4 float32 LE payload, row-major (row = token)
//! ```
//!
//! The header may carry an optional free-form `"meta"` string. Readers
//! reject anything malformed instead of repairing it.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::TokenLayout;
use crate::tensor::FeatureTensor;

pub const MAGIC: [u8; 4] = *b"FGTS";
pub const VERSION: u16 = 1;
/// Bytes before the JSON header: magic, version, header length.
pub const PREAMBLE_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileHeader {
    pub n_cls: usize,
    pub n_reg: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
}

impl FileHeader {
    pub fn layout(&self) -> TokenLayout {
        TokenLayout {
            n_cls: self.n_cls,
            n_reg: self.n_reg,
            grid_h: self.grid_h,
            grid_w: self.grid_w,
        }
    }
}

pub fn encode(tensor: &FeatureTensor) -> Result<Vec<u8>> {
    // FeatureTensor upholds finiteness, but the writer checks again since
    // the payload is the contract.
    let dim = tensor.dim();
    if let Some(pos) = tensor.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            token: pos / dim,
            dim: pos % dim,
        });
    }
    let layout = tensor.layout();
    let header = FileHeader {
        n_cls: layout.n_cls,
        n_reg: layout.n_reg,
        grid_h: layout.grid_h,
        grid_w: layout.grid_w,
        dim,
        meta: tensor.meta().map(str::to_owned),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let header_len = u32::try_from(header.len())
        .map_err(|_| Error::MalformedHeader("header longer than u32::MAX".into()))?;

    let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + tensor.data().len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses only the preamble and JSON header; returns the header and the
/// payload offset.
pub fn decode_header(bytes: &[u8]) -> Result<(FileHeader, usize)> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedHeader(format!(
            "{} bytes, magic needs 4",
            bytes.len()
        )));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(Error::TruncatedHeader(format!(
            "{} bytes, preamble needs {PREAMBLE_LEN}",
            bytes.len()
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let header_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let payload_start = PREAMBLE_LEN
        .checked_add(header_len)
        .ok_or_else(|| Error::TruncatedHeader("header length overflows".into()))?;
    if bytes.len() < payload_start {
        return Err(Error::TruncatedHeader(format!(
            "declared {header_len} header bytes, {} available",
            bytes.len() - PREAMBLE_LEN
        )));
    }
    let header_text = std::str::from_utf8(&bytes[PREAMBLE_LEN..payload_start])
        .map_err(|e| Error::MalformedHeader(format!("header is not UTF-8: {e}")))?;
    let header: FileHeader =
        serde_json::from_str(header_text).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    Ok((header, payload_start))
}

pub fn decode(bytes: &[u8]) -> Result<FeatureTensor> {
    let (header, payload_start) = decode_header(bytes)?;
    let layout = header.layout();
    layout.check()?;
    if header.dim == 0 {
        return Err(Error::LayoutInconsistency("dim must be positive".into()));
    }
    let expected = layout
        .n_tokens()
        .checked_mul(header.dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::LayoutInconsistency("payload size overflows".into()))?;
    let payload = &bytes[payload_start..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::LayoutInconsistency(format!(
            "{} trailing bytes after {expected}-byte payload",
            payload.len() - expected
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut tensor = FeatureTensor::new(layout, header.dim, data)?;
    tensor.set_meta(header.meta);
    Ok(tensor)
}

pub fn write_feature_file(tensor: &FeatureTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(tensor)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
