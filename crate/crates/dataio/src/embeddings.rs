//! Embedding blobs: magic `SSGEEMB1`, rows and cols as u64 LE, then f64
//! LE values row-major. Round-trips are bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ssge_core::RealMatrix;

use crate::error::{IoError, Result};

pub const EMBEDDINGS_MAGIC: &[u8; 8] = b"SSGEEMB1";

pub fn save_embeddings(m: &RealMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if !m.is_finite() {
        return Err(IoError::format(path, "refusing to write non-finite embeddings"));
    }
    let mut file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    file.write_all(EMBEDDINGS_MAGIC).map_err(|e| IoError::io(path, e))?;
    file.write_all(&(m.rows() as u64).to_le_bytes()).map_err(|e| IoError::io(path, e))?;
    file.write_all(&(m.cols() as u64).to_le_bytes()).map_err(|e| IoError::io(path, e))?;
    let mut payload = Vec::with_capacity(m.data().len() * 8);
    for &v in m.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&payload).map_err(|e| IoError::io(path, e))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<RealMatrix> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(|e| IoError::io(path, e))?;
    if &magic != EMBEDDINGS_MAGIC {
        return Err(IoError::Magic { path: path.into(), expected: "SSGEEMB1" });
    }
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(|e| IoError::io(path, e))?;
    let rows = u64::from_le_bytes(header[..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| IoError::io(path, e))?;
    if payload.len() != rows * cols * 8 {
        return Err(IoError::format(
            path,
            format!("expected {} bytes of f64 data, found {}", rows * cols * 8, payload.len()),
        ));
    }
    let mut m = RealMatrix::zeros(rows, cols);
    for (v, chunk) in m.data_mut().iter_mut().zip(payload.chunks_exact(8)) {
        *v = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(m)
}
