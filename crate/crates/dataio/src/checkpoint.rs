//! Model checkpoints: magic `SSGEMDL1`, layer count as u64 LE, then per
//! layer rows and cols as u64 LE followed by the weights as f64 LE
//! row-major.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ssge_core::{RealMatrix, RealModel};

use crate::error::{IoError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SSGEMDL1";

pub fn save_checkpoint(model: &RealModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    file.write_all(CHECKPOINT_MAGIC).map_err(|e| IoError::io(path, e))?;
    file.write_all(&(model.num_layers() as u64).to_le_bytes())
        .map_err(|e| IoError::io(path, e))?;
    for layer in model.layers() {
        file.write_all(&(layer.rows() as u64).to_le_bytes()).map_err(|e| IoError::io(path, e))?;
        file.write_all(&(layer.cols() as u64).to_le_bytes()).map_err(|e| IoError::io(path, e))?;
        let mut payload = Vec::with_capacity(layer.data().len() * 8);
        for &v in layer.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&payload).map_err(|e| IoError::io(path, e))?;
    }
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<RealModel> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(|e| IoError::io(path, e))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(IoError::Magic { path: path.into(), expected: "SSGEMDL1" });
    }
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf).map_err(|e| IoError::io(path, e))?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        file.read_exact(&mut u64buf).map_err(|e| IoError::io(path, e))?;
        let rows = u64::from_le_bytes(u64buf) as usize;
        file.read_exact(&mut u64buf).map_err(|e| IoError::io(path, e))?;
        let cols = u64::from_le_bytes(u64buf) as usize;
        let mut payload = vec![0u8; rows * cols * 8];
        file.read_exact(&mut payload).map_err(|e| IoError::io(path, e))?;
        let mut m = RealMatrix::zeros(rows, cols);
        for (v, chunk) in m.data_mut().iter_mut().zip(payload.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        layers.push(m);
    }
    let mut rest = Vec::new();
    file.read_to_end(&mut rest).map_err(|e| IoError::io(path, e))?;
    if !rest.is_empty() {
        return Err(IoError::format(path, format!("{} trailing bytes", rest.len())));
    }
    Ok(RealModel::new(layers)?)
}
