//! Dataset directory layout:
//!
//! - `meta.json`: `{name, num_nodes, num_features, num_classes}`
//! - `edges.tsv`: one `u<TAB>v` per undirected edge, 0-indexed, `u < v`
//! - `features.bin`: magic `SSGEF001`, then `n`, `p` as u64 LE, then
//!   `n*p` f32 LE values row-major (widened to f64 on load)
//! - `labels.tsv`: one `node<TAB>label` per node
//! - `splits.json`: `{train: [...], val: [...], test: [...]}`
//!
//! The loader cross-checks every count against `meta.json`, rejects
//! self-loops, duplicate undirected pairs, out-of-range labels, and
//! non-finite features.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ssge_core::eval::SplitSpec;
use ssge_core::graph::EdgeList;
use ssge_core::{RealGraph, RealMatrix};

use crate::error::{IoError, Result};

pub const FEATURES_MAGIC: &[u8; 8] = b"SSGEF001";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    name: String,
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Splits {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// A loaded dataset: raw graph (no self-loops), dense features, labels,
/// and the public split. Immutable after load.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: RealGraph,
    pub features: RealMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: SplitSpec,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn parse_tsv_pair(path: &Path, line_no: usize, line: &str) -> Result<(usize, usize)> {
    let mut it = line.split('\t');
    let err = || IoError::format(path, format!("line {}: expected two tab-separated integers", line_no + 1));
    let a = it.next().ok_or_else(err)?.trim().parse::<usize>().map_err(|_| err())?;
    let b = it.next().ok_or_else(err)?.trim().parse::<usize>().map_err(|_| err())?;
    if it.next().is_some() {
        return Err(err());
    }
    Ok((a, b))
}

fn load_features(path: &Path, n: usize, p: usize) -> Result<RealMatrix> {
    let mut file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(|e| IoError::io(path, e))?;
    if &magic != FEATURES_MAGIC {
        return Err(IoError::Magic { path: path.into(), expected: "SSGEF001" });
    }
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(|e| IoError::io(path, e))?;
    let rows = u64::from_le_bytes(header[..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
    if rows != n || cols != p {
        return Err(IoError::format(
            path,
            format!("header says {rows}x{cols}, meta.json says {n}x{p}"),
        ));
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| IoError::io(path, e))?;
    if payload.len() != n * p * 4 {
        return Err(IoError::format(
            path,
            format!("expected {} bytes of f32 data, found {}", n * p * 4, payload.len()),
        ));
    }
    let mut m = RealMatrix::zeros(n, p);
    for (v, chunk) in m.data_mut().iter_mut().zip(payload.chunks_exact(4)) {
        *v = f64::from(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    if !m.is_finite() {
        return Err(IoError::format(path, "non-finite feature value"));
    }
    Ok(m)
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read_to_string(&meta_path)?)
        .map_err(|e| IoError::Json { path: meta_path.clone(), source: e })?;
    if meta.num_classes == 0 {
        return Err(IoError::format(&meta_path, "num_classes must be positive"));
    }

    let edges_path = dir.join("edges.tsv");
    let mut pairs = Vec::new();
    for (i, line) in read_to_string(&edges_path)?.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (u, v) = parse_tsv_pair(&edges_path, i, line)?;
        if u >= v {
            return Err(IoError::format(
                &edges_path,
                format!("line {}: edges must satisfy u < v (self-loops are not allowed)", i + 1),
            ));
        }
        pairs.push((u, v));
    }
    // Duplicate pairs and index bounds are rejected by graph construction.
    let graph = RealGraph::from_edges(&EdgeList::new(pairs), meta.num_nodes)?;

    let features = load_features(&dir.join("features.bin"), meta.num_nodes, meta.num_features)?;

    let labels_path = dir.join("labels.tsv");
    let mut labels = vec![usize::MAX; meta.num_nodes];
    let mut count = 0usize;
    for (i, line) in read_to_string(&labels_path)?.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (node, label) = parse_tsv_pair(&labels_path, i, line)?;
        if node >= meta.num_nodes {
            return Err(IoError::format(&labels_path, format!("line {}: node {node} out of range", i + 1)));
        }
        if label >= meta.num_classes {
            return Err(IoError::format(&labels_path, format!("line {}: label {label} out of range", i + 1)));
        }
        if labels[node] != usize::MAX {
            return Err(IoError::format(&labels_path, format!("line {}: node {node} labeled twice", i + 1)));
        }
        labels[node] = label;
        count += 1;
    }
    if count != meta.num_nodes {
        return Err(IoError::format(
            &labels_path,
            format!("{count} labels for {} nodes", meta.num_nodes),
        ));
    }

    let splits_path = dir.join("splits.json");
    let splits: Splits = serde_json::from_str(&read_to_string(&splits_path)?)
        .map_err(|e| IoError::Json { path: splits_path.clone(), source: e })?;
    let splits = SplitSpec { train: splits.train, val: splits.val, test: splits.test };
    splits.validate(meta.num_nodes)?;

    Ok(Dataset {
        name: meta.name,
        graph,
        features,
        labels,
        num_classes: meta.num_classes,
        splits,
    })
}

/// Writes a dataset in the canonical directory layout. Feature values are
/// narrowed to f32 (datasets loaded from disk round-trip bit-exactly,
/// since they were widened from f32).
pub fn save_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;

    let meta = Meta {
        name: ds.name.clone(),
        num_nodes: ds.graph.num_nodes(),
        num_features: ds.features.cols(),
        num_classes: ds.num_classes,
    };
    let meta_path = dir.join("meta.json");
    let body = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&meta_path, body + "\n").map_err(|e| IoError::io(&meta_path, e))?;

    let edges_path = dir.join("edges.tsv");
    let mut out = String::new();
    for (u, v) in ds.graph.undirected_edges() {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(&edges_path, out).map_err(|e| IoError::io(&edges_path, e))?;

    let feat_path = dir.join("features.bin");
    let mut file = fs::File::create(&feat_path).map_err(|e| IoError::io(&feat_path, e))?;
    file.write_all(FEATURES_MAGIC).map_err(|e| IoError::io(&feat_path, e))?;
    file.write_all(&(ds.features.rows() as u64).to_le_bytes())
        .map_err(|e| IoError::io(&feat_path, e))?;
    file.write_all(&(ds.features.cols() as u64).to_le_bytes())
        .map_err(|e| IoError::io(&feat_path, e))?;
    let mut payload = Vec::with_capacity(ds.features.data().len() * 4);
    for &v in ds.features.data() {
        payload.extend_from_slice(&(v as f32).to_le_bytes());
    }
    file.write_all(&payload).map_err(|e| IoError::io(&feat_path, e))?;

    let labels_path = dir.join("labels.tsv");
    let mut out = String::new();
    for (i, &l) in ds.labels.iter().enumerate() {
        out.push_str(&format!("{i}\t{l}\n"));
    }
    fs::write(&labels_path, out).map_err(|e| IoError::io(&labels_path, e))?;

    let splits_path = dir.join("splits.json");
    let splits = Splits {
        train: ds.splits.train.clone(),
        val: ds.splits.val.clone(),
        test: ds.splits.test.clone(),
    };
    let body = serde_json::to_string(&splits).expect("splits serialize");
    fs::write(&splits_path, body + "\n").map_err(|e| IoError::io(&splits_path, e))?;
    Ok(())
}

/// Absolute path of a dataset directory given a workspace-relative name;
/// used by tests and examples.
pub fn dataset_dir(root: impl Into<PathBuf>, name: &str) -> PathBuf {
    root.into().join("data").join(name)
}
