//! Big-endian IDX files (the MNIST distribution format), optionally gzipped.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{Split, SplitTargets};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw unsigned-byte IDX array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::FormatError(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<IdxArray> {
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::FormatError("truncated header".into()))
    };
    let magic = word(0)?;
    if magic != expected_magic {
        return Err(Error::FormatError(format!(
            "bad magic {magic:#010x}, expected {expected_magic:#010x}"
        )));
    }
    // Low byte is the rank; 0x08 in the third byte means unsigned bytes.
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank)
        .map(|i| word(1 + i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 * (1 + rank);
    let n: usize = dims.iter().product();
    let body = &bytes[header.min(bytes.len())..];
    if body.len() < n {
        return Err(Error::FormatError(format!(
            "truncated payload: {} of {n} bytes",
            body.len()
        )));
    }
    if body.len() > n {
        return Err(Error::FormatError(format!(
            "{} trailing bytes after payload",
            body.len() - n
        )));
    }
    Ok(IdxArray {
        magic,
        dims,
        data: body.to_vec(),
    })
}

pub fn encode_idx(array: &IdxArray) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 * (1 + array.dims.len()) + array.data.len());
    out.extend_from_slice(&array.magic.to_be_bytes());
    for &d in &array.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    out
}

/// Reads an image/label file pair into a split of flattened pixel vectors
/// scaled to `[0, 1]` with labels `0..=9`.
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Split> {
    let images = parse_idx(&read_bytes(images_path.as_ref())?, IMAGES_MAGIC)?;
    let labels = parse_idx(&read_bytes(labels_path.as_ref())?, LABELS_MAGIC)?;
    if images.dims.len() != 3 {
        return Err(Error::FormatError(format!("image dims {:?}", images.dims)));
    }
    let (n, rows, cols) = (images.dims[0], images.dims[1], images.dims[2]);
    if labels.dims[0] != n {
        return Err(Error::FormatError(format!(
            "{n} images but {} labels",
            labels.dims[0]
        )));
    }
    let classes: Vec<usize> = labels.data.iter().map(|&l| l as usize).collect();
    if let Some(&bad) = classes.iter().find(|&&l| l > 9) {
        return Err(Error::FormatError(format!("label {bad} outside 0..=9")));
    }
    let features = images.data.iter().map(|&p| f64::from(p) / 255.0).collect();
    Ok(Split {
        features,
        dim: rows * cols,
        targets: SplitTargets::Class {
            labels: classes,
            classes: 10,
        },
    })
}

/// Conventional file names inside an MNIST directory; `.gz` variants are
/// preferred when present.
pub fn mnist_paths(dir: &Path, train: bool) -> (std::path::PathBuf, std::path::PathBuf) {
    let prefix = if train { "train" } else { "t10k" };
    let pick = |stem: String| {
        let gz = dir.join(format!("{stem}.gz"));
        if gz.exists() {
            gz
        } else {
            dir.join(stem)
        }
    };
    (
        pick(format!("{prefix}-images-idx3-ubyte")),
        pick(format!("{prefix}-labels-idx1-ubyte")),
    )
}
