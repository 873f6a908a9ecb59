//! IDX reader for the MNIST image and label files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const ROWS: usize = 28;
pub const COLS: usize = 28;
pub const PIXELS: usize = ROWS * COLS;

/// Images (row-major, one byte per pixel) with their digit labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    images: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() * PIXELS {
            return Err(Error::CountMismatch {
                images: images.len() / PIXELS,
                labels: labels.len(),
            });
        }
        if let Some(pos) = labels.iter().position(|&l| l > 9) {
            return Err(Error::BadLabel {
                path: PathBuf::new(),
                offset: pos,
                value: labels[pos],
            });
        }
        Ok(Dataset { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> Result<&[u8]> {
        self.images
            .get(i * PIXELS..(i + 1) * PIXELS)
            .ok_or_else(|| Error::param("index", format!("image {i} out of range ({} images)", self.len())))
    }

    pub fn label(&self, i: usize) -> Result<u8> {
        self.labels
            .get(i)
            .copied()
            .ok_or_else(|| Error::param("index", format!("label {i} out of range ({} labels)", self.len())))
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// First `n` samples (or all, if fewer).
    pub fn truncated(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images[..n * PIXELS].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len(),
            needed: offset + 4,
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::WrongMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], header: usize, len: usize, path: &Path) -> Result<()> {
    let end = header + len;
    if bytes.len() < end {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len(),
            needed: end,
        });
    }
    if bytes.len() > end {
        return Err(Error::TrailingData {
            path: path.to_path_buf(),
            offset: end,
        });
    }
    Ok(())
}

/// Parses an IDX3 image file held in memory; returns the pixel bytes.
/// `path` is only used in error messages.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, IMAGE_MAGIC, path)?;
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    if rows != ROWS {
        return Err(Error::BadDimensions {
            path: path.to_path_buf(),
            offset: 8,
            reason: format!("expected {ROWS} rows, found {rows}"),
        });
    }
    if cols != COLS {
        return Err(Error::BadDimensions {
            path: path.to_path_buf(),
            offset: 12,
            reason: format!("expected {COLS} columns, found {cols}"),
        });
    }
    let len = count.checked_mul(PIXELS).ok_or_else(|| Error::BadDimensions {
        path: path.to_path_buf(),
        offset: 4,
        reason: format!("image count {count} overflows"),
    })?;
    payload(bytes, 16, len, path)?;
    Ok(bytes[16..].to_vec())
}

/// Parses an IDX1 label file held in memory.
pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, path)?;
    let count = be_u32(bytes, 4, path)? as usize;
    payload(bytes, 8, count, path)?;
    let labels = &bytes[8..];
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::BadLabel {
            path: path.to_path_buf(),
            offset: 8 + pos,
            value: labels[pos],
        });
    }
    Ok(labels.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = parse_idx_images(&read(images_path)?, images_path)?;
    let labels = parse_idx_labels(&read(labels_path)?, labels_path)?;
    Dataset::new(images, labels)
}

/// Loads `train-*` or `t10k-*` files from an MNIST directory.
pub fn load_mnist_split(dir: &Path, train: bool) -> Result<Dataset> {
    let prefix = if train { "train" } else { "t10k" };
    load_mnist_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Serializes images and labels back to IDX bytes.
pub fn write_idx(dataset: &Dataset) -> (Vec<u8>, Vec<u8>) {
    let n = dataset.len() as u32;
    let mut img = Vec::with_capacity(16 + dataset.images.len());
    for v in [IMAGE_MAGIC, n, ROWS as u32, COLS as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(&dataset.images);
    let mut lab = Vec::with_capacity(8 + dataset.labels.len());
    for v in [LABEL_MAGIC, n] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    lab.extend_from_slice(&dataset.labels);
    (img, lab)
}
